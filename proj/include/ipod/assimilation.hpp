/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

// Description: The optimization layer. Discrete tracking objective, exact
//              adjoint gradient, the compressed-trajectory inexact gradient
//              (forward sweep streamed into the incremental POD, backward
//              sweep driven by decompressed snapshots), and constant-step
//              steepest descent over either. A snapshot accounting counter
//              verifies the memory contract of the two modes.

#ifndef IPOD_ASSIMILATION_HPP
#define IPOD_ASSIMILATION_HPP

#include "ipod/burgers.hpp"
#include "ipod/incremental_pod.hpp"
#include "ipod/interface_problem.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace ipod {

/// Raised when a descent run produces a non-finite objective. Carries the
/// iterations completed before the blow-up.
class DivergenceError;

enum class TerminationMode { grad_norm, objective_decrement };
enum class DescentMode { exact, inexact };
enum class WeightChoice { l2_mass, h1 };

struct AssimilationConfig {
    double gamma = 0.0;   ///< Tikhonov weight on the initial condition
    double kappa = 1.0;   ///< descent step size
    double tol_sd = 1e-5; ///< termination tolerance
    TerminationMode termination = TerminationMode::grad_norm;
    int max_iters = 1000;
    IpodTolerances compression;
    WeightChoice weight_choice = WeightChoice::l2_mass;
    /// Compute a reference exact gradient each inexact iteration and record
    /// the measured gradient error. Defeats the memory savings; diagnostics
    /// only.
    bool reference_gradient = false;

    void validate() const;
};

struct IterationRecord {
    int iter = 0;
    double objective = 0.0;
    double grad_norm = 0.0;                 // |grad|_M
    std::optional<double> gradient_error;   // |xi|_M when a reference was computed
    double e_p = 0.0;
    double e_sv = 0.0;
    Eigen::Index rank = 0;
    int peak_snapshots = 0;
    double wall_seconds = 0.0;
};

/// Counts uncompressed forward snapshots alive at a time. Exact sweeps retain
/// the whole trajectory; compressed sweeps must peak at one.
struct SnapshotCounter {
    int current = 0;
    int peak = 0;
    void acquire(int n = 1) {
        current += n;
        peak = std::max(peak, current);
    }
    void release(int n = 1) { current -= n; }
};

/// Uniform view of the two dynamics so the optimization layer is written
/// once. Implementations wrap the free stepping functions of the problem
/// modules.
class ForwardModel {
public:
    virtual ~ForwardModel() = default;
    virtual Eigen::Index dim() const = 0;
    virtual int num_steps() const = 0;
    virtual double tau() const = 0;
    virtual const SpMat& mass() const = 0;
    virtual WeightOperator weight(WeightChoice choice) const = 0;
    virtual Eigen::VectorXd forward_step(const Eigen::VectorXd& u_prev, int j) const = 0;
    /// Backward recursion step at level j given the forward snapshot u_j and
    /// the observation of the same level.
    virtual Eigen::VectorXd adjoint_step(const Eigen::VectorXd& lambda_next, int j,
                                         const Eigen::VectorXd& u_j,
                                         const Eigen::VectorXd& obs_j) const = 0;

    double mass_norm(const Eigen::VectorXd& v) const;
    double mass_norm_sq(const Eigen::VectorXd& v) const;
};

class LinearInterfaceModel final : public ForwardModel {
public:
    explicit LinearInterfaceModel(std::shared_ptr<const DiscreteProblem> problem);
    Eigen::Index dim() const override;
    int num_steps() const override;
    double tau() const override;
    const SpMat& mass() const override;
    WeightOperator weight(WeightChoice choice) const override;
    Eigen::VectorXd forward_step(const Eigen::VectorXd& u_prev, int j) const override;
    Eigen::VectorXd adjoint_step(const Eigen::VectorXd& lambda_next, int j,
                                 const Eigen::VectorXd& u_j,
                                 const Eigen::VectorXd& obs_j) const override;
    const DiscreteProblem& problem() const { return *problem_; }

private:
    std::shared_ptr<const DiscreteProblem> problem_;
};

class BurgersModel final : public ForwardModel {
public:
    explicit BurgersModel(std::shared_ptr<const Burgers1dProblem> problem);
    Eigen::Index dim() const override;
    int num_steps() const override;
    double tau() const override;
    const SpMat& mass() const override;
    WeightOperator weight(WeightChoice choice) const override;
    Eigen::VectorXd forward_step(const Eigen::VectorXd& u_prev, int j) const override;
    Eigen::VectorXd adjoint_step(const Eigen::VectorXd& lambda_next, int j,
                                 const Eigen::VectorXd& u_j,
                                 const Eigen::VectorXd& obs_j) const override;
    const Burgers1dProblem& problem() const { return *problem_; }

private:
    std::shared_ptr<const Burgers1dProblem> problem_;
};

/// (tau/2) sum_j |obs_j - u_j|_M^2 + (gamma/2) |u0|_M^2 along the forward
/// solve from u0.
double objective(const ForwardModel& model, const Eigen::VectorXd& u0, const ObservationSet& obs,
                 double gamma);

struct ExactGradientResult {
    Eigen::VectorXd gradient;
    double objective = 0.0;
    Trajectory trajectory;  // retained forward sweep (storage accounting)
};

/// Adjoint gradient with the full trajectory retained: forward solve, then
/// the backward sweep from the zero terminal condition; the gradient is
/// -lambda_1 + gamma u0.
ExactGradientResult gradient_exact(const ForwardModel& model, const Eigen::VectorXd& u0,
                                   const ObservationSet& obs, double gamma,
                                   SnapshotCounter* counter = nullptr);

struct CompressedGradientResult {
    Eigen::VectorXd gradient;
    double objective = 0.0;
    CompressedTrajectory compression;
};

/// Inexact gradient: the forward sweep feeds sqrt(tau)-scaled snapshots into
/// the incremental POD and discards them; the backward sweep decompresses
/// snapshot by snapshot, using the reconstruction both in the linearization
/// point and in the observation mismatch.
CompressedGradientResult gradient_compressed(const ForwardModel& model, const Eigen::VectorXd& u0,
                                             const ObservationSet& obs, double gamma,
                                             const IpodTolerances& tols, WeightChoice weight,
                                             SnapshotCounter* counter = nullptr);

struct DescentResult {
    std::vector<IterationRecord> records;
    Eigen::VectorXd final_u0;
    std::optional<CompressedTrajectory> final_compression;  // inexact mode, last iteration
    bool hit_max_iters = false;
    int iterations() const { return static_cast<int>(records.size()); }
};

/// Constant-step steepest descent, exact or compressed gradients. Terminates
/// on kappa * |grad|_M <= tol_sd (grad-norm mode, the norm of the gradient
/// just applied) or |J_i - J_{i-1}| <= tol_sd (decrement mode), bounded by
/// max_iters.
DescentResult run_descent(const ForwardModel& model, const ObservationSet& obs,
                          const AssimilationConfig& config, const Eigen::VectorXd& u0_initial,
                          DescentMode mode);

/// Largest Hessian eigenvalue (in the M inner product) of the linear-
/// quadratic objective, by power iteration; the Hessian is constant for the
/// linear model.
double estimate_hessian_norm(const LinearInterfaceModel& model, double gamma, int iterations = 80,
                             std::uint64_t seed = 0x9e3779b97f4a7c15ULL);

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& message, std::vector<IterationRecord> trace)
        : std::runtime_error(message), trace(std::move(trace)) {}
    std::vector<IterationRecord> trace;
};

}  // namespace ipod

#endif  // IPOD_ASSIMILATION_HPP
