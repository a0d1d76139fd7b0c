/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

// Description: Backward-Euler discretization of the 2D parabolic interface
//              equation on [0,2]x[0,1] (diffusion beta_plus left of x = 1,
//              beta_minus right of it), its discrete adjoint, and synthesis
//              of noisy observations.

#ifndef IPOD_INTERFACE_PROBLEM_HPP
#define IPOD_INTERFACE_PROBLEM_HPP

#include "ipod/fem.hpp"

#include <Eigen/SparseCholesky>

#include <cstdint>
#include <memory>
#include <vector>

namespace ipod {

using SpaceTimeFn = std::function<double(double, double, double)>;

struct Trajectory {
    std::vector<Eigen::VectorXd> snapshots;  // u^1 .. u^n
    double tau = 0.0;
};

struct ObservationSet {
    std::vector<Eigen::VectorXd> values;  // one per time level, u^1 .. u^n
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

/// Assembled discrete problem: interior-dof operators, time grid, forcing
/// loads per level, and a cached factorization of the stepping matrix
/// mass + tau * stiffness (constant in time, reused by every forward and
/// adjoint solve).
struct DiscreteProblem {
    std::shared_ptr<const TriangleMesh> mesh;
    double tau = 0.0;
    int n_steps = 0;
    double total_time = 0.0;
    double beta_plus = 0.0;
    double beta_minus = 0.0;

    SpMat mass;
    SpMat stiffness;       // coefficient beta
    SpMat stiffness_unit;  // coefficient 1
    SpMat h1_weight;       // mass + stiffness_unit

    std::vector<Eigen::VectorXd> forcing;  // level j stored at index j-1, time j*tau

    std::shared_ptr<const Eigen::SimplicialLLT<SpMat>> step_solver;

    Eigen::Index dim() const { return mass.rows(); }
    WeightOperator mass_weight() const { return WeightOperator::from_sparse(mass); }
    WeightOperator h1_weight_operator() const { return WeightOperator::from_sparse(h1_weight); }
};

/// Forcing of the reference experiment: t*y + sqrt(x) + 5 left of the
/// interface, t*x + sqrt(x*y) + 6 right of it.
SpaceTimeFn default_interface_forcing();

/// Initial condition of the reference experiment, sqrt(x*y*(2-x)*(1-y)).
Eigen::VectorXd interface_truth_initial(const TriangleMesh& mesh);

DiscreteProblem assemble_interface_problem(double h, double tau, double total_time,
                                           double beta_plus, double beta_minus,
                                           const SpaceTimeFn& forcing_spec);

/// One backward-Euler step: solves (M + tau A) u^{j} = M u_prev + tau f^{j}.
/// j is the 1-based index of the produced time level.
Eigen::VectorXd forward_step_linear(const DiscreteProblem& problem, const Eigen::VectorXd& u_prev,
                                    int j);

/// One backward adjoint step: solves
/// (M + tau A) u*^{j} = M u*_{j+1} + tau M (obs - data) with the mismatch
/// taken at level j+1. The terminal condition u*^n = 0 is the caller's.
Eigen::VectorXd adjoint_step_linear(const DiscreteProblem& problem,
                                    const Eigen::VectorXd& ustar_next,
                                    const Eigen::VectorXd& data_snapshot,
                                    const Eigen::VectorXd& obs_snapshot);

/// Full forward sweep retaining the trajectory u^1..u^n.
Trajectory run_forward_linear(const DiscreteProblem& problem, const Eigen::VectorXd& u0);

/// Adds i.i.d. Gaussian noise of the given standard deviation to every nodal
/// coefficient. Deterministic for a fixed seed.
ObservationSet synth_observations(const Trajectory& truth, double noise_sigma,
                                  std::uint64_t seed);

}  // namespace ipod

#endif  // IPOD_INTERFACE_PROBLEM_HPP
