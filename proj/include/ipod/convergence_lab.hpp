/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

// Description: Empirical verification of inexact gradient descent theory on
//              synthetic objectives with exactly controllable gradient noise.
//              Quadratic families make every constant (L, mu, minimizer,
//              infimum) exact, so the convergence bounds can be checked
//              sharply; a 1D nonconvex gradient-dominated family covers the
//              PL-but-not-convex regime.

#ifndef IPOD_CONVERGENCE_LAB_HPP
#define IPOD_CONVERGENCE_LAB_HPP

#include "ipod/rng.hpp"

#include <Eigen/Core>

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipod {

enum class ObjectiveFamily { strongly_convex_quadratic, convex_singular_quadratic, pl_nonconvex };

/// A synthetic objective with exactly known constants. Quadratics are
/// J(x) = 0.5 x^T A x - b^T x; the PL family is the scalar
/// J(x) = x^2 + 3 sin^2(x), with L = 8 (sup |J''|) and its gradient-dominance
/// constant certified by a dense scan.
struct ObjectiveSpec {
    ObjectiveFamily family = ObjectiveFamily::strongly_convex_quadratic;
    Eigen::Index dimension = 0;

    Eigen::MatrixXd quadratic_matrix;  // A, SPD or SPSD
    Eigen::VectorXd linear_term;       // b, in range(A)
    Eigen::MatrixXd null_basis;        // orthonormal basis of ker(A), singular family

    double descent_constant = 0.0;     // L
    double mu = 0.0;                   // strong convexity or PL constant
    Eigen::VectorXd minimizer;         // one minimizer (min-norm for singular A)
    double optimal_value = 0.0;        // inf J

    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
    bool is_convex() const { return family != ObjectiveFamily::pl_nonconvex; }
    bool is_strongly_convex() const {
        return family == ObjectiveFamily::strongly_convex_quadratic;
    }
    /// The minimizer closest to x (projects onto the solution set for the
    /// singular family; otherwise the unique minimizer).
    Eigen::VectorXd nearest_minimizer(const Eigen::VectorXd& x) const;
};

ObjectiveSpec make_spd_quadratic(Rng& rng, Eigen::Index dim, double mu, double l);
/// Rank-deficient PSD quadratic: PL with mu equal to the smallest nonzero
/// eigenvalue, convex but not strongly convex.
ObjectiveSpec make_singular_quadratic(Rng& rng, Eigen::Index dim, Eigen::Index rank, double mu,
                                      double l);
ObjectiveSpec make_pl_nonconvex_1d();

enum class NoiseMode { fixed_magnitude_random_direction, adversarial_opposing, threshold_fraction };

/// Gradient-noise generator. Every emitted vector satisfies |xi| <= epsilon;
/// threshold_fraction scales with the current decrease threshold
/// ((2 - kL)/(4 - kL)) |grad| in the worst-case (opposing) direction.
struct NoisePolicy {
    NoiseMode mode = NoiseMode::fixed_magnitude_random_direction;
    double epsilon = 0.0;
    double fraction = 0.0;  // threshold_fraction mode
    std::uint64_t seed = 0;
};

struct GdTrace {
    std::vector<Eigen::VectorXd> iterates;   // x^0 .. x^k
    std::vector<double> objectives;          // J at each iterate
    std::vector<double> gradient_norms;      // |grad J(x^i)|, i = 0..k-1
    std::vector<double> noise_norms;         // |xi^i|, i = 0..k-1
    std::vector<double> thresholds;          // decrease threshold at each step
    double kappa = 0.0;

    int steps() const { return static_cast<int>(noise_norms.size()); }
};

/// Raised when an iterate leaves the representable range; carries the trace
/// recorded up to the blow-up.
class GdDivergenceError : public std::runtime_error {
public:
    GdDivergenceError(const std::string& message, GdTrace trace)
        : std::runtime_error(message), trace(std::move(trace)) {}
    GdTrace trace;
};

/// Runs exactly k inexact gradient iterations x <- x - kappa (grad + xi).
GdTrace inexact_gd(const ObjectiveSpec& spec, double kappa, const NoisePolicy& policy, int k,
                   const Eigen::VectorXd& x0);

/// Decrease threshold ((2 - kappa L)/(4 - kappa L)) grad_norm. Defined for
/// kappa L < 2 (the convergence theory itself needs kappa < 1/L); beyond that
/// the formula leaves its domain and a domain error is raised.
double descent_threshold(double grad_norm, double kappa, double l);

/// Margin report of one bound check. Margins are RHS-minus-LHS violations:
/// worst_margin <= 0 means the bound held everywhere it was asserted.
struct BoundCheckReport {
    bool domain_ok = true;            // step size / theta restrictions satisfied
    std::string domain_note;
    int total_steps = 0;
    int hypothesis_prefix = 0;        // bound asserted for k <= this
    int asserted_points = 0;
    double worst_margin = -std::numeric_limits<double>::infinity();
    std::optional<int> first_termination_index;  // first k with J - J* (or distance) below delta
    double hypothesis_fraction() const {
        return total_steps == 0 ? 1.0
                                : static_cast<double>(hypothesis_prefix) / total_steps;
    }
};

/// Convex + L-descent bound: J(x^k) - J* <= |x0 - x*|^2 / (2 k kappa)
/// + |x0 - x*| eps + kappa eps^2 / (2 eta), eta = 1 - kappa L, asserted for
/// every k whose preceding steps all kept the noise under the decrease
/// threshold.
BoundCheckReport check_convex_bound(const GdTrace& trace, const ObjectiveSpec& spec, double kappa,
                                    double epsilon);

/// PL bounds: the exact-step-size case kappa = 1/L with rate (1 - mu/L) and
/// asymptotic level eps^2/(2 mu), or the kappa < 1/L case with rate
/// theta = 1 - mu (2 kappa - L kappa^2) under the noise-threshold hypothesis.
BoundCheckReport check_pl_bounds(const GdTrace& trace, const ObjectiveSpec& spec, double kappa,
                                 double epsilon);

/// Strongly convex bound on squared distances with theta = 1 - mu kappa and
/// eta = 2 kappa - 2 kappa^2 L; asserted while the iterates stay outside the
/// delta-ball coupled to eps.
BoundCheckReport check_sc_bound(const GdTrace& trace, const ObjectiveSpec& spec, double kappa,
                                double epsilon);

}  // namespace ipod

#endif  // IPOD_CONVERGENCE_LAB_HPP
