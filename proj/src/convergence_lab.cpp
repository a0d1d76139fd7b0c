/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#include "ipod/convergence_lab.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace ipod {

namespace {

double pl_value_1d(double x) {
    const double s = std::sin(x);
    return x * x + 3.0 * s * s;
}

double pl_gradient_1d(double x) { return 2.0 * x + 3.0 * std::sin(2.0 * x); }

/// Gradient-dominance constant of x^2 + 3 sin^2 x, certified by a dense scan
/// of |J'|^2 / (2 J) away from the minimizer (the ratio tends to 8 at 0 and
/// to 2 at infinity, so the infimum is attained at moderate x).
double certified_pl_constant() {
    double best = std::numeric_limits<double>::infinity();
    const int samples = 400000;
    const double x_max = 40.0;
    for (int i = 1; i <= samples; ++i) {
        const double x = x_max * i / samples;
        const double g = pl_gradient_1d(x);
        const double v = pl_value_1d(x);
        best = std::min(best, g * g / (2.0 * v));
    }
    return 0.999 * best;  // margin for the finite grid
}

Eigen::MatrixXd random_orthogonal(Rng& rng, Eigen::Index dim) {
    Eigen::MatrixXd g(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        g.col(j) = rng.gaussian_vector(dim);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    // Fix the sign ambiguity so the factorization is a function of g alone.
    const Eigen::VectorXd diag = qr.matrixQR().diagonal();
    for (Eigen::Index j = 0; j < dim; ++j) {
        if (diag[j] < 0.0) {
            q.col(j) = -q.col(j);
        }
    }
    return q;
}

ObjectiveSpec build_quadratic(Rng& rng, Eigen::Index dim, const Eigen::VectorXd& eigenvalues,
                              Eigen::Index rank) {
    ObjectiveSpec spec;
    spec.dimension = dim;
    const Eigen::MatrixXd q = random_orthogonal(rng, dim);
    spec.quadratic_matrix = q * eigenvalues.asDiagonal() * q.transpose();
    spec.quadratic_matrix = 0.5 * (spec.quadratic_matrix + spec.quadratic_matrix.transpose());

    // Minimizer drawn in the range of A so b = A x* is always consistent;
    // for singular A this makes x* the min-norm minimizer.
    Eigen::VectorXd coeffs = rng.gaussian_vector(rank);
    spec.minimizer = q.leftCols(rank) * coeffs;
    spec.linear_term = spec.quadratic_matrix * spec.minimizer;
    spec.optimal_value = 0.5 * spec.minimizer.dot(spec.quadratic_matrix * spec.minimizer) -
                         spec.linear_term.dot(spec.minimizer);
    if (rank < dim) {
        spec.null_basis = q.rightCols(dim - rank);
    }
    return spec;
}

}  // namespace

double ObjectiveSpec::value(const Eigen::VectorXd& x) const {
    if (family == ObjectiveFamily::pl_nonconvex) {
        return pl_value_1d(x[0]);
    }
    return 0.5 * x.dot(quadratic_matrix * x) - linear_term.dot(x);
}

Eigen::VectorXd ObjectiveSpec::gradient(const Eigen::VectorXd& x) const {
    if (family == ObjectiveFamily::pl_nonconvex) {
        Eigen::VectorXd g(1);
        g[0] = pl_gradient_1d(x[0]);
        return g;
    }
    return quadratic_matrix * x - linear_term;
}

Eigen::VectorXd ObjectiveSpec::nearest_minimizer(const Eigen::VectorXd& x) const {
    if (family == ObjectiveFamily::pl_nonconvex || null_basis.cols() == 0) {
        return minimizer;
    }
    return minimizer + null_basis * (null_basis.transpose() * (x - minimizer));
}

ObjectiveSpec make_spd_quadratic(Rng& rng, Eigen::Index dim, double mu, double l) {
    if (dim < 1 || !(mu > 0.0) || !(l >= mu)) {
        throw std::invalid_argument("make_spd_quadratic: need dim >= 1 and 0 < mu <= L");
    }
    Eigen::VectorXd eigenvalues(dim);
    eigenvalues[0] = mu;
    if (dim > 1) {
        eigenvalues[dim - 1] = l;
        for (Eigen::Index i = 1; i + 1 < dim; ++i) {
            eigenvalues[i] = mu * std::pow(l / mu, rng.uniform());
        }
    }
    ObjectiveSpec spec = build_quadratic(rng, dim, eigenvalues, dim);
    spec.family = ObjectiveFamily::strongly_convex_quadratic;
    spec.descent_constant = (dim > 1) ? l : mu;
    spec.mu = mu;
    return spec;
}

ObjectiveSpec make_singular_quadratic(Rng& rng, Eigen::Index dim, Eigen::Index rank, double mu,
                                      double l) {
    if (rank < 1 || rank >= dim || !(mu > 0.0) || !(l >= mu)) {
        throw std::invalid_argument(
            "make_singular_quadratic: need 1 <= rank < dim and 0 < mu <= L");
    }
    Eigen::VectorXd eigenvalues = Eigen::VectorXd::Zero(dim);
    eigenvalues[0] = mu;
    if (rank > 1) {
        eigenvalues[rank - 1] = l;
        for (Eigen::Index i = 1; i + 1 < rank; ++i) {
            eigenvalues[i] = mu * std::pow(l / mu, rng.uniform());
        }
    }
    // Zero eigenvalues sit in the trailing columns of Q.
    Eigen::VectorXd reordered = Eigen::VectorXd::Zero(dim);
    reordered.head(rank) = eigenvalues.head(rank);
    ObjectiveSpec spec = build_quadratic(rng, dim, reordered, rank);
    spec.family = ObjectiveFamily::convex_singular_quadratic;
    spec.descent_constant = (rank > 1) ? l : mu;
    spec.mu = mu;  // smallest nonzero eigenvalue: PL constant
    return spec;
}

ObjectiveSpec make_pl_nonconvex_1d() {
    static const double mu = certified_pl_constant();
    ObjectiveSpec spec;
    spec.family = ObjectiveFamily::pl_nonconvex;
    spec.dimension = 1;
    spec.descent_constant = 8.0;  // sup |2 + 6 cos 2x|
    spec.mu = mu;
    spec.minimizer = Eigen::VectorXd::Zero(1);
    spec.optimal_value = 0.0;
    return spec;
}

double descent_threshold(double grad_norm, double kappa, double l) {
    if (!(kappa > 0.0) || !(l > 0.0)) {
        throw std::domain_error("descent_threshold: kappa and L must be positive");
    }
    if (!(kappa * l < 2.0)) {
        throw std::domain_error("descent_threshold: kappa * L must be below 2");
    }
    if (grad_norm < 0.0) {
        throw std::domain_error("descent_threshold: gradient norm must be nonnegative");
    }
    return (2.0 - kappa * l) / (4.0 - kappa * l) * grad_norm;
}

GdTrace inexact_gd(const ObjectiveSpec& spec, double kappa, const NoisePolicy& policy, int k,
                   const Eigen::VectorXd& x0) {
    if (!(kappa > 0.0)) {
        throw std::invalid_argument("inexact_gd: kappa must be positive");
    }
    if (x0.size() != spec.dimension) {
        throw std::invalid_argument("inexact_gd: x0 dimension does not match the objective");
    }
    if (policy.mode == NoiseMode::threshold_fraction && !(kappa * spec.descent_constant < 2.0)) {
        throw std::domain_error("inexact_gd: threshold noise needs kappa * L < 2");
    }

    Rng rng(policy.seed);
    GdTrace trace;
    trace.kappa = kappa;
    trace.iterates.reserve(static_cast<std::size_t>(k) + 1);
    trace.objectives.reserve(static_cast<std::size_t>(k) + 1);
    trace.iterates.push_back(x0);
    trace.objectives.push_back(spec.value(x0));

    Eigen::VectorXd x = x0;
    for (int i = 0; i < k; ++i) {
        const Eigen::VectorXd grad = spec.gradient(x);
        const double grad_norm = grad.norm();
        const bool threshold_defined = kappa * spec.descent_constant < 2.0;
        const double threshold =
            threshold_defined ? descent_threshold(grad_norm, kappa, spec.descent_constant)
                              : std::numeric_limits<double>::quiet_NaN();

        Eigen::VectorXd noise = Eigen::VectorXd::Zero(x.size());
        switch (policy.mode) {
            case NoiseMode::fixed_magnitude_random_direction:
                if (policy.epsilon > 0.0) {
                    noise = policy.epsilon * rng.unit_vector(x.size());
                }
                break;
            case NoiseMode::adversarial_opposing:
                if (policy.epsilon > 0.0 && grad_norm > 0.0) {
                    noise = -(policy.epsilon / grad_norm) * grad;
                }
                break;
            case NoiseMode::threshold_fraction:
                if (grad_norm > 0.0) {
                    const double magnitude = std::min(policy.fraction * threshold, policy.epsilon);
                    noise = -(magnitude / grad_norm) * grad;
                }
                break;
        }
        const double noise_norm = noise.norm();
        if (noise_norm > policy.epsilon * (1.0 + 1e-12)) {
            throw std::logic_error("inexact_gd: noise contract violated");
        }

        x -= kappa * (grad + noise);
        if (!x.allFinite()) {
            std::ostringstream msg;
            msg << "inexact_gd: non-finite iterate at step " << i + 1;
            throw GdDivergenceError(msg.str(), std::move(trace));
        }
        trace.gradient_norms.push_back(grad_norm);
        trace.noise_norms.push_back(noise_norm);
        trace.thresholds.push_back(threshold);
        trace.iterates.push_back(x);
        trace.objectives.push_back(spec.value(x));
    }
    return trace;
}

BoundCheckReport check_convex_bound(const GdTrace& trace, const ObjectiveSpec& spec, double kappa,
                                    double epsilon) {
    BoundCheckReport report;
    report.total_steps = trace.steps();

    const double l = spec.descent_constant;
    const double eta = 1.0 - kappa * l;
    if (!spec.is_convex()) {
        report.domain_ok = false;
        report.domain_note = "objective is not convex";
        return report;
    }
    if (!(eta > 0.0)) {
        report.domain_ok = false;
        report.domain_note = "kappa is not below 1/L";
        return report;
    }
    for (double nn : trace.noise_norms) {
        if (nn > epsilon * (1.0 + 1e-12)) {
            report.domain_ok = false;
            report.domain_note = "epsilon is smaller than the emitted noise";
            return report;
        }
    }

    // Largest K with every step before it under the decrease threshold.
    int prefix = trace.steps();
    for (int i = 0; i < trace.steps(); ++i) {
        if (!(trace.noise_norms[static_cast<std::size_t>(i)] <
              descent_threshold(trace.gradient_norms[static_cast<std::size_t>(i)], kappa, l))) {
            prefix = i;
            break;
        }
    }
    report.hypothesis_prefix = prefix;

    const Eigen::VectorXd x_star = spec.nearest_minimizer(trace.iterates.front());
    const double d0 = (trace.iterates.front() - x_star).norm();
    const double delta_ref = d0 * epsilon + kappa * epsilon * epsilon / (2.0 * eta);

    for (int k = 1; k <= prefix; ++k) {
        const double gap = trace.objectives[static_cast<std::size_t>(k)] - spec.optimal_value;
        const double rhs = d0 * d0 / (2.0 * k * kappa) + delta_ref;
        report.worst_margin = std::max(report.worst_margin, gap - rhs);
        ++report.asserted_points;
        if (epsilon > 0.0 && gap < delta_ref && !report.first_termination_index) {
            report.first_termination_index = k;
        }
    }
    return report;
}

BoundCheckReport check_pl_bounds(const GdTrace& trace, const ObjectiveSpec& spec, double kappa,
                                 double epsilon) {
    BoundCheckReport report;
    report.total_steps = trace.steps();

    const double l = spec.descent_constant;
    const double mu = spec.mu;
    if (kappa > (1.0 + 1e-12) / l) {
        throw std::domain_error("check_pl_bounds: kappa must not exceed 1/L");
    }
    const bool exact_step = std::abs(kappa * l - 1.0) <= 1e-12;
    const double j0_gap = trace.objectives.front() - spec.optimal_value;

    if (exact_step) {
        // No threshold hypothesis in this branch.
        report.hypothesis_prefix = trace.steps();
        const double rate = 1.0 - mu / l;
        for (int k = 1; k <= trace.steps(); ++k) {
            const double decay = std::pow(rate, k);
            const double rhs = decay * j0_gap +
                               (1.0 - decay) * epsilon * epsilon / (2.0 * mu);
            const double gap = trace.objectives[static_cast<std::size_t>(k)] - spec.optimal_value;
            report.worst_margin = std::max(report.worst_margin, gap - rhs);
            ++report.asserted_points;
        }
        return report;
    }

    const double theta = 1.0 - mu * (2.0 * kappa - l * kappa * kappa);
    if (!(theta > 0.0) || !(theta < 1.0)) {
        report.domain_ok = false;
        std::ostringstream note;
        note << "theta = " << theta << " is outside (0, 1)";
        report.domain_note = note.str();
        return report;
    }

    int prefix = trace.steps();
    for (int i = 0; i < trace.steps(); ++i) {
        if (!(trace.noise_norms[static_cast<std::size_t>(i)] <
              descent_threshold(trace.gradient_norms[static_cast<std::size_t>(i)], kappa, l))) {
            prefix = i;
            break;
        }
    }
    report.hypothesis_prefix = prefix;

    const double cross = std::sqrt(2.0 * l) * std::abs(l * kappa * kappa - kappa) *
                         std::sqrt(std::max(0.0, j0_gap)) * epsilon;
    const double quad = 0.5 * l * kappa * kappa * epsilon * epsilon;
    for (int k = 1; k <= prefix; ++k) {
        const double decay = std::pow(theta, k);
        const double rhs = decay * j0_gap + (1.0 - decay) / (1.0 - theta) * (cross + quad);
        const double gap = trace.objectives[static_cast<std::size_t>(k)] - spec.optimal_value;
        report.worst_margin = std::max(report.worst_margin, gap - rhs);
        ++report.asserted_points;
    }
    return report;
}

BoundCheckReport check_sc_bound(const GdTrace& trace, const ObjectiveSpec& spec, double kappa,
                                double epsilon) {
    BoundCheckReport report;
    report.total_steps = trace.steps();

    if (!spec.is_strongly_convex()) {
        throw std::domain_error("check_sc_bound: objective is not strongly convex");
    }
    const double l = spec.descent_constant;
    const double mu = spec.mu;
    if (!(kappa > 0.0) || !(kappa < 1.0 / l)) {
        throw std::domain_error("check_sc_bound: kappa must lie in (0, 1/L)");
    }
    const double theta = 1.0 - mu * kappa;
    const double eta = 2.0 * kappa - 2.0 * kappa * kappa * l;

    // Distance floor coupled to epsilon; the contraction argument only runs
    // while the iterates stay outside it.
    const double root = std::sqrt(2.0 * l * eta);
    const double delta =
        (root + std::sqrt(2.0 * l * eta + 2.0 * l * eta * kappa * mu + kappa * mu)) /
        (mu * root) * epsilon;

    const Eigen::VectorXd& x_star = spec.minimizer;
    const double d0 = (trace.iterates.front() - x_star).norm();

    int prefix = trace.steps();
    for (int i = 0; i <= trace.steps(); ++i) {
        const double dist = (trace.iterates[static_cast<std::size_t>(i)] - x_star).norm();
        if (dist < delta) {
            report.first_termination_index = i;
            prefix = std::min(prefix, i);
            break;
        }
    }
    report.hypothesis_prefix = prefix;

    const double extra = 2.0 * kappa * d0 * epsilon +
                         kappa * kappa * epsilon * epsilon / (2.0 * l * eta) +
                         kappa * kappa * epsilon * epsilon;
    for (int k = 1; k <= prefix; ++k) {
        const double decay = std::pow(theta, k);
        const double rhs = decay * d0 * d0 + (1.0 - decay) / (1.0 - theta) * extra;
        const double dist_sq =
            (trace.iterates[static_cast<std::size_t>(k)] - x_star).squaredNorm();
        report.worst_margin = std::max(report.worst_margin, dist_sq - rhs);
        ++report.asserted_points;
    }
    return report;
}

}  // namespace ipod
