/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ipod/convergence_lab.hpp"
#include "ipod/experiment.hpp"

#include <cmath>

using namespace ipod;

namespace {

ObjectiveSpec one_dim_half_x_squared() {
    Rng rng(1);
    return make_spd_quadratic(rng, 1, 1.0, 1.0);  // J(x) = x^2/2 shifted to x* = random
}

}  // namespace

TEST_CASE("descent threshold closed forms") {
    CHECK(descent_threshold(3.0, 1.0, 1.0) == doctest::Approx(1.0));            // kappa L = 1
    CHECK(descent_threshold(1.0, 1e-12, 1.0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(descent_threshold(1.0, 0.5, 1.0) == doctest::Approx(1.5 / 3.5));      // kappa L = 1/2
    CHECK_THROWS_AS(descent_threshold(1.0, 2.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(descent_threshold(-1.0, 0.5, 1.0), std::domain_error);
    CHECK_THROWS_AS(descent_threshold(1.0, 0.5, 0.0), std::domain_error);
}

TEST_CASE("noise-free runs reproduce exact gradient descent") {
    Rng rng(3);
    const ObjectiveSpec spec = make_spd_quadratic(rng, 6, 0.5, 4.0);
    const Eigen::VectorXd x0 = spec.minimizer + rng.unit_vector(6);
    NoisePolicy silent;
    silent.epsilon = 0.0;
    const GdTrace trace = inexact_gd(spec, 0.1, silent, 20, x0);

    Eigen::VectorXd x = x0;
    for (int i = 0; i < 20; ++i) {
        CHECK(trace.noise_norms[static_cast<std::size_t>(i)] == 0.0);
        x -= 0.1 * spec.gradient(x);
    }
    CHECK((trace.iterates.back() - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("the unit quadratic converges in one step at kappa = 1/L") {
    const ObjectiveSpec spec = one_dim_half_x_squared();
    Eigen::VectorXd x0(1);
    x0[0] = spec.minimizer[0] + 3.0;
    NoisePolicy silent;
    const GdTrace trace = inexact_gd(spec, 1.0, silent, 1, x0);
    CHECK(std::abs(trace.iterates.back()[0] - spec.minimizer[0]) <= 1e-14);
    CHECK(trace.objectives.back() - spec.optimal_value <= 1e-28);
}

TEST_CASE("fixed seeds give bit-identical traces") {
    Rng rng(5);
    const ObjectiveSpec spec = make_spd_quadratic(rng, 5, 0.3, 2.0);
    const Eigen::VectorXd x0 = spec.minimizer + rng.unit_vector(5);
    NoisePolicy policy;
    policy.mode = NoiseMode::fixed_magnitude_random_direction;
    policy.epsilon = 1e-3;
    policy.seed = 77;
    const GdTrace a = inexact_gd(spec, 0.2, policy, 15, x0);
    const GdTrace b = inexact_gd(spec, 0.2, policy, 15, x0);
    for (std::size_t i = 0; i < a.iterates.size(); ++i) {
        CHECK((a.iterates[i] - b.iterates[i]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("noise contract: emitted noise never exceeds the declared bound") {
    Rng rng(7);
    const ObjectiveSpec spec = make_spd_quadratic(rng, 4, 0.5, 5.0);
    const Eigen::VectorXd x0 = spec.minimizer + 2.0 * rng.unit_vector(4);
    NoisePolicy policy;
    policy.mode = NoiseMode::fixed_magnitude_random_direction;
    policy.epsilon = 2.5e-2;
    policy.seed = 11;
    const GdTrace trace = inexact_gd(spec, 0.1, policy, 25, x0);
    for (double nn : trace.noise_norms) {
        CHECK(nn == doctest::Approx(policy.epsilon).epsilon(1e-12));
    }

    policy.mode = NoiseMode::threshold_fraction;
    policy.fraction = 0.9;
    policy.epsilon = std::numeric_limits<double>::infinity();
    const GdTrace thresholded = inexact_gd(spec, 0.1, policy, 25, x0);
    for (int i = 0; i < thresholded.steps(); ++i) {
        CHECK(thresholded.noise_norms[static_cast<std::size_t>(i)] <
              thresholded.thresholds[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("convex bound: classical noise-free rate over random convex quadratics") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index dim = rng.uniform_int(2, 10);
        ObjectiveSpec spec;
        if (trial % 2 == 0) {
            spec = make_spd_quadratic(rng, dim, 0.2, 3.0);
        } else {
            spec = make_singular_quadratic(rng, dim, rng.uniform_int(1, dim - 1), 0.2, 3.0);
        }
        const double kappa = rng.uniform(0.1, 0.9) / spec.descent_constant;
        const Eigen::VectorXd x0 = spec.minimizer + rng.uniform(0.5, 3.0) * rng.unit_vector(dim);
        NoisePolicy silent;
        const GdTrace trace = inexact_gd(spec, kappa, silent, 25, x0);
        const BoundCheckReport report = check_convex_bound(trace, spec, kappa, 0.0);
        REQUIRE(report.domain_ok);
        CHECK(report.hypothesis_prefix == trace.steps());
        CHECK(report.worst_margin <= 1e-10 * (1.0 + std::abs(trace.objectives.front())));
    }
}

TEST_CASE("convex bound: one-dimensional closed form") {
    // J = x^2/2 about x*, kappa = 1/2: iterate distance halves each step, so
    // J gap is 0.25^k/2 against the 1/k envelope.
    const ObjectiveSpec spec = one_dim_half_x_squared();
    Eigen::VectorXd x0(1);
    x0[0] = spec.minimizer[0] + 1.0;
    NoisePolicy silent;
    const GdTrace trace = inexact_gd(spec, 0.5, silent, 12, x0);
    for (int k = 1; k <= trace.steps(); ++k) {
        const double gap = trace.objectives[static_cast<std::size_t>(k)] - spec.optimal_value;
        CHECK(gap == doctest::Approx(0.5 * std::pow(0.25, k)).epsilon(1e-12));
        CHECK(gap <= 1.0 / k);
    }
    const BoundCheckReport report = check_convex_bound(trace, spec, 0.5, 0.0);
    CHECK(report.worst_margin <= 0.0);
}

TEST_CASE("convex bound under worst-case noise at 0.9 of the decrease threshold") {
    Rng rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        const Eigen::Index dim = rng.uniform_int(2, 8);
        const ObjectiveSpec spec = make_spd_quadratic(rng, dim, 0.3, 4.0);
        const double kappa = rng.uniform(0.1, 0.9) / spec.descent_constant;
        const Eigen::VectorXd x0 = spec.minimizer + rng.uniform(0.5, 3.0) * rng.unit_vector(dim);
        NoisePolicy policy;
        policy.mode = NoiseMode::threshold_fraction;
        policy.fraction = 0.9;
        policy.epsilon = std::numeric_limits<double>::infinity();
        policy.seed = rng.raw();
        const GdTrace trace = inexact_gd(spec, kappa, policy, 20, x0);
        const double eps =
            *std::max_element(trace.noise_norms.begin(), trace.noise_norms.end());
        const BoundCheckReport report = check_convex_bound(trace, spec, kappa, eps);
        REQUIRE(report.domain_ok);
        CHECK(report.hypothesis_prefix == trace.steps());
        CHECK(report.worst_margin <=
              1e-9 * (1.0 + std::abs(trace.objectives.front()) + eps));
    }
}

TEST_CASE("pl bound at the exact step size: noise-free linear rate") {
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index dim = rng.uniform_int(2, 8);
        const ObjectiveSpec spec = make_spd_quadratic(rng, dim, 0.4, 3.0);
        const double kappa = 1.0 / spec.descent_constant;
        const Eigen::VectorXd x0 = spec.minimizer + rng.unit_vector(dim);
        NoisePolicy silent;
        const GdTrace trace = inexact_gd(spec, kappa, silent, 30, x0);
        const BoundCheckReport report = check_pl_bounds(trace, spec, kappa, 0.0);
        REQUIRE(report.domain_ok);
        CHECK(report.worst_margin <= 1e-10 * (1.0 + std::abs(trace.objectives.front())));
    }
}

TEST_CASE("pl bound on a singular quadratic: linear decay of the objective gap") {
    Rng rng(23);
    const ObjectiveSpec spec = make_singular_quadratic(rng, 6, 3, 0.5, 2.0);
    const double kappa = 0.4 / spec.descent_constant;
    const Eigen::VectorXd x0 = spec.minimizer + 2.0 * rng.unit_vector(6);
    NoisePolicy silent;
    const GdTrace trace = inexact_gd(spec, kappa, silent, 40, x0);

    const double theta =
        1.0 - spec.mu * (2.0 * kappa - spec.descent_constant * kappa * kappa);
    const double j0_gap = trace.objectives.front() - spec.optimal_value;
    for (int k = 1; k <= trace.steps(); ++k) {
        const double gap = trace.objectives[static_cast<std::size_t>(k)] - spec.optimal_value;
        CHECK(gap <= std::pow(theta, k) * j0_gap * (1.0 + 1e-10));
    }
    const BoundCheckReport report = check_pl_bounds(trace, spec, kappa, 0.0);
    REQUIRE(report.domain_ok);
    CHECK(report.worst_margin <= 1e-12);
}

TEST_CASE("pl bound: noisy asymptotic level at the exact step size") {
    Rng rng(29);
    const ObjectiveSpec spec = make_spd_quadratic(rng, 5, 0.6, 2.5);
    const double kappa = 1.0 / spec.descent_constant;
    const double eps = 1e-3;
    const Eigen::VectorXd x0 = spec.minimizer + rng.unit_vector(5);
    NoisePolicy policy;
    policy.mode = NoiseMode::adversarial_opposing;
    policy.epsilon = eps;
    policy.seed = 31;
    const GdTrace trace = inexact_gd(spec, kappa, policy, 400, x0);
    const BoundCheckReport report = check_pl_bounds(trace, spec, kappa, eps);
    REQUIRE(report.domain_ok);
    CHECK(report.worst_margin <= 1e-10);
    const double final_gap = trace.objectives.back() - spec.optimal_value;
    CHECK(final_gap <= eps * eps / (2.0 * spec.mu) * (1.0 + 1e-6) + 1e-12);
}

TEST_CASE("pl bound on the one-dimensional nonconvex family") {
    const ObjectiveSpec spec = make_pl_nonconvex_1d();
    CHECK(spec.descent_constant == 8.0);
    CHECK(spec.mu > 0.0);
    CHECK(spec.mu < 8.0);

    Rng rng(37);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd x0(1);
        x0[0] = rng.uniform(-6.0, 6.0);
        if (std::abs(x0[0]) < 0.5) {
            x0[0] = 1.5;
        }
        const double kappa = (trial % 2 == 0) ? 1.0 / spec.descent_constant
                                              : rng.uniform(0.1, 0.9) / spec.descent_constant;
        NoisePolicy silent;
        const GdTrace trace = inexact_gd(spec, kappa, silent, 60, x0);
        const BoundCheckReport report = check_pl_bounds(trace, spec, kappa, 0.0);
        REQUIRE(report.domain_ok);
        CHECK(report.worst_margin <= 1e-10 * (1.0 + std::abs(trace.objectives.front())));
    }
}

TEST_CASE("pl bound rejects oversized step sizes") {
    Rng rng(41);
    const ObjectiveSpec spec = make_spd_quadratic(rng, 3, 0.5, 2.0);
    NoisePolicy silent;
    const GdTrace trace =
        inexact_gd(spec, 0.4, silent, 5, spec.minimizer + rng.unit_vector(3));
    CHECK_THROWS_AS(check_pl_bounds(trace, spec, 0.6, 0.0), std::domain_error);
}

TEST_CASE("strong convexity bound: noise-free contraction over random instances") {
    Rng rng(43);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index dim = rng.uniform_int(1, 10);
        const ObjectiveSpec spec = make_spd_quadratic(rng, dim, 0.3, 3.5);
        const double kappa = rng.uniform(0.1, 0.9) / spec.descent_constant;
        const Eigen::VectorXd x0 =
            spec.minimizer + rng.uniform(0.5, 4.0) * rng.unit_vector(dim);
        NoisePolicy silent;
        const GdTrace trace = inexact_gd(spec, kappa, silent, 25, x0);
        const BoundCheckReport report = check_sc_bound(trace, spec, kappa, 0.0);
        CHECK(report.hypothesis_prefix == trace.steps());
        CHECK(report.worst_margin <= 1e-10 * (1.0 + (x0 - spec.minimizer).squaredNorm()));
    }
}

TEST_CASE("strong convexity bound: one-dimensional closed form") {
    // kappa = 1/2 on J = x^2/2: distances halve per step, theta = 1/2, so the
    // squared distance 0.25^k sits below the theta^k envelope.
    const ObjectiveSpec spec = one_dim_half_x_squared();
    Eigen::VectorXd x0(1);
    x0[0] = spec.minimizer[0] + 1.0;
    NoisePolicy silent;
    const GdTrace trace = inexact_gd(spec, 0.5, silent, 15, x0);
    for (int k = 1; k <= trace.steps(); ++k) {
        const double dist_sq =
            (trace.iterates[static_cast<std::size_t>(k)] - spec.minimizer).squaredNorm();
        CHECK(dist_sq == doctest::Approx(std::pow(0.25, k)).epsilon(1e-12));
        CHECK(dist_sq <= std::pow(0.5, k));
    }
    const BoundCheckReport report = check_sc_bound(trace, spec, 0.5, 0.0);
    CHECK(report.worst_margin <= 0.0);
}

TEST_CASE("strong convexity bound stops asserting at the delta boundary") {
    Rng rng(47);
    const ObjectiveSpec spec = make_spd_quadratic(rng, 4, 0.8, 2.0);
    const double kappa = 0.45 / spec.descent_constant;
    const double eps = 1e-2;
    const Eigen::VectorXd x0 = spec.minimizer + 3.0 * rng.unit_vector(4);
    NoisePolicy policy;
    policy.mode = NoiseMode::adversarial_opposing;
    policy.epsilon = eps;
    policy.seed = 53;
    // Long run: the iterates contract into the noise ball around x*.
    const GdTrace trace = inexact_gd(spec, kappa, policy, 600, x0);
    const BoundCheckReport report = check_sc_bound(trace, spec, kappa, eps);
    REQUIRE(report.first_termination_index.has_value());
    CHECK(*report.first_termination_index > 0);
    CHECK(report.hypothesis_prefix == *report.first_termination_index);
    CHECK(report.asserted_points == report.hypothesis_prefix);
    CHECK(report.worst_margin <= 1e-9 * (1.0 + (x0 - spec.minimizer).squaredNorm()));
}

TEST_CASE("strong convexity bound rejects invalid domains") {
    Rng rng(59);
    const ObjectiveSpec spd = make_spd_quadratic(rng, 3, 0.5, 2.0);
    NoisePolicy silent;
    const GdTrace trace =
        inexact_gd(spd, 0.2, silent, 5, spd.minimizer + rng.unit_vector(3));
    CHECK_THROWS_AS(check_sc_bound(trace, spd, 0.5, 0.0), std::domain_error);

    const ObjectiveSpec singular = make_singular_quadratic(rng, 4, 2, 0.5, 2.0);
    const GdTrace strace =
        inexact_gd(singular, 0.2, silent, 5, singular.minimizer + rng.unit_vector(4));
    CHECK_THROWS_AS(check_sc_bound(strace, singular, 0.2, 0.0), std::domain_error);
}

TEST_CASE("gradient dominance holds at every iterate of quadratic runs") {
    Rng rng(61);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index dim = rng.uniform_int(2, 8);
        const ObjectiveSpec spec = make_spd_quadratic(rng, dim, 0.2, 5.0);
        const double kappa = rng.uniform(0.1, 0.9) / spec.descent_constant;
        NoisePolicy policy;
        policy.mode = NoiseMode::fixed_magnitude_random_direction;
        policy.epsilon = 1e-3;
        policy.seed = rng.raw();
        const GdTrace trace =
            inexact_gd(spec, kappa, policy, 15, spec.minimizer + rng.unit_vector(dim));
        for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
            const double gap = trace.objectives[i] - spec.optimal_value;
            const double lhs = spec.gradient(trace.iterates[i]).squaredNorm() /
                               (2.0 * spec.descent_constant);
            CHECK(lhs <= gap + 1e-9 * (1.0 + std::abs(gap)));
        }
    }
}

TEST_CASE("randomized suite smoke run: no violations, hypotheses overwhelmingly satisfied") {
    SuiteSection suite;
    suite.instances = 300;
    suite.max_dimension = 10;
    suite.max_iterations = 25;
    suite.noise_fraction = 0.9;
    const ConvergenceSuiteResult result = run_convergence_suite(suite, 2024);
    CHECK(result.instances == 300);
    CHECK(result.bound_violations == 0);
    CHECK(result.decrease_violations == 0);
    CHECK(result.gradient_dominance_violations == 0);
    CHECK(result.asserted_points > 1000);
    CHECK(result.threshold_steps > 1000);
    CHECK(result.aggregate_hypothesis_fraction >= 0.9);
}
