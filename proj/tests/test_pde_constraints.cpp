/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ipod/burgers.hpp"
#include "ipod/interface_problem.hpp"
#include "ipod/rng.hpp"
#include "support/test_support.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace ipod;

namespace {

SpaceTimeFn zero_forcing() {
    return [](double, double, double) { return 0.0; };
}

}  // namespace

TEST_CASE("interface mesh aligns with x = 1 and is positively oriented") {
    const TriangleMesh mesh = build_interface_mesh(0.125);
    bool found_interface_node = false;
    for (Eigen::Index n = 0; n < mesh.num_nodes(); ++n) {
        if (mesh.nodes(n, 0) == 1.0) {
            found_interface_node = true;
        }
    }
    CHECK(found_interface_node);

    for (Eigen::Index t = 0; t < mesh.triangles.rows(); ++t) {
        double min_x = 2.0, max_x = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double x = mesh.nodes(mesh.triangles(t, a), 0);
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
        }
        // No element straddles the interface.
        CHECK((max_x <= 1.0 || min_x >= 1.0));

        const double x0 = mesh.nodes(mesh.triangles(t, 0), 0);
        const double y0 = mesh.nodes(mesh.triangles(t, 0), 1);
        const double x1 = mesh.nodes(mesh.triangles(t, 1), 0);
        const double y1 = mesh.nodes(mesh.triangles(t, 1), 1);
        const double x2 = mesh.nodes(mesh.triangles(t, 2), 0);
        const double y2 = mesh.nodes(mesh.triangles(t, 2), 1);
        CHECK((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0) > 0.0);
    }
}

TEST_CASE("misaligned mesh sizes are rejected") {
    CHECK_THROWS_AS(build_interface_mesh(2.0 / 15.0), std::invalid_argument);
    CHECK_THROWS_AS(build_interface_mesh(0.3), std::invalid_argument);
    CHECK_THROWS_AS(assemble_interface_problem(0.3, 0.1, 1.0, 1.0, 0.5, zero_forcing()),
                    std::invalid_argument);
}

TEST_CASE("equal diffusion reduces to the plain Laplacian stiffness") {
    const TriangleMesh mesh = build_interface_mesh(0.25);
    const SpMat with_interface =
        assemble_stiffness_2d(mesh, interface_coefficient(1.0, 1.0), true);
    const SpMat plain = assemble_stiffness_2d(mesh, [](double, double) { return 1.0; }, true);
    CHECK((Eigen::MatrixXd(with_interface) - Eigen::MatrixXd(plain)).cwiseAbs().maxCoeff() ==
          0.0);
}

TEST_CASE("full mass matrix integrates the constant function over the domain") {
    const TriangleMesh mesh = build_interface_mesh(0.2);
    const SpMat mass = assemble_mass_2d(mesh, false);
    // Sum of all entries is the integral of 1 over [0,2]x[0,1].
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.num_nodes());
    CHECK(ones.dot(mass * ones) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("stiffness is symmetric positive semidefinite and coercive over H1") {
    const DiscreteProblem problem =
        assemble_interface_problem(0.125, 0.1, 1.0, 1.0, 0.5, zero_forcing());
    const Eigen::MatrixXd a = Eigen::MatrixXd(problem.stiffness);
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-13);

    // Coercivity constant from a dense eigenvalue scan on this coarse mesh:
    // <Av,v> >= min(beta) <Kv,v> >= min(beta) lambda_min(K, M+K) |v|_{H1}^2.
    const Eigen::MatrixXd k_unit = Eigen::MatrixXd(problem.stiffness_unit);
    const Eigen::MatrixXd h1 = Eigen::MatrixXd(problem.h1_weight);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(k_unit, h1);
    const double c2 = 0.5 * eig.eigenvalues().minCoeff();  // min(beta) = 1/2
    CHECK(c2 > 0.0);

    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::VectorXd v = rng.gaussian_vector(problem.dim());
        const double av = v.dot(a * v);
        CHECK(av >= -1e-12);
        CHECK(av >= c2 * v.dot(h1 * v) * (1.0 - 1e-10));
    }
}

TEST_CASE("forward step: zero data stays zero and energy decays without forcing") {
    const DiscreteProblem problem =
        assemble_interface_problem(0.1, 0.05, 0.5, 1.0, 0.5, zero_forcing());
    Eigen::VectorXd u = Eigen::VectorXd::Zero(problem.dim());
    u = forward_step_linear(problem, u, 1);
    CHECK(u.cwiseAbs().maxCoeff() == 0.0);

    Rng rng(3);
    u = rng.gaussian_vector(problem.dim());
    double previous = std::sqrt(u.dot(problem.mass * u));
    for (int j = 1; j <= problem.n_steps; ++j) {
        u = forward_step_linear(problem, u, j);
        const double current = std::sqrt(u.dot(problem.mass * u));
        CHECK(current <= previous * (1.0 + 1e-13));
        previous = current;
    }
}

TEST_CASE("forward solver converges first order in the time step") {
    // Manufactured solution on [0,2]x[0,1] with beta = 1:
    //   u = exp(-t) sin(pi x / 2) sin(pi y),  f = (5 pi^2 / 4 - 1) u.
    const double h = 1.0 / 48.0;
    const auto exact = [](double x, double y, double t) {
        return std::exp(-t) * std::sin(M_PI * x / 2.0) * std::sin(M_PI * y);
    };
    const auto forcing = [&exact](double x, double y, double t) {
        return (5.0 * M_PI * M_PI / 4.0 - 1.0) * exact(x, y, t);
    };

    std::vector<double> taus = {1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0};
    std::vector<double> errors;
    for (double tau : taus) {
        const DiscreteProblem problem =
            assemble_interface_problem(h, tau, 1.0, 1.0, 1.0, forcing);
        Eigen::VectorXd u = interpolate_interior_2d(
            *problem.mesh, [&exact](double x, double y) { return exact(x, y, 0.0); });
        double sq = 0.0;
        for (int j = 1; j <= problem.n_steps; ++j) {
            u = forward_step_linear(problem, u, j);
            const Eigen::VectorXd ref = interpolate_interior_2d(
                *problem.mesh,
                [&exact, &problem, j](double x, double y) { return exact(x, y, j * problem.tau); });
            const Eigen::VectorXd diff = u - ref;
            sq += tau * diff.dot(problem.mass * diff);
        }
        errors.push_back(std::sqrt(sq));
    }
    const double slope = test::fit_log_slope(taus, errors);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("adjoint sweep vanishes for perfectly matching observations") {
    const DiscreteProblem problem =
        assemble_interface_problem(0.1, 0.05, 0.25, 1.0, 0.5, default_interface_forcing());
    const Eigen::VectorXd u0 = interface_truth_initial(*problem.mesh);
    const Trajectory traj = run_forward_linear(problem, u0);
    const ObservationSet obs = synth_observations(traj, 0.0, 1);

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(problem.dim());
    for (int j = problem.n_steps; j >= 1; --j) {
        lambda = adjoint_step_linear(problem, lambda, traj.snapshots[j - 1], obs.values[j - 1]);
        CHECK(lambda.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("the one-step solution operator is self-adjoint in the mass inner product") {
    const DiscreteProblem problem =
        assemble_interface_problem(0.125, 0.05, 0.25, 1.0, 0.5, zero_forcing());
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd a = rng.gaussian_vector(problem.dim());
        const Eigen::VectorXd b = rng.gaussian_vector(problem.dim());
        const Eigen::VectorXd sa =
            problem.step_solver->solve(Eigen::VectorXd(problem.mass * a));
        const Eigen::VectorXd sb =
            problem.step_solver->solve(Eigen::VectorXd(problem.mass * b));
        const double lhs = sa.dot(problem.mass * b);
        const double rhs = a.dot(problem.mass * sb);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * (std::abs(lhs) + std::abs(rhs) + 1e-30));
    }
}

TEST_CASE("burgers: zero data and zero forcing stay identically zero") {
    const Burgers1dProblem problem =
        make_burgers_problem(40, 0.05, 0.5, 1.0, [](double, double) { return 0.0; });
    const Trajectory traj = run_forward_burgers(problem, Eigen::VectorXd::Zero(problem.dim()));
    for (const auto& u : traj.snapshots) {
        CHECK(u.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("burgers: diffusion-dominated steps converge within four Newton iterations") {
    const Burgers1dProblem problem = make_burgers_problem(
        50, 0.02, 0.3, 1.0,
        [](double x, double t) { return std::sin(2.0 * M_PI * x) * std::exp(-t) + 1.0; });
    Eigen::VectorXd u = interpolate_interior_1d(
        *problem.mesh, [](double x) { return 0.8 * std::sin(M_PI * x); });
    for (int j = 1; j <= problem.n_steps; ++j) {
        int iterations = 0;
        u = forward_step_burgers(problem, u, j, &iterations);
        CHECK(iterations <= 4);
    }
}

TEST_CASE("burgers convection: analytic Jacobian matches finite differences") {
    const Burgers1dProblem problem =
        make_burgers_problem(30, 0.05, 0.25, 0.05, [](double, double) { return 0.0; });
    Rng rng(17);
    for (int trial = 0; trial < 3; ++trial) {
        const Eigen::VectorXd u = rng.gaussian_vector(problem.dim());
        const SpMat jac = burgers_convection_jacobian(problem, u);
        const Eigen::VectorXd dir = rng.unit_vector(problem.dim());
        const double eps = 1e-6;
        const Eigen::VectorXd fd = (burgers_convection(problem, u + eps * dir) -
                                    burgers_convection(problem, u - eps * dir)) /
                                   (2.0 * eps);
        const Eigen::VectorXd analytic = jac * dir;
        CHECK((fd - analytic).norm() <= 1e-6 * (1.0 + analytic.norm()));

        // Transpose pairing <J v, w> = <v, J^T w>.
        const Eigen::VectorXd w = rng.gaussian_vector(problem.dim());
        const double lhs = (jac * dir).dot(w);
        const double rhs = dir.dot(SpMat(jac.transpose()) * w);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
    }
}

TEST_CASE("burgers: a starved Newton iteration reports step failure with diagnostics") {
    Burgers1dProblem problem = make_burgers_problem(
        40, 0.5, 1.0, 0.05, [](double x, double) { return 40.0 * std::sin(2.0 * M_PI * x); });
    problem.newton_max_iterations = 1;
    const Eigen::VectorXd u0 =
        interpolate_interior_1d(*problem.mesh, [](double x) { return 3.0 * std::sin(M_PI * x); });
    try {
        forward_step_burgers(problem, u0, 1);
        FAIL("expected NewtonFailureError");
    } catch (const NewtonFailureError& e) {
        CHECK(e.iterations >= 1);
        CHECK(e.residual_norm > 0.0);
    }
}

TEST_CASE("observation synthesis: exactness, calibration and determinism") {
    Trajectory truth;
    truth.tau = 0.01;
    const int n = 200;
    const Eigen::Index m = 741;
    for (int j = 0; j < n; ++j) {
        truth.snapshots.push_back(Eigen::VectorXd::Zero(m));
    }

    const ObservationSet clean = synth_observations(truth, 0.0, 9);
    for (const auto& v : clean.values) {
        CHECK(v.cwiseAbs().maxCoeff() == 0.0);
    }

    const double sigma = 0.05;
    const ObservationSet noisy = synth_observations(truth, sigma, 9);
    double sq = 0.0;
    long count = 0;
    for (const auto& v : noisy.values) {
        sq += v.squaredNorm();
        count += v.size();
    }
    REQUIRE(count >= 100000);
    const double sample_std = std::sqrt(sq / static_cast<double>(count));
    CHECK(sample_std == doctest::Approx(sigma).epsilon(0.05));

    const ObservationSet again = synth_observations(truth, sigma, 9);
    for (std::size_t j = 0; j < noisy.values.size(); ++j) {
        CHECK((again.values[j] - noisy.values[j]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("the H1 weight is SPD and splits into mass and unit-stiffness energies") {
    const DiscreteProblem problem =
        assemble_interface_problem(0.125, 0.1, 1.0, 1.0, 0.5, zero_forcing());
    const WeightOperator h1 = problem.h1_weight_operator();
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd v = rng.gaussian_vector(problem.dim());
        const double combined = h1.norm_sq(v);
        const double split = v.dot(problem.mass * v) + v.dot(problem.stiffness_unit * v);
        CHECK(combined == doctest::Approx(split).epsilon(1e-14));
        CHECK(combined > 0.0);
    }
}

TEST_CASE("time grid validation") {
    CHECK_THROWS_AS(assemble_interface_problem(0.25, 0.3, 1.0, 1.0, 0.5, zero_forcing()),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_burgers_problem(20, 0.3, 1.0, 0.1, [](double, double) { return 0.0; }),
                    std::invalid_argument);
    CHECK_THROWS_AS(assemble_interface_problem(0.25, 0.1, 1.0, -1.0, 0.5, zero_forcing()),
                    std::invalid_argument);
}
