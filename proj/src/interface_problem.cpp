/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#include "ipod/interface_problem.hpp"

#include "ipod/rng.hpp"

#include <cmath>
#include <sstream>

namespace ipod {

SpaceTimeFn default_interface_forcing() {
    return [](double x, double y, double t) {
        if (x < 1.0) {
            return t * y + std::sqrt(x) + 5.0;
        }
        return t * x + std::sqrt(x * y) + 6.0;
    };
}

Eigen::VectorXd interface_truth_initial(const TriangleMesh& mesh) {
    return interpolate_interior_2d(mesh, [](double x, double y) {
        return std::sqrt(std::max(0.0, x * y * (2.0 - x) * (1.0 - y)));
    });
}

DiscreteProblem assemble_interface_problem(double h, double tau, double total_time,
                                           double beta_plus, double beta_minus,
                                           const SpaceTimeFn& forcing_spec) {
    if (!(tau > 0.0) || !(total_time > 0.0)) {
        throw std::invalid_argument("assemble_interface_problem: tau and T must be positive");
    }
    if (!(beta_plus > 0.0) || !(beta_minus > 0.0)) {
        throw std::invalid_argument("assemble_interface_problem: diffusion must be positive");
    }
    const double steps = total_time / tau;
    const int n_steps = static_cast<int>(std::llround(steps));
    if (n_steps < 1 || std::abs(steps - n_steps) > 1e-12 * std::max(1.0, steps)) {
        throw std::invalid_argument("assemble_interface_problem: tau must divide T");
    }

    DiscreteProblem problem;
    problem.mesh = std::make_shared<const TriangleMesh>(build_interface_mesh(h));
    problem.tau = tau;
    problem.n_steps = n_steps;
    problem.total_time = total_time;
    problem.beta_plus = beta_plus;
    problem.beta_minus = beta_minus;

    const TriangleMesh& mesh = *problem.mesh;
    problem.mass = assemble_mass_2d(mesh, true);
    problem.stiffness =
        assemble_stiffness_2d(mesh, interface_coefficient(beta_plus, beta_minus), true);
    problem.stiffness_unit =
        assemble_stiffness_2d(mesh, [](double, double) { return 1.0; }, true);
    problem.h1_weight = problem.mass + problem.stiffness_unit;

    problem.forcing.reserve(static_cast<std::size_t>(n_steps));
    for (int j = 1; j <= n_steps; ++j) {
        const double t = j * tau;
        problem.forcing.push_back(assemble_load_2d(
            mesh, [&forcing_spec, t](double x, double y) { return forcing_spec(x, y, t); },
            true));
    }

    auto solver = std::make_shared<Eigen::SimplicialLLT<SpMat>>();
    const SpMat system = problem.mass + tau * problem.stiffness;
    solver->compute(system);
    if (solver->info() != Eigen::Success) {
        throw std::runtime_error("assemble_interface_problem: stepping matrix is not SPD");
    }
    problem.step_solver = std::move(solver);
    return problem;
}

Eigen::VectorXd forward_step_linear(const DiscreteProblem& problem, const Eigen::VectorXd& u_prev,
                                    int j) {
    if (j < 1 || j > problem.n_steps) {
        std::ostringstream msg;
        msg << "forward_step_linear: time index " << j << " outside [1, " << problem.n_steps
            << "]";
        throw std::out_of_range(msg.str());
    }
    const Eigen::VectorXd rhs =
        problem.mass * u_prev + problem.tau * problem.forcing[static_cast<std::size_t>(j - 1)];
    return problem.step_solver->solve(rhs);
}

Eigen::VectorXd adjoint_step_linear(const DiscreteProblem& problem,
                                    const Eigen::VectorXd& ustar_next,
                                    const Eigen::VectorXd& data_snapshot,
                                    const Eigen::VectorXd& obs_snapshot) {
    // A is symmetric here, so the forward factorization solves the adjoint
    // system as well.
    const Eigen::VectorXd rhs =
        problem.mass * (ustar_next + problem.tau * (obs_snapshot - data_snapshot));
    return problem.step_solver->solve(rhs);
}

Trajectory run_forward_linear(const DiscreteProblem& problem, const Eigen::VectorXd& u0) {
    Trajectory traj;
    traj.tau = problem.tau;
    traj.snapshots.reserve(static_cast<std::size_t>(problem.n_steps));
    Eigen::VectorXd u = u0;
    for (int j = 1; j <= problem.n_steps; ++j) {
        u = forward_step_linear(problem, u, j);
        traj.snapshots.push_back(u);
    }
    return traj;
}

ObservationSet synth_observations(const Trajectory& truth, double noise_sigma,
                                  std::uint64_t seed) {
    ObservationSet obs;
    obs.noise_sigma = noise_sigma;
    obs.seed = seed;
    obs.values.reserve(truth.snapshots.size());
    Rng rng(seed);
    for (const Eigen::VectorXd& u : truth.snapshots) {
        if (noise_sigma == 0.0) {
            obs.values.push_back(u);
        } else {
            obs.values.push_back(u + rng.gaussian_vector(u.size(), noise_sigma));
        }
    }
    return obs;
}

}  // namespace ipod
