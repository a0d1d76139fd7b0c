/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#include "ipod/burgers.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

namespace ipod {

namespace {

// Element contributions of the convection term on [x_a, x_b] with endpoint
// values uL, uR (u linear, u_x constant):
//   N_L = (uR - uL)(2 uL + uR)/6,   N_R = (uR - uL)(uL + 2 uR)/6,
// independent of the element length.
struct ConvectionElement {
    double n_l, n_r;
    double d_nl_ul, d_nl_ur, d_nr_ul, d_nr_ur;
};

ConvectionElement convection_element(double ul, double ur) {
    ConvectionElement e;
    const double diff = ur - ul;
    e.n_l = diff * (2.0 * ul + ur) / 6.0;
    e.n_r = diff * (ul + 2.0 * ur) / 6.0;
    e.d_nl_ul = (-4.0 * ul + ur) / 6.0;
    e.d_nl_ur = (ul + 2.0 * ur) / 6.0;
    e.d_nr_ul = (-2.0 * ul - ur) / 6.0;
    e.d_nr_ur = (-ul + 4.0 * ur) / 6.0;
    return e;
}

double node_value(const Eigen::VectorXd& u, int node, int cells) {
    if (node == 0 || node == cells) {
        return 0.0;
    }
    return u[node - 1];
}

}  // namespace

Burgers1dProblem make_burgers_problem(int cells, double tau, double total_time, double nu,
                                      const std::function<double(double, double)>& forcing) {
    if (!(nu > 0.0) || !(tau > 0.0) || !(total_time > 0.0)) {
        throw std::invalid_argument("make_burgers_problem: nu, tau and T must be positive");
    }
    const double steps = total_time / tau;
    const int n_steps = static_cast<int>(std::llround(steps));
    if (n_steps < 1 || std::abs(steps - n_steps) > 1e-12 * std::max(1.0, steps)) {
        throw std::invalid_argument("make_burgers_problem: tau must divide T");
    }

    Burgers1dProblem problem;
    problem.mesh = std::make_shared<const IntervalMesh>(build_interval_mesh(cells));
    problem.nu = nu;
    problem.tau = tau;
    problem.n_steps = n_steps;
    problem.total_time = total_time;
    problem.mass = assemble_mass_1d(*problem.mesh, true);
    problem.stiffness = assemble_stiffness_1d(*problem.mesh, true);
    problem.h1_weight = problem.mass + problem.stiffness;

    problem.forcing.reserve(static_cast<std::size_t>(n_steps));
    for (int j = 1; j <= n_steps; ++j) {
        const double t = j * tau;
        problem.forcing.push_back(
            assemble_load_1d(*problem.mesh, [&forcing, t](double x) { return forcing(x, t); },
                             true));
    }
    return problem;
}

Eigen::VectorXd burgers_convection(const Burgers1dProblem& problem, const Eigen::VectorXd& u) {
    const int cells = problem.mesh->cells;
    Eigen::VectorXd n = Eigen::VectorXd::Zero(problem.dim());
    for (int c = 0; c < cells; ++c) {
        const ConvectionElement e =
            convection_element(node_value(u, c, cells), node_value(u, c + 1, cells));
        if (c > 0) {
            n[c - 1] += e.n_l;
        }
        if (c + 1 < cells) {
            n[c] += e.n_r;
        }
    }
    return n;
}

SpMat burgers_convection_jacobian(const Burgers1dProblem& problem, const Eigen::VectorXd& u) {
    const int cells = problem.mesh->cells;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(4 * cells));
    for (int c = 0; c < cells; ++c) {
        const ConvectionElement e =
            convection_element(node_value(u, c, cells), node_value(u, c + 1, cells));
        const int dl = (c == 0) ? -1 : c - 1;
        const int dr = (c + 1 == cells) ? -1 : c;
        if (dl >= 0) {
            triplets.emplace_back(dl, dl, e.d_nl_ul);
            if (dr >= 0) triplets.emplace_back(dl, dr, e.d_nl_ur);
        }
        if (dr >= 0) {
            if (dl >= 0) triplets.emplace_back(dr, dl, e.d_nr_ul);
            triplets.emplace_back(dr, dr, e.d_nr_ur);
        }
    }
    SpMat jac(problem.dim(), problem.dim());
    jac.setFromTriplets(triplets.begin(), triplets.end());
    jac.makeCompressed();
    return jac;
}

Eigen::VectorXd forward_step_burgers(const Burgers1dProblem& problem,
                                     const Eigen::VectorXd& u_prev, int j,
                                     int* newton_iterations) {
    if (j < 1 || j > problem.n_steps) {
        std::ostringstream msg;
        msg << "forward_step_burgers: time index " << j << " outside [1, " << problem.n_steps
            << "]";
        throw std::out_of_range(msg.str());
    }
    const Eigen::VectorXd& f = problem.forcing[static_cast<std::size_t>(j - 1)];
    const double tau = problem.tau;

    Eigen::VectorXd u = u_prev;  // warm start
    Eigen::SparseLU<SpMat> lu;
    double residual_norm = 0.0;
    for (int it = 0; it < problem.newton_max_iterations; ++it) {
        const Eigen::VectorXd residual = problem.mass * (u - u_prev) +
                                         tau * (problem.nu * (problem.stiffness * u) +
                                                burgers_convection(problem, u) - f);
        residual_norm = residual.cwiseAbs().maxCoeff();
        SpMat jac = problem.mass + tau * problem.nu * problem.stiffness;
        jac += SpMat(tau * burgers_convection_jacobian(problem, u));
        lu.compute(jac);
        if (lu.info() != Eigen::Success) {
            throw NewtonFailureError("forward_step_burgers: singular Newton system", it,
                                     residual_norm);
        }
        const Eigen::VectorXd delta = lu.solve(-residual);
        u += delta;
        if (!u.allFinite()) {
            throw NewtonFailureError("forward_step_burgers: iterate diverged to non-finite values",
                                     it + 1, residual_norm);
        }
        if (delta.cwiseAbs().maxCoeff() <=
            problem.newton_tolerance * (1.0 + u.cwiseAbs().maxCoeff())) {
            if (newton_iterations != nullptr) {
                *newton_iterations = it + 1;
            }
            return u;
        }
    }
    std::ostringstream msg;
    msg << "forward_step_burgers: Newton failed to converge at time level " << j << " after "
        << problem.newton_max_iterations << " iterations (residual " << residual_norm << ")";
    throw NewtonFailureError(msg.str(), problem.newton_max_iterations, residual_norm);
}

Eigen::VectorXd adjoint_step_burgers(const Burgers1dProblem& problem,
                                     const Eigen::VectorXd& ustar_next,
                                     const Eigen::VectorXd& u_forward_snapshot,
                                     const Eigen::VectorXd& mismatch) {
    SpMat jac = problem.mass + problem.tau * problem.nu * problem.stiffness;
    jac += SpMat(problem.tau * burgers_convection_jacobian(problem, u_forward_snapshot));
    SpMat jac_t = SpMat(jac.transpose());
    Eigen::SparseLU<SpMat> lu(jac_t);
    if (lu.info() != Eigen::Success) {
        throw std::runtime_error("adjoint_step_burgers: singular adjoint system");
    }
    return lu.solve(Eigen::VectorXd(problem.mass * (ustar_next + problem.tau * mismatch)));
}

Trajectory run_forward_burgers(const Burgers1dProblem& problem, const Eigen::VectorXd& u0) {
    Trajectory traj;
    traj.tau = problem.tau;
    traj.snapshots.reserve(static_cast<std::size_t>(problem.n_steps));
    Eigen::VectorXd u = u0;
    for (int j = 1; j <= problem.n_steps; ++j) {
        u = forward_step_burgers(problem, u, j);
        traj.snapshots.push_back(u);
    }
    return traj;
}

}  // namespace ipod
