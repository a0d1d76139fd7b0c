/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

// Description: 1D viscous Burgers on [0,1] with homogeneous Dirichlet data,
//              implicit Euler in time with a Newton solve per step (analytic
//              Jacobian of the Galerkin convection term), and the discrete
//              adjoint driven by the transposed forward linearization.
//              Parameters are test fixtures, not tied to any reference
//              experiment.

#ifndef IPOD_BURGERS_HPP
#define IPOD_BURGERS_HPP

#include "ipod/fem.hpp"
#include "ipod/interface_problem.hpp"

#include <memory>
#include <vector>

namespace ipod {

/// Raised when the per-step Newton iteration fails to converge.
class NewtonFailureError : public std::runtime_error {
public:
    NewtonFailureError(const std::string& message, int iterations, double residual_norm)
        : std::runtime_error(message), iterations(iterations), residual_norm(residual_norm) {}
    int iterations;
    double residual_norm;
};

struct Burgers1dProblem {
    std::shared_ptr<const IntervalMesh> mesh;
    double nu = 0.0;
    double tau = 0.0;
    int n_steps = 0;
    double total_time = 0.0;

    SpMat mass;
    SpMat stiffness;  // unit coefficient; the viscous term is nu * stiffness
    SpMat h1_weight;  // mass + stiffness

    std::vector<Eigen::VectorXd> forcing;  // level j at index j-1, time j*tau

    int newton_max_iterations = 25;
    double newton_tolerance = 1e-12;

    Eigen::Index dim() const { return mass.rows(); }
    WeightOperator mass_weight() const { return WeightOperator::from_sparse(mass); }
    WeightOperator h1_weight_operator() const { return WeightOperator::from_sparse(h1_weight); }
};

Burgers1dProblem make_burgers_problem(int cells, double tau, double total_time, double nu,
                                      const std::function<double(double, double)>& forcing);

/// Galerkin convection N(u) with N_i(u) = integral of u u_x phi_i, assembled
/// per element on interior dofs (boundary values are zero).
Eigen::VectorXd burgers_convection(const Burgers1dProblem& problem, const Eigen::VectorXd& u);

/// Analytic Jacobian dN/du of the convection term (tridiagonal).
SpMat burgers_convection_jacobian(const Burgers1dProblem& problem, const Eigen::VectorXd& u);

/// One implicit step: solves M (u - u_prev) + tau (nu K u + N(u) - f^j) = 0
/// by Newton iteration from the warm start u_prev. Reports the iteration
/// count through newton_iterations when provided.
Eigen::VectorXd forward_step_burgers(const Burgers1dProblem& problem,
                                     const Eigen::VectorXd& u_prev, int j,
                                     int* newton_iterations = nullptr);

/// One adjoint step: solves J(u^j)^T lambda = M ustar_next + tau M mismatch,
/// where J(u) = M + tau (nu K + dN/du(u)) is the forward step linearization
/// at the stored or decompressed snapshot of level j.
Eigen::VectorXd adjoint_step_burgers(const Burgers1dProblem& problem,
                                     const Eigen::VectorXd& ustar_next,
                                     const Eigen::VectorXd& u_forward_snapshot,
                                     const Eigen::VectorXd& mismatch);

Trajectory run_forward_burgers(const Burgers1dProblem& problem, const Eigen::VectorXd& u0);

}  // namespace ipod

#endif  // IPOD_BURGERS_HPP
