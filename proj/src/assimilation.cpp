/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#include "ipod/assimilation.hpp"

#include "ipod/rng.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

namespace ipod {

namespace {

void check_observations(const ForwardModel& model, const ObservationSet& obs) {
    if (static_cast<int>(obs.values.size()) != model.num_steps()) {
        std::ostringstream msg;
        msg << "assimilation: observation count " << obs.values.size()
            << " does not match the time grid (" << model.num_steps() << " levels)";
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

void AssimilationConfig::validate() const {
    if (gamma < 0.0) {
        throw std::invalid_argument("AssimilationConfig: gamma must be nonnegative");
    }
    if (!(kappa > 0.0)) {
        throw std::invalid_argument("AssimilationConfig: kappa must be positive");
    }
    if (!(tol_sd > 0.0)) {
        throw std::invalid_argument("AssimilationConfig: tol_sd must be positive");
    }
    if (max_iters < 1) {
        throw std::invalid_argument("AssimilationConfig: max_iters must be at least 1");
    }
    compression.validate();
}

double ForwardModel::mass_norm_sq(const Eigen::VectorXd& v) const {
    return v.dot(mass() * v);
}

double ForwardModel::mass_norm(const Eigen::VectorXd& v) const {
    return std::sqrt(std::max(0.0, mass_norm_sq(v)));
}

LinearInterfaceModel::LinearInterfaceModel(std::shared_ptr<const DiscreteProblem> problem)
    : problem_(std::move(problem)) {}

Eigen::Index LinearInterfaceModel::dim() const { return problem_->dim(); }
int LinearInterfaceModel::num_steps() const { return problem_->n_steps; }
double LinearInterfaceModel::tau() const { return problem_->tau; }
const SpMat& LinearInterfaceModel::mass() const { return problem_->mass; }

WeightOperator LinearInterfaceModel::weight(WeightChoice choice) const {
    return choice == WeightChoice::l2_mass ? problem_->mass_weight()
                                           : problem_->h1_weight_operator();
}

Eigen::VectorXd LinearInterfaceModel::forward_step(const Eigen::VectorXd& u_prev, int j) const {
    return forward_step_linear(*problem_, u_prev, j);
}

Eigen::VectorXd LinearInterfaceModel::adjoint_step(const Eigen::VectorXd& lambda_next, int j,
                                                   const Eigen::VectorXd& u_j,
                                                   const Eigen::VectorXd& obs_j) const {
    (void)j;
    return adjoint_step_linear(*problem_, lambda_next, u_j, obs_j);
}

BurgersModel::BurgersModel(std::shared_ptr<const Burgers1dProblem> problem)
    : problem_(std::move(problem)) {}

Eigen::Index BurgersModel::dim() const { return problem_->dim(); }
int BurgersModel::num_steps() const { return problem_->n_steps; }
double BurgersModel::tau() const { return problem_->tau; }
const SpMat& BurgersModel::mass() const { return problem_->mass; }

WeightOperator BurgersModel::weight(WeightChoice choice) const {
    return choice == WeightChoice::l2_mass ? problem_->mass_weight()
                                           : problem_->h1_weight_operator();
}

Eigen::VectorXd BurgersModel::forward_step(const Eigen::VectorXd& u_prev, int j) const {
    return forward_step_burgers(*problem_, u_prev, j);
}

Eigen::VectorXd BurgersModel::adjoint_step(const Eigen::VectorXd& lambda_next, int j,
                                           const Eigen::VectorXd& u_j,
                                           const Eigen::VectorXd& obs_j) const {
    (void)j;
    return adjoint_step_burgers(*problem_, lambda_next, u_j, obs_j - u_j);
}

double objective(const ForwardModel& model, const Eigen::VectorXd& u0, const ObservationSet& obs,
                 double gamma) {
    check_observations(model, obs);
    const double tau = model.tau();
    double value = 0.5 * gamma * model.mass_norm_sq(u0);
    Eigen::VectorXd u = u0;
    for (int j = 1; j <= model.num_steps(); ++j) {
        u = model.forward_step(u, j);
        value += 0.5 * tau * model.mass_norm_sq(obs.values[static_cast<std::size_t>(j - 1)] - u);
    }
    return value;
}

ExactGradientResult gradient_exact(const ForwardModel& model, const Eigen::VectorXd& u0,
                                   const ObservationSet& obs, double gamma,
                                   SnapshotCounter* counter) {
    check_observations(model, obs);
    const int n = model.num_steps();
    const double tau = model.tau();

    ExactGradientResult result;
    result.trajectory.tau = tau;
    result.trajectory.snapshots.reserve(static_cast<std::size_t>(n));
    result.objective = 0.5 * gamma * model.mass_norm_sq(u0);

    Eigen::VectorXd u = u0;
    for (int j = 1; j <= n; ++j) {
        u = model.forward_step(u, j);
        result.objective +=
            0.5 * tau * model.mass_norm_sq(obs.values[static_cast<std::size_t>(j - 1)] - u);
        result.trajectory.snapshots.push_back(u);
        if (counter != nullptr) {
            counter->acquire();
        }
    }

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(model.dim());
    for (int j = n; j >= 1; --j) {
        lambda = model.adjoint_step(lambda, j, result.trajectory.snapshots[static_cast<std::size_t>(j - 1)],
                                    obs.values[static_cast<std::size_t>(j - 1)]);
    }

    result.gradient = gamma * u0 - lambda;
    return result;
}

CompressedGradientResult gradient_compressed(const ForwardModel& model, const Eigen::VectorXd& u0,
                                             const ObservationSet& obs, double gamma,
                                             const IpodTolerances& tols, WeightChoice weight,
                                             SnapshotCounter* counter) {
    check_observations(model, obs);
    const int n = model.num_steps();
    const double tau = model.tau();
    const double sqrt_tau = std::sqrt(tau);

    CompressedGradientResult result;
    result.objective = 0.5 * gamma * model.mass_norm_sq(u0);

    // Forward phase: each snapshot is scaled by sqrt(tau), streamed into the
    // factorization, and dropped. Only the working snapshot is alive.
    std::optional<IncrementalPod> pod;
    {
        Eigen::VectorXd u = u0;
        for (int j = 1; j <= n; ++j) {
            if (counter != nullptr && j > 1) {
                counter->release();
            }
            u = model.forward_step(u, j);
            if (counter != nullptr) {
                counter->acquire();
            }
            result.objective +=
                0.5 * tau * model.mass_norm_sq(obs.values[static_cast<std::size_t>(j - 1)] - u);
            if (!pod) {
                pod.emplace(Eigen::VectorXd(sqrt_tau * u), model.weight(weight), tols);
            } else {
                pod->update(sqrt_tau * u);
            }
        }
        if (counter != nullptr) {
            counter->release();
        }
    }
    pod->finalize();

    const double budget = 10.0 * n * (tols.tol_p + tols.tol_sv);
    if (budget > 0.0 && pod->error_bound() > budget) {
        std::cerr << "[ipod] warning: compression ledger " << pod->error_bound()
                  << " is far past the threshold budget " << budget << '\n';
    }

    // Backward phase: decompress one snapshot per level; the reconstruction
    // drives both the linearization point and the observation mismatch.
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(model.dim());
    for (int j = n; j >= 1; --j) {
        if (counter != nullptr) {
            counter->acquire();
        }
        const Eigen::VectorXd u_j = pod->reconstruct(j, tau);
        lambda = model.adjoint_step(lambda, j, u_j, obs.values[static_cast<std::size_t>(j - 1)]);
        if (counter != nullptr) {
            counter->release();
        }
    }

    result.gradient = gamma * u0 - lambda;
    result.compression = pod->compressed();
    return result;
}

DescentResult run_descent(const ForwardModel& model, const ObservationSet& obs,
                          const AssimilationConfig& config, const Eigen::VectorXd& u0_initial,
                          DescentMode mode) {
    config.validate();
    check_observations(model, obs);
    if (u0_initial.size() != model.dim()) {
        throw std::invalid_argument("run_descent: initial guess dimension mismatch");
    }

    DescentResult result;
    result.final_u0 = u0_initial;
    double previous_objective = 0.0;

    for (int i = 0; i < config.max_iters; ++i) {
        const auto started = std::chrono::steady_clock::now();
        SnapshotCounter counter;

        IterationRecord record;
        record.iter = i;

        Eigen::VectorXd gradient;
        if (mode == DescentMode::exact) {
            ExactGradientResult g =
                gradient_exact(model, result.final_u0, obs, config.gamma, &counter);
            gradient = std::move(g.gradient);
            record.objective = g.objective;
        } else {
            CompressedGradientResult g =
                gradient_compressed(model, result.final_u0, obs, config.gamma,
                                    config.compression, config.weight_choice, &counter);
            gradient = std::move(g.gradient);
            record.objective = g.objective;
            record.e_p = g.compression.e_p;
            record.e_sv = g.compression.e_sv;
            record.rank = g.compression.rank();
            if (config.reference_gradient) {
                const ExactGradientResult ref =
                    gradient_exact(model, result.final_u0, obs, config.gamma, nullptr);
                record.gradient_error = model.mass_norm(gradient - ref.gradient);
            }
            result.final_compression = std::move(g.compression);
        }

        record.grad_norm = model.mass_norm(gradient);
        record.peak_snapshots = counter.peak;

        if (!std::isfinite(record.objective) || !std::isfinite(record.grad_norm)) {
            result.records.push_back(record);
            throw DivergenceError("run_descent: non-finite objective or gradient at iteration " +
                                      std::to_string(i),
                                  result.records);
        }

        result.final_u0 -= config.kappa * gradient;

        record.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.records.push_back(record);

        if (config.termination == TerminationMode::grad_norm) {
            // The error measure is kappa times the norm of the gradient just
            // applied.
            if (config.kappa * record.grad_norm <= config.tol_sd) {
                return result;
            }
        } else if (i >= 1 &&
                   std::abs(record.objective - previous_objective) <= config.tol_sd) {
            return result;
        }
        previous_objective = record.objective;
    }
    result.hit_max_iters = true;
    return result;
}

double estimate_hessian_norm(const LinearInterfaceModel& model, double gamma, int iterations,
                             std::uint64_t seed) {
    const DiscreteProblem& problem = model.problem();
    const int n = problem.n_steps;
    const double tau = problem.tau;

    // Hessian-vector product of the linear-quadratic objective: run the
    // homogeneous forward recursion from v, then the adjoint recursion with
    // the negated trajectory as mismatch; H v = gamma v - lambda_1.
    const auto hessian_apply = [&](const Eigen::VectorXd& v) {
        std::vector<Eigen::VectorXd> sweep(static_cast<std::size_t>(n));
        Eigen::VectorXd u = v;
        for (int j = 0; j < n; ++j) {
            u = problem.step_solver->solve(Eigen::VectorXd(problem.mass * u));
            sweep[static_cast<std::size_t>(j)] = u;
        }
        Eigen::VectorXd lambda = Eigen::VectorXd::Zero(problem.dim());
        for (int j = n - 1; j >= 0; --j) {
            lambda = problem.step_solver->solve(Eigen::VectorXd(
                problem.mass * (lambda - tau * sweep[static_cast<std::size_t>(j)])));
        }
        return Eigen::VectorXd(gamma * v - lambda);
    };

    Rng rng(seed);
    Eigen::VectorXd v = rng.gaussian_vector(problem.dim());
    v /= model.mass_norm(v);
    double lambda_max = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Eigen::VectorXd w = hessian_apply(v);
        lambda_max = model.mass_norm(w);
        if (!(lambda_max > 0.0)) {
            break;
        }
        v = w / lambda_max;
    }
    return lambda_max;
}

}  // namespace ipod
