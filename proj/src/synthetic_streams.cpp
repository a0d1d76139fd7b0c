/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#include "ipod/synthetic_streams.hpp"

#include "ipod/fem.hpp"

#include <cmath>

namespace ipod {

Eigen::MatrixXd make_stream(const StreamSpec& spec) {
    if (spec.rows < 2 || spec.cols < 2) {
        throw std::invalid_argument("make_stream: need at least a 2x2 stream");
    }
    if (!(spec.floor_rel > 0.0) || spec.floor_rel > 1.0) {
        throw std::invalid_argument("make_stream: floor_rel must lie in (0, 1]");
    }
    Rng rng(spec.seed);

    Eigen::Index modes = 0;
    const Eigen::Index max_modes = std::min(spec.rows, spec.cols);
    if (spec.kind == StreamKind::exact_low_rank) {
        modes = std::min(spec.rank, max_modes);
        if (modes < 1) {
            throw std::invalid_argument("make_stream: rank must be positive");
        }
    } else {
        if (!(spec.decay > 0.0) || !(spec.decay < 1.0)) {
            throw std::invalid_argument("make_stream: decay must lie in (0, 1)");
        }
        modes = static_cast<Eigen::Index>(
                    std::ceil(std::log(spec.floor_rel) / std::log(spec.decay))) +
                1;
        modes = std::min(modes, max_modes);
    }

    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(spec.rows, spec.cols);
    for (Eigen::Index k = 0; k < modes; ++k) {
        double scale;
        if (spec.kind == StreamKind::exact_low_rank) {
            // Log-spaced from 1 down to the floor: mixed-magnitude modes.
            scale = (modes == 1)
                        ? 1.0
                        : std::pow(spec.floor_rel,
                                   static_cast<double>(k) / static_cast<double>(modes - 1));
        } else {
            scale = std::max(std::pow(spec.decay, static_cast<double>(k)), spec.floor_rel);
        }
        const Eigen::VectorXd g =
            rng.gaussian_vector(spec.rows) / std::sqrt(static_cast<double>(spec.rows));
        const Eigen::VectorXd h =
            rng.gaussian_vector(spec.cols) / std::sqrt(static_cast<double>(spec.cols));
        u.noalias() += scale * g * h.transpose();
    }

    const Eigen::Index dup = std::min<Eigen::Index>(spec.duplicate_columns, spec.cols - 1);
    for (Eigen::Index k = 0; k < dup; ++k) {
        const Eigen::Index target = spec.cols - 1 - k;
        const Eigen::Index source = rng.uniform_int(0, target - 1);
        u.col(target) = u.col(source);
    }
    return u;
}

WeightOperator make_stream_weight(const StreamSpec& spec) {
    if (spec.weight == StreamWeight::identity) {
        return WeightOperator::identity(spec.rows);
    }
    const IntervalMesh mesh = build_interval_mesh(static_cast<int>(spec.rows) - 1);
    return WeightOperator::from_sparse(assemble_mass_1d(mesh, false));
}

}  // namespace ipod
