/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

// Description: Matrix Market coordinate I/O (1-based indices) for sparse
//              weights and dense snapshot dumps, plus a raw binary trajectory
//              container.

#ifndef IPOD_MATRIX_MARKET_HPP
#define IPOD_MATRIX_MARKET_HPP

#include "ipod/weighted_space.hpp"

#include <string>

namespace ipod {

/// Writes a sparse matrix in "coordinate real general" form (or "symmetric",
/// storing the lower triangle, when symmetric = true).
void write_matrix_market(const std::string& path, const SpMat& m, bool symmetric = false);

/// Writes a dense matrix as a coordinate listing of its nonzero entries.
void write_matrix_market(const std::string& path, const Eigen::MatrixXd& m);

/// Reads a coordinate-format file into a sparse matrix. Symmetric files are
/// expanded to full storage.
SpMat read_matrix_market_sparse(const std::string& path);

/// Reads a coordinate-format file into a dense matrix (absent entries are 0).
Eigen::MatrixXd read_matrix_market_dense(const std::string& path);

/// Raw binary trajectory dump: fixed header (magic, m, n, tau) followed by
/// column-major doubles.
void write_trajectory_binary(const std::string& path, const Eigen::MatrixXd& snapshots,
                             double tau);
Eigen::MatrixXd read_trajectory_binary(const std::string& path, double* tau_out = nullptr);

}  // namespace ipod

#endif  // IPOD_MATRIX_MARKET_HPP
