/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

// Description: Weighted Euclidean geometry: inner products and norms induced
//              by an SPD weight matrix, Hilbert-Schmidt norms, and the batch
//              core weighted SVD computed through the Cholesky factor of the
//              weight. The batch SVD is the correctness oracle for the
//              streaming engine.

#ifndef IPOD_WEIGHTED_SPACE_HPP
#define IPOD_WEIGHTED_SPACE_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <memory>
#include <stdexcept>

namespace ipod {

using SpMat = Eigen::SparseMatrix<double>;

/// Thrown when a weight matrix fails the SPD contract (Cholesky breakdown).
class WeightNotSpdError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Relative floor under which singular values count as zero for the "core"
/// cutoff (exactly-zero singular values are excluded; floating point needs a
/// relative threshold).
inline constexpr double kCoreSingularValueFloor = 1e-14;

/// An SPD bilinear form defining the compression geometry. Either the
/// identity (plain Euclidean arithmetic, no matrix stored) or an explicit
/// sparse symmetric positive definite matrix. The Cholesky factor is computed
/// lazily on first use and cached; instances are immutable afterwards and
/// safe to share across threads.
class WeightOperator {
public:
    static WeightOperator identity(Eigen::Index dim);

    /// Wraps an explicit sparse SPD matrix. Symmetry is validated here
    /// (1e-12 relative); positive definiteness is validated when the
    /// Cholesky factor is first needed.
    static WeightOperator from_sparse(SpMat matrix);

    Eigen::Index dim() const { return dim_; }
    bool is_identity() const { return matrix_ == nullptr; }

    /// y^T M x.
    double inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    double norm_sq(const Eigen::VectorXd& x) const { return inner(x, x); }
    double norm(const Eigen::VectorXd& x) const;

    /// M x (identity: returns x).
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;

    /// With M = (P^T L)(L^T P), returns L^T P X, the isometry taking the
    /// M-inner product to the plain Euclidean one.
    Eigen::MatrixXd factor_transpose_times(const Eigen::MatrixXd& x) const;

    /// Solves L^T P X = Y, the inverse of factor_transpose_times.
    Eigen::MatrixXd solve_factor_transpose(const Eigen::MatrixXd& y) const;

    /// Stable 64-bit digest of kind, dimension and matrix entries; used to
    /// tag serialized factorizations with the geometry they were built in.
    std::uint64_t fingerprint() const;

    /// Underlying matrix, or nullptr for the identity kind.
    const SpMat* matrix() const { return matrix_.get(); }

private:
    WeightOperator(Eigen::Index dim, std::shared_ptr<const SpMat> matrix);

    struct Factor;
    const Factor& factor() const;

    Eigen::Index dim_ = 0;
    std::shared_ptr<const SpMat> matrix_;  // null for identity
    std::shared_ptr<Factor> factor_;       // lazily filled, internally synchronized
};

/// Core weighted SVD U = V diag(sigma) W^T with V^T M V = I, W^T W = I and
/// strictly positive, non-increasing sigma.
struct WeightedFactorization {
    Eigen::MatrixXd V;
    Eigen::VectorXd sigma;
    Eigen::MatrixXd W;

    Eigen::MatrixXd reconstruct() const { return V * sigma.asDiagonal() * W.transpose(); }
    Eigen::Index rank() const { return sigma.size(); }
};

/// Weighted inner product y^T M x of two vectors.
double weighted_inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                      const WeightOperator& weight);

/// Max-entry magnitude of V^T M V - I, the deviation from M-orthonormality.
double orthonormality_defect(const Eigen::MatrixXd& v, const WeightOperator& weight);

/// Batch core M-weighted SVD. Factors M = L L^T, takes a dense SVD of
/// L^T U and maps the left vectors back through L^{-T}. Singular values
/// below kCoreSingularValueFloor * sigma_max are excluded. The sign of each
/// column pair is fixed so the first nonzero entry of every W column is
/// nonnegative, which makes results deterministic across SVD backends.
WeightedFactorization core_weighted_svd(const Eigen::MatrixXd& u,
                                        const WeightOperator& weight);

/// Squared Hilbert-Schmidt norm: sum of squared M-norms of the columns.
/// Evaluated column by column, so it can also be accumulated over a stream.
double hs_norm_sq(const Eigen::MatrixXd& u, const WeightOperator& weight);

}  // namespace ipod

#endif  // IPOD_WEIGHTED_SPACE_HPP
