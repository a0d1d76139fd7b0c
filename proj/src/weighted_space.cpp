/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#include "ipod/weighted_space.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <mutex>
#include <sstream>

namespace ipod {

namespace {

void check_vector_dim(const Eigen::VectorXd& x, Eigen::Index expected, const char* name) {
    if (x.size() != expected) {
        std::ostringstream msg;
        msg << "weighted_space: " << name << " has dimension " << x.size()
            << ", expected " << expected;
        throw std::invalid_argument(msg.str());
    }
}

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        hash ^= p[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

}  // namespace

struct WeightOperator::Factor {
    std::once_flag once;
    Eigen::SimplicialLLT<SpMat> llt;
    bool ok = false;
};

WeightOperator::WeightOperator(Eigen::Index dim, std::shared_ptr<const SpMat> matrix)
    : dim_(dim), matrix_(std::move(matrix)), factor_(std::make_shared<Factor>()) {}

WeightOperator WeightOperator::identity(Eigen::Index dim) {
    if (dim <= 0) {
        throw std::invalid_argument("WeightOperator: dimension must be positive");
    }
    return WeightOperator(dim, nullptr);
}

WeightOperator WeightOperator::from_sparse(SpMat matrix) {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
        throw std::invalid_argument("WeightOperator: weight matrix must be square and nonempty");
    }
    matrix.makeCompressed();
    const SpMat diff = SpMat(matrix.transpose()) - matrix;
    double max_abs = 0.0;
    for (int k = 0; k < matrix.outerSize(); ++k) {
        for (SpMat::InnerIterator it(matrix, k); it; ++it) {
            max_abs = std::max(max_abs, std::abs(it.value()));
        }
    }
    double max_skew = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k) {
        for (SpMat::InnerIterator it(diff, k); it; ++it) {
            max_skew = std::max(max_skew, std::abs(it.value()));
        }
    }
    if (max_skew > 1e-12 * std::max(max_abs, 1.0)) {
        throw std::invalid_argument("WeightOperator: weight matrix is not symmetric");
    }
    const Eigen::Index n = matrix.rows();
    return WeightOperator(n, std::make_shared<const SpMat>(std::move(matrix)));
}

const WeightOperator::Factor& WeightOperator::factor() const {
    std::call_once(factor_->once, [this] {
        factor_->llt.compute(*matrix_);
        factor_->ok = (factor_->llt.info() == Eigen::Success);
    });
    if (!factor_->ok) {
        throw WeightNotSpdError("WeightOperator: Cholesky factorization failed, weight is not SPD");
    }
    return *factor_;
}

double WeightOperator::inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    check_vector_dim(x, dim_, "x");
    check_vector_dim(y, dim_, "y");
    if (is_identity()) {
        return y.dot(x);
    }
    return y.dot(*matrix_ * x);
}

double WeightOperator::norm(const Eigen::VectorXd& x) const {
    return std::sqrt(std::max(0.0, norm_sq(x)));
}

Eigen::VectorXd WeightOperator::apply(const Eigen::VectorXd& x) const {
    check_vector_dim(x, dim_, "x");
    if (is_identity()) {
        return x;
    }
    return *matrix_ * x;
}

Eigen::MatrixXd WeightOperator::apply(const Eigen::MatrixXd& x) const {
    if (x.rows() != dim_) {
        throw std::invalid_argument("WeightOperator: matrix row count does not match weight dimension");
    }
    if (is_identity()) {
        return x;
    }
    return *matrix_ * x;
}

Eigen::MatrixXd WeightOperator::factor_transpose_times(const Eigen::MatrixXd& x) const {
    if (x.rows() != dim_) {
        throw std::invalid_argument("WeightOperator: matrix row count does not match weight dimension");
    }
    if (is_identity()) {
        return x;
    }
    const Factor& f = factor();
    // M = P^T L L^T P: the permuted factor applies as L^T (P x).
    Eigen::MatrixXd permuted = f.llt.permutationP() * x;
    return f.llt.matrixU() * permuted;
}

Eigen::MatrixXd WeightOperator::solve_factor_transpose(const Eigen::MatrixXd& y) const {
    if (y.rows() != dim_) {
        throw std::invalid_argument("WeightOperator: matrix row count does not match weight dimension");
    }
    if (is_identity()) {
        return y;
    }
    const Factor& f = factor();
    Eigen::MatrixXd z = f.llt.matrixU().solve(y);
    return f.llt.permutationPinv() * z;
}

std::uint64_t WeightOperator::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const std::uint64_t kind = is_identity() ? 0 : 1;
    h = fnv1a(h, &kind, sizeof kind);
    const std::uint64_t n = static_cast<std::uint64_t>(dim_);
    h = fnv1a(h, &n, sizeof n);
    if (!is_identity()) {
        for (int k = 0; k < matrix_->outerSize(); ++k) {
            for (SpMat::InnerIterator it(*matrix_, k); it; ++it) {
                const std::int64_t r = it.row();
                const std::int64_t c = it.col();
                const double v = it.value();
                h = fnv1a(h, &r, sizeof r);
                h = fnv1a(h, &c, sizeof c);
                h = fnv1a(h, &v, sizeof v);
            }
        }
    }
    return h;
}

double weighted_inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                      const WeightOperator& weight) {
    return weight.inner(x, y);
}

double orthonormality_defect(const Eigen::MatrixXd& v, const WeightOperator& weight) {
    if (v.rows() != weight.dim()) {
        throw std::invalid_argument("orthonormality_defect: column dimension does not match weight");
    }
    Eigen::MatrixXd gram = v.transpose() * weight.apply(v);
    gram.diagonal().array() -= 1.0;
    return gram.cwiseAbs().maxCoeff();
}

WeightedFactorization core_weighted_svd(const Eigen::MatrixXd& u, const WeightOperator& weight) {
    if (u.rows() != weight.dim()) {
        throw std::invalid_argument("core_weighted_svd: row count does not match weight dimension");
    }
    if (u.size() == 0 || u.cwiseAbs().maxCoeff() == 0.0) {
        throw std::invalid_argument("core_weighted_svd: matrix is zero, core SVD of rank 0 is undefined");
    }

    const Eigen::MatrixXd b = weight.factor_transpose_times(u);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);

    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = kCoreSingularValueFloor * sv[0];
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv[rank] > cutoff) {
        ++rank;
    }

    WeightedFactorization out;
    out.sigma = sv.head(rank);
    out.W = svd.matrixV().leftCols(rank);
    out.V = weight.solve_factor_transpose(svd.matrixU().leftCols(rank));

    // Deterministic sign: first nonzero entry of each right vector nonnegative.
    for (Eigen::Index j = 0; j < rank; ++j) {
        for (Eigen::Index i = 0; i < out.W.rows(); ++i) {
            const double w = out.W(i, j);
            if (w != 0.0) {
                if (w < 0.0) {
                    out.W.col(j) = -out.W.col(j);
                    out.V.col(j) = -out.V.col(j);
                }
                break;
            }
        }
    }
    return out;
}

double hs_norm_sq(const Eigen::MatrixXd& u, const WeightOperator& weight) {
    if (u.rows() != weight.dim()) {
        throw std::invalid_argument("hs_norm_sq: row count does not match weight dimension");
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        total += weight.norm_sq(u.col(j));
    }
    return total;
}

}  // namespace ipod
