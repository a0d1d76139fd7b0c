/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#include "ipod/incremental_pod.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

namespace ipod {

namespace {

constexpr char kStateMagic[8] = {'I', 'P', 'O', 'D', 'S', 'T', 'A', 'T'};
constexpr std::uint32_t kStateVersion = 1;

std::mutex g_warning_mutex;
std::function<void(const std::string&)> g_warning_handler;

void warn(const std::string& message) {
    std::function<void(const std::string&)> handler;
    {
        std::lock_guard<std::mutex> lock(g_warning_mutex);
        handler = g_warning_handler;
    }
    if (handler) {
        handler(message);
    } else {
        std::cerr << "[ipod] warning: " << message << '\n';
    }
}

void write_raw(std::ostream& out, const void* data, std::size_t bytes) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void read_raw(std::istream& in, void* data, std::size_t bytes) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
}

}  // namespace

void set_ipod_warning_handler(std::function<void(const std::string&)> handler) {
    std::lock_guard<std::mutex> lock(g_warning_mutex);
    g_warning_handler = std::move(handler);
}

void IpodTolerances::validate() const {
    if (tol_p < 0.0 || tol_sv < 0.0) {
        throw std::invalid_argument("IpodTolerances: truncation thresholds must be nonnegative");
    }
    if (!(tol_o > 0.0)) {
        throw std::invalid_argument("IpodTolerances: tol_o must be positive");
    }
    if (reorth_cap < 1) {
        throw std::invalid_argument("IpodTolerances: reorth_cap must be at least 1");
    }
}

double CompressedTrajectory::energy_ratio() const {
    if (!(hs_stream_sq > 0.0)) {
        throw std::logic_error("CompressedTrajectory: empty stream has no energy ratio");
    }
    return std::min(1.0, std::sqrt(singular_values.squaredNorm() / hs_stream_sq));
}

Eigen::VectorXd CompressedTrajectory::reconstruct(Eigen::Index j, double tau) const {
    if (j < 1 || j > count()) {
        std::ostringstream msg;
        msg << "CompressedTrajectory: snapshot index " << j << " outside [1, " << count() << "]";
        throw std::out_of_range(msg.str());
    }
    if (!(tau > 0.0)) {
        throw std::invalid_argument("CompressedTrajectory: tau must be positive");
    }
    return left_basis *
           (singular_values.asDiagonal() * right_vectors.row(j - 1).transpose()) /
           std::sqrt(tau);
}

void CompressedTrajectory::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("CompressedTrajectory: cannot open " + path + " for writing");
    }
    const std::uint64_t m = static_cast<std::uint64_t>(dim());
    const std::uint64_t l = static_cast<std::uint64_t>(rank());
    const std::uint64_t n = static_cast<std::uint64_t>(count());
    write_raw(out, kStateMagic, sizeof kStateMagic);
    write_raw(out, &kStateVersion, sizeof kStateVersion);
    write_raw(out, &m, sizeof m);
    write_raw(out, &l, sizeof l);
    write_raw(out, &n, sizeof n);
    write_raw(out, &e_p, sizeof e_p);
    write_raw(out, &e_sv, sizeof e_sv);
    write_raw(out, &hs_stream_sq, sizeof hs_stream_sq);
    write_raw(out, &weight_fingerprint, sizeof weight_fingerprint);
    write_raw(out, singular_values.data(), sizeof(double) * static_cast<std::size_t>(l));
    write_raw(out, left_basis.data(), sizeof(double) * static_cast<std::size_t>(m * l));
    write_raw(out, right_vectors.data(), sizeof(double) * static_cast<std::size_t>(n * l));
    if (!out) {
        throw std::runtime_error("CompressedTrajectory: write to " + path + " failed");
    }
}

CompressedTrajectory CompressedTrajectory::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("CompressedTrajectory: cannot open " + path);
    }
    char magic[8];
    std::uint32_t version = 0;
    read_raw(in, magic, sizeof magic);
    if (!in || std::memcmp(magic, kStateMagic, sizeof magic) != 0) {
        throw std::runtime_error("CompressedTrajectory: bad magic in " + path);
    }
    read_raw(in, &version, sizeof version);
    if (version != kStateVersion) {
        std::ostringstream msg;
        msg << "CompressedTrajectory: unsupported container version " << version;
        throw std::runtime_error(msg.str());
    }
    std::uint64_t m = 0, l = 0, n = 0;
    CompressedTrajectory t;
    read_raw(in, &m, sizeof m);
    read_raw(in, &l, sizeof l);
    read_raw(in, &n, sizeof n);
    read_raw(in, &t.e_p, sizeof t.e_p);
    read_raw(in, &t.e_sv, sizeof t.e_sv);
    read_raw(in, &t.hs_stream_sq, sizeof t.hs_stream_sq);
    read_raw(in, &t.weight_fingerprint, sizeof t.weight_fingerprint);
    t.singular_values.resize(static_cast<Eigen::Index>(l));
    t.left_basis.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l));
    t.right_vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l));
    read_raw(in, t.singular_values.data(), sizeof(double) * l);
    read_raw(in, t.left_basis.data(), sizeof(double) * m * l);
    read_raw(in, t.right_vectors.data(), sizeof(double) * n * l);
    if (!in) {
        throw std::runtime_error("CompressedTrajectory: truncated container " + path);
    }
    return t;
}

IncrementalPod::IncrementalPod(const Eigen::VectorXd& first_snapshot, WeightOperator weight,
                               IpodTolerances tols)
    : weight_(std::move(weight)), tols_(tols) {
    tols_.validate();
    if (first_snapshot.size() != weight_.dim()) {
        throw std::invalid_argument("IncrementalPod: snapshot dimension does not match weight");
    }
    if (!first_snapshot.allFinite()) {
        throw std::invalid_argument("IncrementalPod: first snapshot has non-finite entries");
    }
    const double nrm = weight_.norm(first_snapshot);
    if (!(nrm > 0.0)) {
        throw std::invalid_argument(
            "IncrementalPod: first snapshot has zero norm, normalization undefined");
    }
    v_ = first_snapshot / nrm;
    sigma_.resize(1);
    sigma_[0] = nrm;
    w_.resize(1, 1);
    w_(0, 0) = 1.0;
    w_rows_ = 1;
    hs_stream_sq_ = nrm * nrm;
    count_ = 1;
}

Eigen::MatrixXd IncrementalPod::right_vectors() const {
    return w_.topLeftCorner(w_rows_, sigma_.size());
}

IncrementalPod::ReorthResult IncrementalPod::reorthogonalize(Eigen::VectorXd& e) const {
    ReorthResult result;
    Eigen::VectorXd coeffs = v_.transpose() * weight_.apply(e);
    while (coeffs.cwiseAbs().maxCoeff() > tols_.tol_o) {
        if (result.passes >= tols_.reorth_cap) {
            throw NumericalDegradationError(
                "IncrementalPod: residual still not orthogonal after reorth_cap passes");
        }
        e.noalias() -= v_ * coeffs;
        const double nrm = weight_.norm(e);
        // A pass that removes almost the whole vector shows the residual was
        // numerically inside the span; no meaningful direction remains.
        if (nrm < 0.1) {
            result.dependent = true;
            return result;
        }
        e /= nrm;
        ++result.passes;
        coeffs = v_.transpose() * weight_.apply(e);
    }
    return result;
}

void IncrementalPod::append_right_rows(const Eigen::MatrixXd& w_update, Eigen::Index extra_rows,
                                       const Eigen::MatrixXd& tail) {
    Eigen::MatrixXd next(w_rows_ + extra_rows, w_update.cols());
    next.topRows(w_rows_).noalias() = w_.topLeftCorner(w_rows_, w_update.rows()) * w_update;
    next.bottomRows(extra_rows) = tail;
    w_ = std::move(next);
    w_rows_ += extra_rows;
}

void IncrementalPod::flush_pending() {
    const Eigen::Index l = sigma_.size();
    const Eigen::Index d = pending_cols_;

    // Small update problem [Sigma B]: full row rank l, so its core SVD keeps
    // all l singular values.
    Eigen::MatrixXd q(l, l + d);
    q.setZero();
    q.leftCols(l).diagonal() = sigma_;
    q.rightCols(d) = pending_.leftCols(d);

    update_svd_.compute(q, Eigen::ComputeThinU | Eigen::ComputeThinV);
    deferred_rotation_ = update_svd_.matrixU();  // l x l
    rotation_pending_ = true;
    sigma_ = update_svd_.singularValues();

    const Eigen::MatrixXd& wq = update_svd_.matrixV();  // (l+d) x l
    append_right_rows(wq.topRows(l), d, wq.bottomRows(d));

    pending_cols_ = 0;
    warned_wide_buffer_ = false;
}

UpdateOutcome IncrementalPod::update(const Eigen::VectorXd& snapshot) {
    if (snapshot.size() != weight_.dim()) {
        std::ostringstream msg;
        msg << "IncrementalPod: snapshot dimension " << snapshot.size() << " does not match "
            << weight_.dim();
        throw std::invalid_argument(msg.str());
    }
    if (!snapshot.allFinite()) {
        throw std::invalid_argument("IncrementalPod: snapshot has non-finite entries");
    }

    const Eigen::VectorXd weighted = weight_.apply(snapshot);
    const double norm_sq = std::max(0.0, snapshot.dot(weighted));
    const double norm_u = std::sqrt(norm_sq);
    hs_stream_sq_ += norm_sq;
    ++count_;

    const Eigen::Index l = sigma_.size();
    Eigen::VectorXd b = v_.transpose() * weighted;
    Eigen::VectorXd residual = snapshot - v_ * b;
    const double p = weight_.norm(residual);

    UpdateOutcome outcome;
    outcome.residual_norm = p;

    // Buffer when the snapshot is (nearly) dependent on the basis. The
    // dependence floor catches numerically exact dependence at tol_p = 0,
    // where no residual direction survives normalization.
    if (p < tols_.tol_p || p <= kDependenceFloor * norm_u) {
        if (pending_.rows() != l) {
            // Rank changed since the last buffering episode (the buffer is
            // empty then); realign the coefficient rows.
            pending_.resize(l, std::max<Eigen::Index>(4, pending_.cols()));
        }
        if (pending_cols_ == pending_.cols()) {
            pending_.conservativeResize(l, 2 * pending_.cols());
        }
        pending_.col(pending_cols_++) = b;
        e_p_ += p;
        if (!warned_wide_buffer_ && pending_cols_ > 10 * l) {
            warned_wide_buffer_ = true;
            std::ostringstream msg;
            msg << "pending block is " << pending_cols_ << " columns wide at rank " << l;
            warn(msg.str());
        }
        outcome.kind = UpdateKind::buffered;
        return outcome;
    }

    if (pending_cols_ > 0) {
        flush_pending();
        b = deferred_rotation_.transpose() * b;
    }

    Eigen::VectorXd e = residual / p;
    const ReorthResult reorth = reorthogonalize(e);
    outcome.reorth_passes = reorth.passes;
    if (reorth.dependent) {
        // The projection exposed the snapshot as numerically dependent after
        // all; fall back to the buffering path (same error accounting: the
        // discarded residual has norm exactly p). Any rotation parked by the
        // flush above is folded so it never outlives this call.
        if (rotation_pending_) {
            v_ = v_ * deferred_rotation_;
            rotation_pending_ = false;
        }
        pending_.resize(sigma_.size(), 4);
        pending_.col(pending_cols_++) = b;
        e_p_ += p;
        outcome.kind = UpdateKind::buffered;
        return outcome;
    }
    outcome.sigma_before = sigma_;

    Eigen::MatrixXd q(l + 1, l + 1);
    q.setZero();
    q.topLeftCorner(l, l).diagonal() = sigma_;
    q.col(l).head(l) = b;
    q(l, l) = p;

    update_svd_.compute(q, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& mu = update_svd_.singularValues();
    outcome.sigma_update = mu;

    // Rotation of [V e] into the new basis, with any deferred flush rotation
    // folded in so V is touched by exactly one product.
    Eigen::MatrixXd transform = update_svd_.matrixU();
    if (rotation_pending_) {
        transform.topRows(l) = deferred_rotation_ * transform.topRows(l);
    }

    // The smallest singular value of the update problem is dropped when it is
    // below tol_sv, or numerically zero by the core convention.
    const double sv_cut = std::max(tols_.tol_sv, kCoreSingularValueFloor * mu[0]);
    const Eigen::MatrixXd& wq = update_svd_.matrixV();
    Eigen::MatrixXd tail;

    if (mu[l] > sv_cut) {
        Eigen::MatrixXd v_next(v_.rows(), l + 1);
        v_next.noalias() = v_ * transform.topRows(l);
        v_next.noalias() += e * transform.row(l);
        v_ = std::move(v_next);
        sigma_ = mu;
        tail = wq.row(l);
        append_right_rows(wq.topRows(l), 1, tail);
        outcome.kind = UpdateKind::exact;
    } else {
        Eigen::MatrixXd v_next(v_.rows(), l);
        v_next.noalias() = v_ * transform.topLeftCorner(l, l);
        v_next.noalias() += e * transform.row(l).head(l);
        v_ = std::move(v_next);
        sigma_ = mu.head(l);
        tail = wq.row(l).head(l);
        append_right_rows(wq.topLeftCorner(l, l), 1, tail);
        e_sv_ += mu[l];
        outcome.kind = UpdateKind::sv_truncated;
    }

    rotation_pending_ = false;
    return outcome;
}

void IncrementalPod::finalize() {
    if (pending_cols_ > 0) {
        flush_pending();
    }
    if (rotation_pending_) {
        v_ = v_ * deferred_rotation_;
        rotation_pending_ = false;
    }
}

double IncrementalPod::energy_ratio() const {
    if (!(hs_stream_sq_ > 0.0)) {
        throw std::logic_error("IncrementalPod: empty stream has no energy ratio");
    }
    double retained = sigma_.squaredNorm();
    for (Eigen::Index k = 0; k < pending_cols_; ++k) {
        retained += pending_.col(k).squaredNorm();
    }
    return std::min(1.0, std::sqrt(retained / hs_stream_sq_));
}

Eigen::VectorXd IncrementalPod::reconstruct(Eigen::Index j, double tau) const {
    if (pending_cols_ != 0) {
        throw std::logic_error(
            "IncrementalPod: reconstruct requires a finalized state (pending block not flushed)");
    }
    if (j < 1 || j > count_) {
        std::ostringstream msg;
        msg << "IncrementalPod: snapshot index " << j << " outside [1, " << count_ << "]";
        throw std::out_of_range(msg.str());
    }
    if (!(tau > 0.0)) {
        throw std::invalid_argument("IncrementalPod: tau must be positive");
    }
    return v_ * (sigma_.asDiagonal() * w_.row(j - 1).head(sigma_.size()).transpose()) /
           std::sqrt(tau);
}

CompressedTrajectory IncrementalPod::compressed() const {
    if (pending_cols_ != 0) {
        throw std::logic_error("IncrementalPod: finalize() before exporting the factorization");
    }
    CompressedTrajectory t;
    t.left_basis = v_;
    t.singular_values = sigma_;
    t.right_vectors = right_vectors();
    t.e_p = e_p_;
    t.e_sv = e_sv_;
    t.hs_stream_sq = hs_stream_sq_;
    t.weight_fingerprint = weight_.fingerprint();
    return t;
}

}  // namespace ipod
