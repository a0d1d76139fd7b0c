/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

// Description: Streaming incremental POD. Snapshots are processed one at a
//              time while the factorization (V, Sigma, W) is kept current
//              through three update paths: buffering of nearly dependent
//              snapshots (p-truncation), discarding of a negligible smallest
//              singular value (SV-truncation), and the exact rank-increasing
//              update. A running ledger (e_p, e_sv) bounds the accumulated
//              Hilbert-Schmidt compression error from above.

#ifndef IPOD_INCREMENTAL_POD_HPP
#define IPOD_INCREMENTAL_POD_HPP

#include "ipod/weighted_space.hpp"

#include <Eigen/Core>
#include <Eigen/SVD>

#include <functional>
#include <string>

namespace ipod {

/// Raised when round-off has degraded the basis beyond repair (the
/// reorthogonalization loop exceeded its pass budget or produced a residual
/// too small to normalize). The state is not usable afterwards.
class NumericalDegradationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IpodTolerances {
    double tol_p = 0.0;    ///< residual norm below which a snapshot is buffered
    double tol_sv = 0.0;   ///< smallest singular value below which it is dropped
    double tol_o = 1e-12;  ///< orthogonality defect that triggers another projection pass
    int reorth_cap = 5;    ///< max projection passes before giving up

    void validate() const;
};

/// Relative residual level (against the snapshot norm) under which a snapshot
/// counts as numerically dependent on the basis regardless of tol_p: below
/// it the residual is rounding noise and cannot be normalized into a new
/// direction. Sits above the core cutoff by the accumulated projection error.
inline constexpr double kDependenceFloor = 1e-13;

enum class UpdateKind { buffered, exact, sv_truncated };

/// Per-update diagnostics. sigma_before holds the singular values entering
/// the small update problem (after any pending-block flush) and sigma_update
/// the full spectrum of that problem including the value dropped by an
/// SV-truncation; both are empty for buffered updates.
struct UpdateOutcome {
    UpdateKind kind = UpdateKind::buffered;
    double residual_norm = 0.0;  ///< p, the M-norm of the projection residual
    int reorth_passes = 0;
    Eigen::VectorXd sigma_before;
    Eigen::VectorXd sigma_update;
};

/// A finalized factorization detached from the streaming state: what gets
/// serialized, shipped to the adjoint sweep, or inspected offline.
struct CompressedTrajectory {
    Eigen::MatrixXd left_basis;      // m x l, M-orthonormal
    Eigen::VectorXd singular_values; // l, positive, non-increasing
    Eigen::MatrixXd right_vectors;   // count x l, orthonormal columns
    double e_p = 0.0;
    double e_sv = 0.0;
    double hs_stream_sq = 0.0;
    std::uint64_t weight_fingerprint = 0;

    Eigen::Index dim() const { return left_basis.rows(); }
    Eigen::Index rank() const { return singular_values.size(); }
    Eigen::Index count() const { return right_vectors.rows(); }

    double error_bound() const { return e_p + e_sv; }
    double energy_ratio() const;

    /// Decompressed snapshot j (1-based): (1/sqrt(tau)) V Sigma W(j,:)^T,
    /// inverting the sqrt(tau) scaling applied on ingestion.
    Eigen::VectorXd reconstruct(Eigen::Index j, double tau) const;

    void save(const std::string& path) const;
    static CompressedTrajectory load(const std::string& path);
};

/// Warning sink for soft conditions (oversized pending buffer, ledger far
/// past its budget). Default writes one line to stderr.
void set_ipod_warning_handler(std::function<void(const std::string&)> handler);

/// The streaming engine. Single writer: updates mutate sequentially. After
/// finalize() the factorization is fully materialized and may be shared
/// read-only across threads.
class IncrementalPod {
public:
    /// Starts the stream from its first snapshot: V = u/|u|_M, Sigma = (|u|_M),
    /// W = (1). The first snapshot must be nonzero.
    IncrementalPod(const Eigen::VectorXd& first_snapshot, WeightOperator weight,
                   IpodTolerances tols);

    /// Ingests one snapshot. Nearly dependent snapshots (residual below tol_p,
    /// or below the core floor of the snapshot norm, where no residual
    /// direction can be normalized) are buffered as projection coefficients;
    /// otherwise any pending block is flushed first and the rank-(l+1) update
    /// problem is solved, dropping its smallest singular value when it falls
    /// under tol_sv.
    UpdateOutcome update(const Eigen::VectorXd& snapshot);

    /// Flushes the pending block and folds the deferred rotation into the
    /// basis. Idempotent; updates may continue afterwards.
    void finalize();

    /// e_p + e_sv, an upper bound for the Hilbert-Schmidt norm of the
    /// difference between the ingested stream and its reconstruction.
    double error_bound() const { return e_p_ + e_sv_; }

    /// sqrt(retained energy / streamed energy), in (0, 1]. Pending projection
    /// coefficients count as retained.
    double energy_ratio() const;

    /// Decompressed snapshot j (1-based, j <= count()). Requires the pending
    /// block to be empty; call finalize() first on a mid-stream state.
    Eigen::VectorXd reconstruct(Eigen::Index j, double tau) const;

    Eigen::Index dim() const { return weight_.dim(); }
    Eigen::Index rank() const { return sigma_.size(); }
    Eigen::Index count() const { return count_; }
    Eigen::Index pending_width() const { return pending_cols_; }
    double e_p() const { return e_p_; }
    double e_sv() const { return e_sv_; }
    double hs_stream_sq() const { return hs_stream_sq_; }
    const WeightOperator& weight() const { return weight_; }
    const IpodTolerances& tolerances() const { return tols_; }

    const Eigen::MatrixXd& left_basis() const { return v_; }
    const Eigen::VectorXd& singular_values() const { return sigma_; }
    /// Right singular vectors accumulated so far (count() - pending_width() rows).
    Eigen::MatrixXd right_vectors() const;

    /// Copies the current factorization out. Requires an empty pending block.
    CompressedTrajectory compressed() const;

private:
    struct ReorthResult {
        int passes = 0;
        bool dependent = false;  // the residual collapsed into the span
    };

    void flush_pending();
    ReorthResult reorthogonalize(Eigen::VectorXd& e) const;
    void append_right_rows(const Eigen::MatrixXd& w_update, Eigen::Index extra_rows,
                           const Eigen::MatrixXd& tail);

    WeightOperator weight_;
    IpodTolerances tols_;

    Eigen::MatrixXd v_;      // m x l
    Eigen::VectorXd sigma_;  // l
    Eigen::MatrixXd w_;      // row capacity >= w_rows_, l columns in use
    Eigen::Index w_rows_ = 0;

    Eigen::MatrixXd pending_;  // l x pending capacity, projection coefficients
    Eigen::Index pending_cols_ = 0;

    // Deferred rotation of the basis (identity between public calls; a
    // pending-block flush parks its rotation here until the same update or
    // finalize folds it into V).
    Eigen::MatrixXd deferred_rotation_;
    bool rotation_pending_ = false;

    double e_p_ = 0.0;
    double e_sv_ = 0.0;
    double hs_stream_sq_ = 0.0;
    Eigen::Index count_ = 0;
    bool warned_wide_buffer_ = false;

    Eigen::JacobiSVD<Eigen::MatrixXd> update_svd_;
};

}  // namespace ipod

#endif  // IPOD_INCREMENTAL_POD_HPP
