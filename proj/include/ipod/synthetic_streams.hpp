/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

// Description: Seeded snapshot-stream generators for compression benchmarks
//              and randomized suites: exact low-rank streams, streams with a
//              geometrically decaying spectrum, and optional duplicated
//              columns. Every stream carries spectral content down to a
//              configurable floor so truncation paths are exercised at any
//              realistic threshold.

#ifndef IPOD_SYNTHETIC_STREAMS_HPP
#define IPOD_SYNTHETIC_STREAMS_HPP

#include "ipod/rng.hpp"
#include "ipod/weighted_space.hpp"

#include <cstdint>

namespace ipod {

enum class StreamKind { exact_low_rank, geometric_decay };
enum class StreamWeight { identity, mass_1d };

struct StreamSpec {
    Eigen::Index rows = 40;
    Eigen::Index cols = 60;
    StreamKind kind = StreamKind::geometric_decay;
    StreamWeight weight = StreamWeight::identity;
    Eigen::Index rank = 8;        // exact_low_rank: number of modes
    double decay = 0.5;           // geometric_decay: spectrum ratio per mode
    double floor_rel = 1e-12;     // smallest mode scale relative to the first
    int duplicate_columns = 0;    // columns repeated verbatim at the end
    std::uint64_t seed = 1;
};

/// Snapshot matrix with the requested mode profile: a sum of rank-one
/// terms at the prescribed scales. Columns are the snapshots.
Eigen::MatrixXd make_stream(const StreamSpec& spec);

/// Weight operator for the stream (identity, or the full P1 mass matrix of
/// a uniform 1D mesh over [0,1] with rows nodes; any SPD geometry works).
WeightOperator make_stream_weight(const StreamSpec& spec);

}  // namespace ipod

#endif  // IPOD_SYNTHETIC_STREAMS_HPP
