/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

// Description: Seeded random number generation with explicit transforms.
//              std::normal_distribution and friends are implementation-defined,
//              so sampling goes through fixed Box-Muller / scaling formulas to
//              keep runs reproducible across standard libraries.

#ifndef IPOD_RNG_HPP
#define IPOD_RNG_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>

namespace ipod {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform draw in [0, 1).
    double uniform() {
        // 53 mantissa bits of one 64-bit draw.
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform draw in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<std::int64_t>(engine_() % span);
    }

    /// Standard normal draw (Box-Muller, one value per pair kept simple).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    Eigen::VectorXd gaussian_vector(Eigen::Index n, double stddev = 1.0) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v[i] = stddev * normal();
        }
        return v;
    }

    /// Uniformly distributed direction on the unit sphere.
    Eigen::VectorXd unit_vector(Eigen::Index n) {
        Eigen::VectorXd v = gaussian_vector(n);
        double nrm = v.norm();
        while (nrm == 0.0) {
            v = gaussian_vector(n);
            nrm = v.norm();
        }
        return v / nrm;
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace ipod

#endif  // IPOD_RNG_HPP
