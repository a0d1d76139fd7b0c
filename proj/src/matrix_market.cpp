/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#include "ipod/matrix_market.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace ipod {

namespace {

constexpr char kTrajectoryMagic[8] = {'I', 'P', 'O', 'D', 'T', 'R', 'A', 'J'};

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct MmHeader {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::Index nnz = 0;
    bool symmetric = false;
};

MmHeader read_header(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("matrix market: empty file " + path);
    }
    std::istringstream banner(line);
    std::string tag, object, fmt, field, symmetry;
    banner >> tag >> object >> fmt >> field >> symmetry;
    if (tag != "%%MatrixMarket" || object != "matrix" || fmt != "coordinate" ||
        field != "real" || (symmetry != "general" && symmetry != "symmetric")) {
        throw std::runtime_error("matrix market: unsupported header in " + path + ": " + line);
    }
    MmHeader h;
    h.symmetric = (symmetry == "symmetric");
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '%') {
            continue;
        }
        std::istringstream sizes(line);
        if (!(sizes >> h.rows >> h.cols >> h.nnz)) {
            continue;  // blank line
        }
        return h;
    }
    throw std::runtime_error("matrix market: missing size line in " + path);
}

std::vector<Eigen::Triplet<double>> read_entries(std::istream& in, const MmHeader& h,
                                                 const std::string& path) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(h.symmetric ? 2 * h.nnz : h.nnz));
    for (Eigen::Index k = 0; k < h.nnz; ++k) {
        Eigen::Index i, j;
        double v;
        if (!(in >> i >> j >> v)) {
            throw std::runtime_error("matrix market: truncated entry list in " + path);
        }
        if (i < 1 || i > h.rows || j < 1 || j > h.cols) {
            throw std::runtime_error("matrix market: index out of range in " + path);
        }
        triplets.emplace_back(i - 1, j - 1, v);
        if (h.symmetric && i != j) {
            triplets.emplace_back(j - 1, i - 1, v);
        }
    }
    return triplets;
}

}  // namespace

void write_matrix_market(const std::string& path, const SpMat& m, bool symmetric) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("matrix market: cannot open " + path + " for writing");
    }
    std::vector<std::string> lines;
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SpMat::InnerIterator it(m, k); it; ++it) {
            if (symmetric && it.row() < it.col()) {
                continue;  // lower triangle only
            }
            std::ostringstream entry;
            entry << (it.row() + 1) << ' ' << (it.col() + 1) << ' ' << format_value(it.value());
            lines.push_back(entry.str());
        }
    }
    out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general")
        << '\n';
    out << m.rows() << ' ' << m.cols() << ' ' << lines.size() << '\n';
    for (const auto& l : lines) {
        out << l << '\n';
    }
}

void write_matrix_market(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("matrix market: cannot open " + path + " for writing");
    }
    Eigen::Index nnz = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (m(i, j) != 0.0) {
                ++nnz;
            }
        }
    }
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (m(i, j) != 0.0) {
                out << (i + 1) << ' ' << (j + 1) << ' ' << format_value(m(i, j)) << '\n';
            }
        }
    }
}

SpMat read_matrix_market_sparse(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("matrix market: cannot open " + path);
    }
    const MmHeader h = read_header(in, path);
    const auto triplets = read_entries(in, h, path);
    SpMat m(h.rows, h.cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

Eigen::MatrixXd read_matrix_market_dense(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("matrix market: cannot open " + path);
    }
    const MmHeader h = read_header(in, path);
    const auto triplets = read_entries(in, h, path);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(h.rows, h.cols);
    for (const auto& t : triplets) {
        m(t.row(), t.col()) = t.value();
    }
    return m;
}

void write_trajectory_binary(const std::string& path, const Eigen::MatrixXd& snapshots,
                             double tau) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("trajectory: cannot open " + path + " for writing");
    }
    const std::uint64_t m = static_cast<std::uint64_t>(snapshots.rows());
    const std::uint64_t n = static_cast<std::uint64_t>(snapshots.cols());
    out.write(kTrajectoryMagic, sizeof kTrajectoryMagic);
    out.write(reinterpret_cast<const char*>(&m), sizeof m);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&tau), sizeof tau);
    out.write(reinterpret_cast<const char*>(snapshots.data()),
              static_cast<std::streamsize>(sizeof(double) * snapshots.size()));
}

Eigen::MatrixXd read_trajectory_binary(const std::string& path, double* tau_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("trajectory: cannot open " + path);
    }
    char magic[8];
    std::uint64_t m = 0, n = 0;
    double tau = 0.0;
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kTrajectoryMagic, sizeof magic) != 0) {
        throw std::runtime_error("trajectory: bad magic in " + path);
    }
    in.read(reinterpret_cast<char*>(&m), sizeof m);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&tau), sizeof tau);
    Eigen::MatrixXd snapshots(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    in.read(reinterpret_cast<char*>(snapshots.data()),
            static_cast<std::streamsize>(sizeof(double) * snapshots.size()));
    if (!in) {
        throw std::runtime_error("trajectory: truncated data in " + path);
    }
    if (tau_out != nullptr) {
        *tau_out = tau;
    }
    return snapshots;
}

}  // namespace ipod
