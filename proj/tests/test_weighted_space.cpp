/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ipod/fem.hpp"
#include "ipod/matrix_market.hpp"
#include "ipod/rng.hpp"
#include "ipod/weighted_space.hpp"
#include "support/test_support.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <filesystem>

using namespace ipod;

namespace {

SpMat sparse_diag(const std::vector<double>& values) {
    SpMat m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        m.insert(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = values[i];
    }
    m.makeCompressed();
    return m;
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        m.col(j) = rng.gaussian_vector(rows);
    }
    return m;
}

}  // namespace

TEST_CASE("weighted_inner on the standard basis and a diagonal weight") {
    const WeightOperator id = WeightOperator::identity(2);
    Eigen::VectorXd e1(2), e2(2);
    e1 << 1, 0;
    e2 << 0, 1;
    CHECK(weighted_inner(e1, e2, id) == 0.0);

    const WeightOperator diag = WeightOperator::from_sparse(sparse_diag({2.0, 3.0}));
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
    // Oracle: direct summation of y_i M_ij x_j.
    const Eigen::MatrixXd dense = Eigen::Vector2d(2.0, 3.0).asDiagonal();
    const double oracle = test::brute_weighted_inner(ones, ones, dense);
    CHECK(oracle == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(weighted_inner(ones, ones, diag) == doctest::Approx(oracle).epsilon(1e-15));
}

TEST_CASE("weighted_inner of the constant function against a 1D mass matrix") {
    // All-ones coefficients on P1 over [0,1] represent u = 1; the squared
    // L2 norm is the integral of 1, i.e. the sum of all mass entries.
    const IntervalMesh mesh = build_interval_mesh(64);
    const SpMat mass = assemble_mass_1d(mesh, false);
    const WeightOperator wt = WeightOperator::from_sparse(mass);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.num_nodes());
    const double oracle = test::brute_weighted_inner(ones, ones, Eigen::MatrixXd(mass));
    CHECK(oracle == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(weighted_inner(ones, ones, wt) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weighted_inner symmetry on random inputs") {
    Rng rng(11);
    const IntervalMesh mesh = build_interval_mesh(31);
    const WeightOperator wt = WeightOperator::from_sparse(assemble_mass_1d(mesh, false));
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::VectorXd x = rng.gaussian_vector(wt.dim());
        const Eigen::VectorXd y = rng.gaussian_vector(wt.dim());
        const double fwd = weighted_inner(x, y, wt);
        const double rev = weighted_inner(y, x, wt);
        CHECK(std::abs(fwd - rev) <= 1e-14 * wt.norm(x) * wt.norm(y));
    }
}

TEST_CASE("weighted_inner rejects dimension mismatches") {
    const WeightOperator id = WeightOperator::identity(3);
    CHECK_THROWS_AS(weighted_inner(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3), id),
                    std::invalid_argument);
}

TEST_CASE("orthonormality defect of basis sets") {
    const WeightOperator id = WeightOperator::identity(4);
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(4, 2);
    CHECK(orthonormality_defect(v, id) == 0.0);

    v.col(0) *= 2.0;  // diagonal entry becomes 4
    CHECK(orthonormality_defect(v, id) == doctest::Approx(3.0));
}

TEST_CASE("core_weighted_svd identity cases") {
    const WeightOperator id = WeightOperator::identity(3);
    const WeightedFactorization f = core_weighted_svd(Eigen::MatrixXd::Identity(3, 3), id);
    REQUIRE(f.rank() == 3);
    for (Eigen::Index i = 0; i < 3; ++i) {
        CHECK(f.sigma[i] == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("core_weighted_svd of a single weighted column") {
    // sigma is the M-norm of the column and V^T M V = 1.
    const WeightOperator wt = WeightOperator::from_sparse(sparse_diag({4.0, 1.0}));
    Eigen::MatrixXd u(2, 1);
    u << 1, 0;
    const WeightedFactorization f = core_weighted_svd(u, wt);
    REQUIRE(f.rank() == 1);
    CHECK(f.sigma[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(f.V(0, 0)) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(f.V(1, 0)) < 1e-14);
    CHECK(orthonormality_defect(f.V, wt) < 1e-14);
}

TEST_CASE("core_weighted_svd matches a reference dense SVD under the identity weight") {
    Rng rng(5);
    const Eigen::MatrixXd u = random_matrix(rng, 12, 7);
    const WeightedFactorization f = core_weighted_svd(u, WeightOperator::identity(12));
    Eigen::JacobiSVD<Eigen::MatrixXd> ref(u, Eigen::ComputeThinU | Eigen::ComputeThinV);
    REQUIRE(f.rank() == 7);
    for (Eigen::Index i = 0; i < 7; ++i) {
        CHECK(f.sigma[i] == doctest::Approx(ref.singularValues()[i]).epsilon(1e-12));
        // Vector pairs agree up to a common sign.
        const double sign = (f.W.col(i).dot(ref.matrixV().col(i)) >= 0.0) ? 1.0 : -1.0;
        CHECK((f.V.col(i) - sign * ref.matrixU().col(i)).norm() < 1e-10);
        CHECK((f.W.col(i) - sign * ref.matrixV().col(i)).norm() < 1e-10);
    }
}

TEST_CASE("core_weighted_svd satisfies the factorization contract under a mass weight") {
    Rng rng(17);
    const IntervalMesh mesh = build_interval_mesh(19);
    const WeightOperator wt = WeightOperator::from_sparse(assemble_mass_1d(mesh, false));
    const Eigen::MatrixXd u = random_matrix(rng, wt.dim(), 8);
    const WeightedFactorization f = core_weighted_svd(u, wt);

    CHECK(orthonormality_defect(f.V, wt) <= 1e-12);
    CHECK((f.W.transpose() * f.W - Eigen::MatrixXd::Identity(f.rank(), f.rank()))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
    for (Eigen::Index i = 1; i < f.rank(); ++i) {
        CHECK(f.sigma[i] <= f.sigma[i - 1] * (1.0 + 1e-15));
        CHECK(f.sigma[i] > 0.0);
    }
    const double err = test::brute_hs_error(u, f.reconstruct(), wt);
    CHECK(err <= 1e-10 * std::sqrt(hs_norm_sq(u, wt)));
}

TEST_CASE("core_weighted_svd rejects zero matrices and indefinite weights") {
    CHECK_THROWS_AS(core_weighted_svd(Eigen::MatrixXd::Zero(3, 2), WeightOperator::identity(3)),
                    std::invalid_argument);
    const WeightOperator bad = WeightOperator::from_sparse(sparse_diag({1.0, -1.0}));
    CHECK_THROWS_AS(core_weighted_svd(Eigen::MatrixXd::Random(2, 2), bad), WeightNotSpdError);
}

TEST_CASE("weight matrices must be symmetric") {
    SpMat m(2, 2);
    m.insert(0, 0) = 1.0;
    m.insert(0, 1) = 0.5;
    m.insert(1, 1) = 1.0;
    m.makeCompressed();
    CHECK_THROWS_AS(WeightOperator::from_sparse(m), std::invalid_argument);
}

TEST_CASE("hs_norm_sq basics and the column-append identity") {
    const WeightOperator id = WeightOperator::identity(3);
    Eigen::MatrixXd u = Eigen::MatrixXd::Identity(3, 2);
    CHECK(hs_norm_sq(u, id) == doctest::Approx(2.0).epsilon(1e-15));

    Rng rng(23);
    const IntervalMesh mesh = build_interval_mesh(15);
    const WeightOperator wt = WeightOperator::from_sparse(assemble_mass_1d(mesh, false));
    const Eigen::MatrixXd base = random_matrix(rng, wt.dim(), 6);
    const Eigen::VectorXd extra = rng.gaussian_vector(wt.dim());
    Eigen::MatrixXd appended(wt.dim(), 7);
    appended << base, extra;
    const double lhs = hs_norm_sq(appended, wt);
    const double rhs = hs_norm_sq(base, wt) + wt.norm_sq(extra);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("hs_norm_sq equals the sum of squared singular values") {
    Rng rng(29);
    const IntervalMesh mesh = build_interval_mesh(23);
    const WeightOperator wt = WeightOperator::from_sparse(assemble_mass_1d(mesh, false));
    const Eigen::MatrixXd u = random_matrix(rng, wt.dim(), 9);
    const WeightedFactorization f = core_weighted_svd(u, wt);
    CHECK(hs_norm_sq(u, wt) ==
          doctest::Approx(f.sigma.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("identity weight operations reduce to plain arithmetic exactly") {
    Rng rng(31);
    const WeightOperator id = WeightOperator::identity(6);
    const Eigen::VectorXd x = rng.gaussian_vector(6);
    const Eigen::VectorXd y = rng.gaussian_vector(6);
    CHECK(weighted_inner(x, y, id) == y.dot(x));
    CHECK(id.norm_sq(x) == x.dot(x));
}

TEST_CASE("matrix market round trips") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ipod_mm_test";
    fs::create_directories(dir);

    const IntervalMesh mesh = build_interval_mesh(9);
    const SpMat mass = assemble_mass_1d(mesh, false);
    const std::string sparse_path = (dir / "mass.mtx").string();
    write_matrix_market(sparse_path, mass, true);
    const SpMat back = read_matrix_market_sparse(sparse_path);
    CHECK((Eigen::MatrixXd(back) - Eigen::MatrixXd(mass)).cwiseAbs().maxCoeff() == 0.0);

    Rng rng(37);
    const Eigen::MatrixXd dense = random_matrix(rng, 5, 4);
    const std::string dense_path = (dir / "dense.mtx").string();
    write_matrix_market(dense_path, dense);
    const Eigen::MatrixXd dense_back = read_matrix_market_dense(dense_path);
    CHECK((dense_back - dense).cwiseAbs().maxCoeff() == 0.0);

    const std::string traj_path = (dir / "traj.bin").string();
    write_trajectory_binary(traj_path, dense, 0.125);
    double tau = 0.0;
    const Eigen::MatrixXd traj_back = read_trajectory_binary(traj_path, &tau);
    CHECK(tau == 0.125);
    CHECK((traj_back - dense).cwiseAbs().maxCoeff() == 0.0);

    fs::remove_all(dir);
}
