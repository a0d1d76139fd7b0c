/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

// Description: P1 finite element meshes and assembly. A uniform triangulation
//              of the rectangle [0,2]x[0,1] aligned with the material
//              interface at x = 1, a uniform interval mesh on [0,1], and the
//              mass / stiffness / load assembly both modules build on.
//              Homogeneous Dirichlet conditions are imposed by restriction to
//              interior nodes.

#ifndef IPOD_FEM_HPP
#define IPOD_FEM_HPP

#include "ipod/weighted_space.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace ipod {

using SpaceFn = std::function<double(double, double)>;

struct TriangleMesh {
    double h = 0.0;
    int nx = 0;  // cells along x (domain [0,2])
    int ny = 0;  // cells along y (domain [0,1])
    Eigen::MatrixX2d nodes;
    Eigen::MatrixX3i triangles;
    std::vector<bool> boundary;       // Dirichlet mask per node
    std::vector<int> interior_index;  // node -> interior dof, -1 on the boundary
    std::vector<int> interior_nodes;  // interior dof -> node

    Eigen::Index num_nodes() const { return nodes.rows(); }
    Eigen::Index num_interior() const { return static_cast<Eigen::Index>(interior_nodes.size()); }
};

/// Uniform triangulation of [0,2]x[0,1] with the interface x = 1 lying on
/// mesh lines. Throws if 1/h is not an integer (elements would straddle the
/// interface).
TriangleMesh build_interface_mesh(double h);

struct IntervalMesh {
    double h = 0.0;
    int cells = 0;
    Eigen::VectorXd nodes;
    Eigen::Index num_nodes() const { return nodes.size(); }
    Eigen::Index num_interior() const { return nodes.size() - 2; }
};

IntervalMesh build_interval_mesh(int cells);

/// Piecewise diffusion coefficient: beta_plus left of the interface x = 1,
/// beta_minus right of it (evaluated at element centroids, which never lie on
/// the interface for an aligned mesh).
SpaceFn interface_coefficient(double beta_plus, double beta_minus);

SpMat assemble_mass_2d(const TriangleMesh& mesh, bool interior_only);
SpMat assemble_stiffness_2d(const TriangleMesh& mesh, const SpaceFn& coeff, bool interior_only);

/// Load vector for f against P1 basis functions, 3-point strictly-interior
/// quadrature (degree 2 exact; keeps sqrt-type forcings away from the axes).
Eigen::VectorXd assemble_load_2d(const TriangleMesh& mesh, const SpaceFn& f, bool interior_only);

/// Nodal interpolation restricted to interior dofs.
Eigen::VectorXd interpolate_interior_2d(const TriangleMesh& mesh, const SpaceFn& f);

SpMat assemble_mass_1d(const IntervalMesh& mesh, bool interior_only);
SpMat assemble_stiffness_1d(const IntervalMesh& mesh, bool interior_only);
Eigen::VectorXd assemble_load_1d(const IntervalMesh& mesh,
                                 const std::function<double(double)>& f, bool interior_only);
Eigen::VectorXd interpolate_interior_1d(const IntervalMesh& mesh,
                                        const std::function<double(double)>& f);

/// Discrete L2(L2) distance between two trajectories sharing a mass matrix:
/// sqrt(sum_j tau |a_j - b_j|_M^2).
double trajectory_l2_distance(const std::vector<Eigen::VectorXd>& a,
                              const std::vector<Eigen::VectorXd>& b, const SpMat& mass,
                              double tau);

}  // namespace ipod

#endif  // IPOD_FEM_HPP
