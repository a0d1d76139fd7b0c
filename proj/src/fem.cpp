/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#include "ipod/fem.hpp"

#include <cmath>
#include <sstream>

namespace ipod {

namespace {

struct TriangleGeometry {
    double area;
    // Gradients of the three barycentric basis functions.
    double gx[3];
    double gy[3];
    double cx, cy;  // centroid
};

TriangleGeometry triangle_geometry(const TriangleMesh& mesh, Eigen::Index t) {
    const auto v0 = mesh.triangles(t, 0);
    const auto v1 = mesh.triangles(t, 1);
    const auto v2 = mesh.triangles(t, 2);
    const double x0 = mesh.nodes(v0, 0), y0 = mesh.nodes(v0, 1);
    const double x1 = mesh.nodes(v1, 0), y1 = mesh.nodes(v1, 1);
    const double x2 = mesh.nodes(v2, 0), y2 = mesh.nodes(v2, 1);

    TriangleGeometry g;
    const double det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    g.area = 0.5 * det;
    const double inv = 1.0 / det;
    g.gx[0] = (y1 - y2) * inv;
    g.gy[0] = (x2 - x1) * inv;
    g.gx[1] = (y2 - y0) * inv;
    g.gy[1] = (x0 - x2) * inv;
    g.gx[2] = (y0 - y1) * inv;
    g.gy[2] = (x1 - x0) * inv;
    g.cx = (x0 + x1 + x2) / 3.0;
    g.cy = (y0 + y1 + y2) / 3.0;
    return g;
}

int dof_of(const TriangleMesh& mesh, Eigen::Index node, bool interior_only) {
    if (!interior_only) {
        return static_cast<int>(node);
    }
    return mesh.interior_index[static_cast<std::size_t>(node)];
}

}  // namespace

TriangleMesh build_interface_mesh(double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("build_interface_mesh: h must be positive");
    }
    const double cells_per_unit = 1.0 / h;
    const int ny = static_cast<int>(std::llround(cells_per_unit));
    if (ny < 1 || std::abs(cells_per_unit - ny) > 1e-9 * ny) {
        std::ostringstream msg;
        msg << "build_interface_mesh: h = " << h
            << " does not divide 1, elements would straddle the interface x = 1";
        throw std::invalid_argument(msg.str());
    }

    TriangleMesh mesh;
    mesh.h = 1.0 / ny;
    mesh.ny = ny;
    mesh.nx = 2 * ny;

    const int nodes_x = mesh.nx + 1;
    const int nodes_y = mesh.ny + 1;
    mesh.nodes.resize(static_cast<Eigen::Index>(nodes_x) * nodes_y, 2);
    mesh.boundary.assign(static_cast<std::size_t>(nodes_x) * nodes_y, false);
    auto node_id = [nodes_x](int i, int j) { return j * nodes_x + i; };

    for (int j = 0; j < nodes_y; ++j) {
        for (int i = 0; i < nodes_x; ++i) {
            const int id = node_id(i, j);
            mesh.nodes(id, 0) = static_cast<double>(i) / ny;  // x in [0, 2]
            mesh.nodes(id, 1) = static_cast<double>(j) / ny;  // y in [0, 1]
            if (i == 0 || i == mesh.nx || j == 0 || j == mesh.ny) {
                mesh.boundary[static_cast<std::size_t>(id)] = true;
            }
        }
    }

    mesh.triangles.resize(2L * mesh.nx * mesh.ny, 3);
    Eigen::Index t = 0;
    for (int j = 0; j < mesh.ny; ++j) {
        for (int i = 0; i < mesh.nx; ++i) {
            const int v00 = node_id(i, j);
            const int v10 = node_id(i + 1, j);
            const int v01 = node_id(i, j + 1);
            const int v11 = node_id(i + 1, j + 1);
            mesh.triangles.row(t++) << v00, v10, v11;
            mesh.triangles.row(t++) << v00, v11, v01;
        }
    }

    mesh.interior_index.assign(mesh.boundary.size(), -1);
    for (std::size_t n = 0; n < mesh.boundary.size(); ++n) {
        if (!mesh.boundary[n]) {
            mesh.interior_index[n] = static_cast<int>(mesh.interior_nodes.size());
            mesh.interior_nodes.push_back(static_cast<int>(n));
        }
    }
    return mesh;
}

IntervalMesh build_interval_mesh(int cells) {
    if (cells < 2) {
        throw std::invalid_argument("build_interval_mesh: need at least 2 cells");
    }
    IntervalMesh mesh;
    mesh.cells = cells;
    mesh.h = 1.0 / cells;
    mesh.nodes.resize(cells + 1);
    for (int i = 0; i <= cells; ++i) {
        mesh.nodes[i] = static_cast<double>(i) / cells;
    }
    return mesh;
}

SpaceFn interface_coefficient(double beta_plus, double beta_minus) {
    return [beta_plus, beta_minus](double x, double) { return x < 1.0 ? beta_plus : beta_minus; };
}

SpMat assemble_mass_2d(const TriangleMesh& mesh, bool interior_only) {
    const Eigen::Index n = interior_only ? mesh.num_interior() : mesh.num_nodes();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(9 * mesh.triangles.rows()));
    for (Eigen::Index t = 0; t < mesh.triangles.rows(); ++t) {
        const TriangleGeometry g = triangle_geometry(mesh, t);
        for (int a = 0; a < 3; ++a) {
            const int ia = dof_of(mesh, mesh.triangles(t, a), interior_only);
            if (ia < 0) continue;
            for (int b = 0; b < 3; ++b) {
                const int ib = dof_of(mesh, mesh.triangles(t, b), interior_only);
                if (ib < 0) continue;
                const double value = g.area / 12.0 * (a == b ? 2.0 : 1.0);
                triplets.emplace_back(ia, ib, value);
            }
        }
    }
    SpMat m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

SpMat assemble_stiffness_2d(const TriangleMesh& mesh, const SpaceFn& coeff, bool interior_only) {
    const Eigen::Index n = interior_only ? mesh.num_interior() : mesh.num_nodes();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(9 * mesh.triangles.rows()));
    for (Eigen::Index t = 0; t < mesh.triangles.rows(); ++t) {
        const TriangleGeometry g = triangle_geometry(mesh, t);
        const double c = coeff(g.cx, g.cy);
        for (int a = 0; a < 3; ++a) {
            const int ia = dof_of(mesh, mesh.triangles(t, a), interior_only);
            if (ia < 0) continue;
            for (int b = 0; b < 3; ++b) {
                const int ib = dof_of(mesh, mesh.triangles(t, b), interior_only);
                if (ib < 0) continue;
                const double value = c * g.area * (g.gx[a] * g.gx[b] + g.gy[a] * g.gy[b]);
                triplets.emplace_back(ia, ib, value);
            }
        }
    }
    SpMat k(n, n);
    k.setFromTriplets(triplets.begin(), triplets.end());
    k.makeCompressed();
    return k;
}

Eigen::VectorXd assemble_load_2d(const TriangleMesh& mesh, const SpaceFn& f, bool interior_only) {
    const Eigen::Index n = interior_only ? mesh.num_interior() : mesh.num_nodes();
    Eigen::VectorXd load = Eigen::VectorXd::Zero(n);
    // Quadrature at barycentric (2/3, 1/6, 1/6) and permutations, weight
    // area/3: degree 2, all points strictly inside the element.
    static constexpr double bary[3][3] = {
        {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
        {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
        {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0},
    };
    for (Eigen::Index t = 0; t < mesh.triangles.rows(); ++t) {
        const TriangleGeometry g = triangle_geometry(mesh, t);
        const double w = g.area / 3.0;
        for (const auto& q : bary) {
            double xq = 0.0, yq = 0.0;
            for (int a = 0; a < 3; ++a) {
                xq += q[a] * mesh.nodes(mesh.triangles(t, a), 0);
                yq += q[a] * mesh.nodes(mesh.triangles(t, a), 1);
            }
            const double fv = f(xq, yq);
            for (int a = 0; a < 3; ++a) {
                const int ia = dof_of(mesh, mesh.triangles(t, a), interior_only);
                if (ia >= 0) {
                    load[ia] += w * fv * q[a];
                }
            }
        }
    }
    return load;
}

Eigen::VectorXd interpolate_interior_2d(const TriangleMesh& mesh, const SpaceFn& f) {
    Eigen::VectorXd v(mesh.num_interior());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        const int node = mesh.interior_nodes[static_cast<std::size_t>(k)];
        v[k] = f(mesh.nodes(node, 0), mesh.nodes(node, 1));
    }
    return v;
}

SpMat assemble_mass_1d(const IntervalMesh& mesh, bool interior_only) {
    const Eigen::Index n = interior_only ? mesh.num_interior() : mesh.num_nodes();
    std::vector<Eigen::Triplet<double>> triplets;
    auto dof = [&](int node) {
        if (!interior_only) return node;
        return (node == 0 || node == mesh.cells) ? -1 : node - 1;
    };
    for (int c = 0; c < mesh.cells; ++c) {
        const double he = mesh.nodes[c + 1] - mesh.nodes[c];
        const int dofs[2] = {dof(c), dof(c + 1)};
        const double local[2][2] = {{he / 3.0, he / 6.0}, {he / 6.0, he / 3.0}};
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                if (dofs[a] >= 0 && dofs[b] >= 0) {
                    triplets.emplace_back(dofs[a], dofs[b], local[a][b]);
                }
            }
        }
    }
    SpMat m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

SpMat assemble_stiffness_1d(const IntervalMesh& mesh, bool interior_only) {
    const Eigen::Index n = interior_only ? mesh.num_interior() : mesh.num_nodes();
    std::vector<Eigen::Triplet<double>> triplets;
    auto dof = [&](int node) {
        if (!interior_only) return node;
        return (node == 0 || node == mesh.cells) ? -1 : node - 1;
    };
    for (int c = 0; c < mesh.cells; ++c) {
        const double he = mesh.nodes[c + 1] - mesh.nodes[c];
        const int dofs[2] = {dof(c), dof(c + 1)};
        const double local[2][2] = {{1.0 / he, -1.0 / he}, {-1.0 / he, 1.0 / he}};
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                if (dofs[a] >= 0 && dofs[b] >= 0) {
                    triplets.emplace_back(dofs[a], dofs[b], local[a][b]);
                }
            }
        }
    }
    SpMat k(n, n);
    k.setFromTriplets(triplets.begin(), triplets.end());
    k.makeCompressed();
    return k;
}

Eigen::VectorXd assemble_load_1d(const IntervalMesh& mesh,
                                 const std::function<double(double)>& f, bool interior_only) {
    const Eigen::Index n = interior_only ? mesh.num_interior() : mesh.num_nodes();
    Eigen::VectorXd load = Eigen::VectorXd::Zero(n);
    auto dof = [&](int node) {
        if (!interior_only) return node;
        return (node == 0 || node == mesh.cells) ? -1 : node - 1;
    };
    // Two-point Gauss per cell, exact for the P1 test functions against
    // smooth f and strictly interior.
    const double gp = 1.0 / std::sqrt(3.0);
    for (int c = 0; c < mesh.cells; ++c) {
        const double xa = mesh.nodes[c];
        const double xb = mesh.nodes[c + 1];
        const double he = xb - xa;
        const double mid = 0.5 * (xa + xb);
        for (const double s : {-gp, gp}) {
            const double xq = mid + 0.5 * he * s;
            const double fv = f(xq);
            const double phi_a = (xb - xq) / he;
            const double phi_b = (xq - xa) / he;
            const int da = dof(c);
            const int db = dof(c + 1);
            if (da >= 0) load[da] += 0.5 * he * fv * phi_a;
            if (db >= 0) load[db] += 0.5 * he * fv * phi_b;
        }
    }
    return load;
}

Eigen::VectorXd interpolate_interior_1d(const IntervalMesh& mesh,
                                        const std::function<double(double)>& f) {
    Eigen::VectorXd v(mesh.num_interior());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        v[k] = f(mesh.nodes[k + 1]);
    }
    return v;
}

double trajectory_l2_distance(const std::vector<Eigen::VectorXd>& a,
                              const std::vector<Eigen::VectorXd>& b, const SpMat& mass,
                              double tau) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("trajectory_l2_distance: trajectories have different lengths");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const Eigen::VectorXd diff = a[j] - b[j];
        total += tau * diff.dot(mass * diff);
    }
    return std::sqrt(total);
}

}  // namespace ipod
