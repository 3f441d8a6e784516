#pragma once

// Finite element assembly on triangle meshes. Velocity/pressure pairs used
// by the laboratory: P2 scalar, P2 vector (Taylor-Hood velocity), P1 scalar
// (pressure), and P1+cell-bubble vector (MINI velocity, oracle only).
// Vector degrees of freedom are component-major: all x-component dofs first,
// then all y-component dofs.

#include "friedlab/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <vector>

namespace friedlab::fem {

using SpMat = Eigen::SparseMatrix<double>;

enum class DofKind { P1_scalar, P2_scalar, P2_vector2, P1b_vector2 };

struct DofMap {
  DofKind kind = DofKind::P1_scalar;
  int components = 1;
  int n_scalar_nodes = 0;
  int local_ndof = 0;  // scalar dofs per triangle

  // scalar node coordinates: vertices, then edge midpoints (P2) or
  // triangle centroids (P1b)
  std::vector<std::array<double, 2>> nodes;

  // triangle -> local scalar node ids, row-major [n_triangles x local_ndof]
  std::vector<int> element_nodes;

  std::vector<int> boundary_scalar_nodes;  // sorted ascending
  std::vector<int> boundary_dofs;          // component-major, sorted

  // boundary edge -> scalar node ids along the edge
  // (end1, end2[, midpoint] in that order)
  std::vector<std::vector<int>> boundary_edge_nodes;

  int n_dofs() const { return components * n_scalar_nodes; }
  int dof(int comp, int node) const { return comp * n_scalar_nodes + node; }
  const int* elem(int t) const { return element_nodes.data() + static_cast<size_t>(t) * local_ndof; }
};

DofMap make_dofmap(const mesh::Mesh& m, DofKind kind);

// Galerkin matrix of the gradient form: scalar kinds assemble the usual
// grad-grad form, vector kinds the Frobenius pairing of Jacobians.
SpMat stiffness(const mesh::Mesh& m, const DofMap& d);

// Galerkin matrix of the L2 inner product.
SpMat mass(const mesh::Mesh& m, const DofMap& d);

// Galerkin matrix of the transposed-Jacobian pairing (vector kinds only);
// the alpha weight is applied by the caller.
SpMat transpose_gradient_form(const mesh::Mesh& m, const DofMap& d);

// B[q, u] = integral of (pressure basis q) * div(velocity basis u).
SpMat divergence(const mesh::Mesh& m, const DofMap& velocity, const DofMap& pressure);

struct BoundaryOperators {
  SpMat J;                  // boolean trace selection, k x n
  SpMat Mb;                 // boundary Gram of the trace space, k x k
  Eigen::VectorXd nu_flux;  // w with w^T phi = boundary integral of phi . nu
                            // (vector kinds; empty for scalar)
};
BoundaryOperators boundary_mass_and_trace(const mesh::Mesh& m, const DofMap& d);

// Nodal interpolation.
Eigen::VectorXd interpolate_scalar(const DofMap& d,
                                   const std::function<double(double, double)>& f);
Eigen::VectorXd interpolate_vector2(const DofMap& d,
                                    const std::function<double(double, double)>& fx,
                                    const std::function<double(double, double)>& fy);

// Gradient coupling C[(c,i), q] = integral of (scalar velocity basis i, comp c)
// * d_c(scalar basis q), i.e. (phi, grad psi) pairings for the Helmholtz
// decompositions. `grad_space` supplies psi.
SpMat gradient_coupling(const mesh::Mesh& m, const DofMap& vector_space,
                        const DofMap& grad_space);

// Load vector of the constant 1 (integral of each basis function).
Eigen::VectorXd unit_load(const mesh::Mesh& m, const DofMap& d);

}  // namespace friedlab::fem
