#include "friedlab/fem_assembly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace friedlab::fem {

namespace {

// Degree-4 rule on the reference triangle (weights sum to 1/2).
struct TriQuadrature {
  static constexpr int n = 6;
  double xi[n], eta[n], w[n];
  TriQuadrature() {
    const double a1 = 0.445948490915965;
    const double b1 = 0.108103018168070;
    const double w1 = 0.223381589678011 / 2.0;
    const double a2 = 0.091576213509771;
    const double b2 = 0.816847572980459;
    const double w2 = 0.109951743655322 / 2.0;
    double pts[n][2] = {{a1, a1}, {b1, a1}, {a1, b1}, {a2, a2}, {b2, a2}, {a2, b2}};
    double ws[n] = {w1, w1, w1, w2, w2, w2};
    for (int q = 0; q < n; ++q) {
      xi[q] = pts[q][0];
      eta[q] = pts[q][1];
      w[q] = ws[q];
    }
  }
};
const TriQuadrature tri_rule;

// 3-point Gauss on [0,1] (exact through degree 5).
struct EdgeQuadrature {
  static constexpr int n = 3;
  double t[n], w[n];
  EdgeQuadrature() {
    const double s = std::sqrt(0.6);
    t[0] = 0.5 * (1.0 - s);
    t[1] = 0.5;
    t[2] = 0.5 * (1.0 + s);
    w[0] = 5.0 / 18.0;
    w[1] = 8.0 / 18.0;
    w[2] = 5.0 / 18.0;
  }
};
const EdgeQuadrature edge_rule;

bool is_vector(DofKind k) { return k == DofKind::P2_vector2 || k == DofKind::P1b_vector2; }

int scalar_local_ndof(DofKind k) {
  switch (k) {
    case DofKind::P1_scalar: return 3;
    case DofKind::P2_scalar: return 6;
    case DofKind::P2_vector2: return 6;
    case DofKind::P1b_vector2: return 4;
  }
  return 0;
}

// Scalar shape values and reference gradients at (xi, eta).
// P1: [l0, l1, l2]; P2: vertex then midpoint functions [v0 v1 v2 m01 m12 m20];
// P1b: [l0, l1, l2, 27 l0 l1 l2].
void shape_eval(DofKind kind, double xi, double eta, double* N, double dN[][2]) {
  const double l0 = 1.0 - xi - eta, l1 = xi, l2 = eta;
  const double g[3][2] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
  switch (kind) {
    case DofKind::P1_scalar: {
      N[0] = l0;
      N[1] = l1;
      N[2] = l2;
      for (int i = 0; i < 3; ++i) {
        dN[i][0] = g[i][0];
        dN[i][1] = g[i][1];
      }
      return;
    }
    case DofKind::P2_scalar:
    case DofKind::P2_vector2: {
      const double l[3] = {l0, l1, l2};
      for (int i = 0; i < 3; ++i) {
        N[i] = l[i] * (2.0 * l[i] - 1.0);
        dN[i][0] = (4.0 * l[i] - 1.0) * g[i][0];
        dN[i][1] = (4.0 * l[i] - 1.0) * g[i][1];
      }
      const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
      for (int e = 0; e < 3; ++e) {
        int i = pairs[e][0], j = pairs[e][1];
        N[3 + e] = 4.0 * l[i] * l[j];
        dN[3 + e][0] = 4.0 * (l[i] * g[j][0] + l[j] * g[i][0]);
        dN[3 + e][1] = 4.0 * (l[i] * g[j][1] + l[j] * g[i][1]);
      }
      return;
    }
    case DofKind::P1b_vector2: {
      N[0] = l0;
      N[1] = l1;
      N[2] = l2;
      for (int i = 0; i < 3; ++i) {
        dN[i][0] = g[i][0];
        dN[i][1] = g[i][1];
      }
      N[3] = 27.0 * l0 * l1 * l2;
      dN[3][0] = 27.0 * (g[0][0] * l1 * l2 + l0 * g[1][0] * l2 + l0 * l1 * g[2][0]);
      dN[3][1] = 27.0 * (g[0][1] * l1 * l2 + l0 * g[1][1] * l2 + l0 * l1 * g[2][1]);
      return;
    }
  }
  throw std::logic_error("shape_eval: unknown kind");
}

struct TriGeom {
  double detJ;           // 2 * area, positive on valid meshes
  double inv[2][2];      // inverse Jacobian (for gradient push-forward)
  double x0, y0, jac[2][2];
};

TriGeom geometry(const mesh::Mesh& m, int t) {
  const auto& a = m.vertices[m.triangles[t][0]];
  const auto& b = m.vertices[m.triangles[t][1]];
  const auto& c = m.vertices[m.triangles[t][2]];
  TriGeom g;
  g.x0 = a[0];
  g.y0 = a[1];
  g.jac[0][0] = b[0] - a[0];
  g.jac[0][1] = c[0] - a[0];
  g.jac[1][0] = b[1] - a[1];
  g.jac[1][1] = c[1] - a[1];
  g.detJ = g.jac[0][0] * g.jac[1][1] - g.jac[0][1] * g.jac[1][0];
  g.inv[0][0] = g.jac[1][1] / g.detJ;
  g.inv[0][1] = -g.jac[0][1] / g.detJ;
  g.inv[1][0] = -g.jac[1][0] / g.detJ;
  g.inv[1][1] = g.jac[0][0] / g.detJ;
  return g;
}

// physical gradient of shape i at a quadrature point
inline void push_gradient(const TriGeom& g, const double dref[2], double out[2]) {
  out[0] = g.inv[0][0] * dref[0] + g.inv[1][0] * dref[1];
  out[1] = g.inv[0][1] * dref[0] + g.inv[1][1] * dref[1];
}

struct EdgeKey {
  int a, b;
  bool operator<(const EdgeKey& o) const {
    return std::tie(a, b) < std::tie(o.a, o.b);
  }
};
EdgeKey ekey(int i, int j) { return {std::min(i, j), std::max(i, j)}; }

}  // namespace

DofMap make_dofmap(const mesh::Mesh& m, DofKind kind) {
  DofMap d;
  d.kind = kind;
  d.components = is_vector(kind) ? 2 : 1;
  d.local_ndof = scalar_local_ndof(kind);
  const int nv = m.n_vertices();
  const int nt = m.n_triangles();

  for (const auto& v : m.vertices) d.nodes.push_back(v);

  std::map<EdgeKey, int> edge_id;
  if (kind == DofKind::P2_scalar || kind == DofKind::P2_vector2) {
    // midpoint nodes, numbered by first encounter in triangle order
    for (int t = 0; t < nt; ++t) {
      const auto& tri = m.triangles[t];
      const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
      for (int e = 0; e < 3; ++e) {
        EdgeKey k = ekey(tri[pairs[e][0]], tri[pairs[e][1]]);
        if (!edge_id.count(k)) {
          edge_id[k] = nv + static_cast<int>(edge_id.size());
          d.nodes.push_back({0.5 * (m.vertices[k.a][0] + m.vertices[k.b][0]),
                             0.5 * (m.vertices[k.a][1] + m.vertices[k.b][1])});
        }
      }
    }
    d.element_nodes.resize(static_cast<size_t>(nt) * 6);
    for (int t = 0; t < nt; ++t) {
      const auto& tri = m.triangles[t];
      int* e = d.element_nodes.data() + static_cast<size_t>(t) * 6;
      e[0] = tri[0];
      e[1] = tri[1];
      e[2] = tri[2];
      e[3] = edge_id.at(ekey(tri[0], tri[1]));
      e[4] = edge_id.at(ekey(tri[1], tri[2]));
      e[5] = edge_id.at(ekey(tri[2], tri[0]));
    }
  } else if (kind == DofKind::P1b_vector2) {
    for (int t = 0; t < nt; ++t) {
      const auto& tri = m.triangles[t];
      d.nodes.push_back({(m.vertices[tri[0]][0] + m.vertices[tri[1]][0] + m.vertices[tri[2]][0]) / 3.0,
                         (m.vertices[tri[0]][1] + m.vertices[tri[1]][1] + m.vertices[tri[2]][1]) / 3.0});
    }
    d.element_nodes.resize(static_cast<size_t>(nt) * 4);
    for (int t = 0; t < nt; ++t) {
      const auto& tri = m.triangles[t];
      int* e = d.element_nodes.data() + static_cast<size_t>(t) * 4;
      e[0] = tri[0];
      e[1] = tri[1];
      e[2] = tri[2];
      e[3] = nv + t;
    }
  } else {  // P1_scalar
    d.element_nodes.resize(static_cast<size_t>(nt) * 3);
    for (int t = 0; t < nt; ++t) {
      const auto& tri = m.triangles[t];
      int* e = d.element_nodes.data() + static_cast<size_t>(t) * 3;
      e[0] = tri[0];
      e[1] = tri[1];
      e[2] = tri[2];
    }
  }
  d.n_scalar_nodes = static_cast<int>(d.nodes.size());

  // boundary nodes: endpoints always; midpoints for P2 kinds
  std::set<int> bset;
  for (const auto& e : m.boundary_edges) {
    bset.insert(e[0]);
    bset.insert(e[1]);
    std::vector<int> enodes = {e[0], e[1]};
    if (kind == DofKind::P2_scalar || kind == DofKind::P2_vector2) {
      auto it = edge_id.find(ekey(e[0], e[1]));
      if (it == edge_id.end())
        throw std::logic_error("make_dofmap: boundary edge not found in triangulation");
      bset.insert(it->second);
      enodes.push_back(it->second);
    }
    d.boundary_edge_nodes.push_back(std::move(enodes));
  }
  d.boundary_scalar_nodes.assign(bset.begin(), bset.end());
  for (int c = 0; c < d.components; ++c)
    for (int nidx : d.boundary_scalar_nodes) d.boundary_dofs.push_back(d.dof(c, nidx));
  return d;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SpMat from_triplets(int rows, int cols, const Triplets& tr) {
  SpMat A(rows, cols);
  A.setFromTriplets(tr.begin(), tr.end());
  A.makeCompressed();
  return A;
}

enum class FormType { grad_grad, l2, grad_transpose };

SpMat assemble_bilinear(const mesh::Mesh& m, const DofMap& d, FormType type) {
  const int nl = d.local_ndof;
  const int nn = d.n_scalar_nodes;
  Triplets tr;
  tr.reserve(static_cast<size_t>(m.n_triangles()) * nl * nl * (d.components == 2 ? 4 : 1));
  std::vector<double> N(nl);
  std::vector<std::array<double, 2>> dref(nl), dphys(nl);

  for (int t = 0; t < m.n_triangles(); ++t) {
    TriGeom g = geometry(m, t);
    const int* en = d.elem(t);
    if (type != FormType::grad_transpose) {
      // scalar element matrix; vector kinds get it per diagonal block
      Eigen::MatrixXd ke = Eigen::MatrixXd::Zero(nl, nl);
      for (int q = 0; q < TriQuadrature::n; ++q) {
        shape_eval(d.kind, tri_rule.xi[q], tri_rule.eta[q], N.data(),
                   reinterpret_cast<double(*)[2]>(dref.data()));
        double wq = tri_rule.w[q] * g.detJ;
        for (int i = 0; i < nl; ++i) push_gradient(g, dref[i].data(), dphys[i].data());
        for (int i = 0; i < nl; ++i)
          for (int j = i; j < nl; ++j) {
            double v = (type == FormType::grad_grad)
                           ? dphys[i][0] * dphys[j][0] + dphys[i][1] * dphys[j][1]
                           : N[i] * N[j];
            ke(i, j) += wq * v;
          }
      }
      for (int i = 0; i < nl; ++i)
        for (int j = 0; j < i; ++j) ke(i, j) = ke(j, i);
      for (int c = 0; c < d.components; ++c)
        for (int i = 0; i < nl; ++i)
          for (int j = 0; j < nl; ++j)
            tr.emplace_back(c * nn + en[i], c * nn + en[j], ke(i, j));
    } else {
      // entry((c,i),(e,j)) = integral of d_e(N_i) d_c(N_j); symmetrized
      // exactly so the stored matrix equals its transpose bitwise
      Eigen::MatrixXd ke = Eigen::MatrixXd::Zero(2 * nl, 2 * nl);
      for (int q = 0; q < TriQuadrature::n; ++q) {
        shape_eval(d.kind, tri_rule.xi[q], tri_rule.eta[q], N.data(),
                   reinterpret_cast<double(*)[2]>(dref.data()));
        double wq = tri_rule.w[q] * g.detJ;
        for (int i = 0; i < nl; ++i) push_gradient(g, dref[i].data(), dphys[i].data());
        for (int c = 0; c < 2; ++c)
          for (int e = 0; e < 2; ++e)
            for (int i = 0; i < nl; ++i)
              for (int j = 0; j < nl; ++j)
                ke(c * nl + i, e * nl + j) += wq * dphys[i][e] * dphys[j][c];
      }
      ke = 0.5 * (ke + ke.transpose()).eval();
      for (int c = 0; c < 2; ++c)
        for (int e = 0; e < 2; ++e)
          for (int i = 0; i < nl; ++i)
            for (int j = 0; j < nl; ++j)
              tr.emplace_back(c * nn + en[i], e * nn + en[j], ke(c * nl + i, e * nl + j));
    }
  }
  return from_triplets(d.n_dofs(), d.n_dofs(), tr);
}

}  // namespace

SpMat stiffness(const mesh::Mesh& m, const DofMap& d) {
  return assemble_bilinear(m, d, FormType::grad_grad);
}

SpMat mass(const mesh::Mesh& m, const DofMap& d) {
  return assemble_bilinear(m, d, FormType::l2);
}

SpMat transpose_gradient_form(const mesh::Mesh& m, const DofMap& d) {
  if (!is_vector(d.kind))
    throw std::invalid_argument("transpose_gradient_form: vector dofmap required");
  return assemble_bilinear(m, d, FormType::grad_transpose);
}

SpMat divergence(const mesh::Mesh& m, const DofMap& vel, const DofMap& pres) {
  if (!is_vector(vel.kind) || pres.kind != DofKind::P1_scalar)
    throw std::invalid_argument("divergence: expects vector velocity and P1 pressure");
  const int nl = vel.local_ndof;
  const int nn = vel.n_scalar_nodes;
  Triplets tr;
  std::vector<double> N(nl);
  std::vector<std::array<double, 2>> dref(nl), dphys(nl);
  double Np[3];
  std::array<double, 2> dp_ref[3];

  for (int t = 0; t < m.n_triangles(); ++t) {
    TriGeom g = geometry(m, t);
    const int* en = vel.elem(t);
    const int* ep = pres.elem(t);
    Eigen::MatrixXd be[2];
    be[0] = Eigen::MatrixXd::Zero(3, nl);
    be[1] = Eigen::MatrixXd::Zero(3, nl);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      shape_eval(vel.kind, tri_rule.xi[q], tri_rule.eta[q], N.data(),
                 reinterpret_cast<double(*)[2]>(dref.data()));
      shape_eval(DofKind::P1_scalar, tri_rule.xi[q], tri_rule.eta[q], Np,
                 reinterpret_cast<double(*)[2]>(dp_ref));
      double wq = tri_rule.w[q] * g.detJ;
      for (int i = 0; i < nl; ++i) push_gradient(g, dref[i].data(), dphys[i].data());
      for (int p = 0; p < 3; ++p)
        for (int i = 0; i < nl; ++i)
          for (int c = 0; c < 2; ++c) be[c](p, i) += wq * Np[p] * dphys[i][c];
    }
    for (int p = 0; p < 3; ++p)
      for (int i = 0; i < nl; ++i)
        for (int c = 0; c < 2; ++c) tr.emplace_back(ep[p], c * nn + en[i], be[c](p, i));
  }
  return from_triplets(pres.n_dofs(), vel.n_dofs(), tr);
}

BoundaryOperators boundary_mass_and_trace(const mesh::Mesh& m, const DofMap& d) {
  BoundaryOperators out;
  const int k = static_cast<int>(d.boundary_dofs.size());
  const int n = d.n_dofs();

  // position of each boundary dof inside the boundary numbering
  std::map<int, int> bpos;
  for (int i = 0; i < k; ++i) bpos[d.boundary_dofs[i]] = i;

  Triplets trJ;
  for (int i = 0; i < k; ++i) trJ.emplace_back(i, d.boundary_dofs[i], 1.0);
  out.J = from_triplets(k, n, trJ);

  const bool quadratic = (d.kind == DofKind::P2_scalar || d.kind == DofKind::P2_vector2);
  const int enl = quadratic ? 3 : 2;  // scalar trace dofs per edge

  Triplets trM;
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(d.components == 2 ? k : 0);
  const int kb = static_cast<int>(d.boundary_scalar_nodes.size());

  for (size_t e = 0; e < m.boundary_edges.size(); ++e) {
    const auto& be = m.boundary_edges[e];
    const auto& enodes = d.boundary_edge_nodes[e];
    double L = std::hypot(m.vertices[be[1]][0] - m.vertices[be[0]][0],
                          m.vertices[be[1]][1] - m.vertices[be[0]][1]);
    // 1D shapes along the edge, order (end1, end2[, mid])
    Eigen::MatrixXd me = Eigen::MatrixXd::Zero(enl, enl);
    Eigen::VectorXd ie = Eigen::VectorXd::Zero(enl);
    for (int q = 0; q < EdgeQuadrature::n; ++q) {
      double t = edge_rule.t[q], wq = edge_rule.w[q] * L;
      double Ne[3];
      if (quadratic) {
        Ne[0] = (1.0 - t) * (1.0 - 2.0 * t);
        Ne[1] = t * (2.0 * t - 1.0);
        Ne[2] = 4.0 * t * (1.0 - t);
      } else {
        Ne[0] = 1.0 - t;
        Ne[1] = t;
      }
      for (int i = 0; i < enl; ++i) {
        ie[i] += wq * Ne[i];
        for (int j = 0; j < enl; ++j) me(i, j) += wq * Ne[i] * Ne[j];
      }
    }
    for (int c = 0; c < d.components; ++c)
      for (int i = 0; i < enl; ++i) {
        int bi = bpos.at(d.dof(c, enodes[i]));
        for (int j = 0; j < enl; ++j) {
          int bj = bpos.at(d.dof(c, enodes[j]));
          trM.emplace_back(bi, bj, me(i, j));
        }
      }
    if (d.components == 2) {
      const auto& nrm = m.edge_normals[e];
      for (int c = 0; c < 2; ++c)
        for (int i = 0; i < enl; ++i) nu[bpos.at(d.dof(c, enodes[i]))] += nrm[c] * ie[i];
    }
  }
  (void)kb;
  out.Mb = from_triplets(k, k, trM);
  out.nu_flux = nu;
  return out;
}

Eigen::VectorXd interpolate_scalar(const DofMap& d,
                                   const std::function<double(double, double)>& f) {
  Eigen::VectorXd v(d.n_scalar_nodes);
  for (int i = 0; i < d.n_scalar_nodes; ++i) v[i] = f(d.nodes[i][0], d.nodes[i][1]);
  return v;
}

Eigen::VectorXd interpolate_vector2(const DofMap& d,
                                    const std::function<double(double, double)>& fx,
                                    const std::function<double(double, double)>& fy) {
  if (d.components != 2) throw std::invalid_argument("interpolate_vector2: vector dofmap required");
  Eigen::VectorXd v(d.n_dofs());
  for (int i = 0; i < d.n_scalar_nodes; ++i) {
    v[d.dof(0, i)] = fx(d.nodes[i][0], d.nodes[i][1]);
    v[d.dof(1, i)] = fy(d.nodes[i][0], d.nodes[i][1]);
  }
  return v;
}

SpMat gradient_coupling(const mesh::Mesh& m, const DofMap& vec, const DofMap& grad_space) {
  if (vec.components != 2)
    throw std::invalid_argument("gradient_coupling: vector space required");
  const int nl = vec.local_ndof;
  const int ngl = grad_space.local_ndof;
  const int nn = vec.n_scalar_nodes;
  Triplets tr;
  std::vector<double> N(nl), Ng(ngl);
  std::vector<std::array<double, 2>> dref_v(nl), dref_g(ngl), dphys(ngl);

  for (int t = 0; t < m.n_triangles(); ++t) {
    TriGeom g = geometry(m, t);
    const int* ev = vec.elem(t);
    const int* eg = grad_space.elem(t);
    Eigen::MatrixXd ce[2];
    ce[0] = Eigen::MatrixXd::Zero(nl, ngl);
    ce[1] = Eigen::MatrixXd::Zero(nl, ngl);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      shape_eval(vec.kind, tri_rule.xi[q], tri_rule.eta[q], N.data(),
                 reinterpret_cast<double(*)[2]>(dref_v.data()));
      shape_eval(grad_space.kind, tri_rule.xi[q], tri_rule.eta[q], Ng.data(),
                 reinterpret_cast<double(*)[2]>(dref_g.data()));
      double wq = tri_rule.w[q] * g.detJ;
      for (int i = 0; i < ngl; ++i) push_gradient(g, dref_g[i].data(), dphys[i].data());
      for (int i = 0; i < nl; ++i)
        for (int j = 0; j < ngl; ++j)
          for (int c = 0; c < 2; ++c) ce[c](i, j) += wq * N[i] * dphys[j][c];
    }
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < ngl; ++j)
        for (int c = 0; c < 2; ++c) tr.emplace_back(c * nn + ev[i], eg[j], ce[c](i, j));
  }
  return from_triplets(vec.n_dofs(), grad_space.n_dofs(), tr);
}

Eigen::VectorXd unit_load(const mesh::Mesh& m, const DofMap& d) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d.n_dofs());
  const int nl = d.local_ndof;
  const int nn = d.n_scalar_nodes;
  std::vector<double> N(nl);
  std::vector<std::array<double, 2>> dref(nl);
  for (int t = 0; t < m.n_triangles(); ++t) {
    TriGeom g = geometry(m, t);
    const int* en = d.elem(t);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      shape_eval(d.kind, tri_rule.xi[q], tri_rule.eta[q], N.data(),
                 reinterpret_cast<double(*)[2]>(dref.data()));
      double wq = tri_rule.w[q] * g.detJ;
      for (int c = 0; c < d.components; ++c)
        for (int i = 0; i < nl; ++i) v[c * nn + en[i]] += wq * N[i];
    }
  }
  return v;
}

}  // namespace friedlab::fem
