#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "friedlab/eigsolve.hpp"
#include "friedlab/fem_assembly.hpp"
#include "friedlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace friedlab;

namespace {

// one-triangle mesh: the unit right triangle (0,0), (1,0), (0,1)
mesh::Mesh unit_right_triangle() {
  mesh::Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  m.boundary_edges = {{0, 1}, {1, 2}, {2, 0}};
  mesh::compute_edge_normals(m);
  return m;
}

// exact integral of x^p y^q over the unit right triangle: p! q! / (p+q+2)!
double monomial_integral(int p, int q) {
  auto fact = [](int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  };
  return fact(p) * fact(q) / fact(p + q + 2);
}

}  // namespace

TEST_CASE("P1 stiffness and mass on the unit right triangle") {
  mesh::Mesh m = unit_right_triangle();
  fem::DofMap d = fem::make_dofmap(m, fem::DofKind::P1_scalar);
  Eigen::MatrixXd K = Eigen::MatrixXd(fem::stiffness(m, d));
  Eigen::MatrixXd Kref(3, 3);
  Kref << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
  CHECK((K - Kref).cwiseAbs().maxCoeff() <= 1e-14);

  Eigen::MatrixXd M = Eigen::MatrixXd(fem::mass(m, d));
  Eigen::MatrixXd Mref(3, 3);
  Mref << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  Mref /= 24.0;
  CHECK((M - Mref).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("quadrature integrates monomials through degree 4 exactly") {
  mesh::Mesh m = unit_right_triangle();
  fem::DofMap d = fem::make_dofmap(m, fem::DofKind::P1_scalar);
  // 1^T M x^p y^q-interpolant is exact only for low degree; instead compare
  // the rule directly through the mass/load machinery: unit_load of P2
  // integrates quadratics exactly, and M entries cover products to degree 4.
  // The sharpest generic check: integrate x^p y^q with p+q <= 2 via P2
  // interpolation (exact interpolant) against the closed form.
  fem::DofMap d2 = fem::make_dofmap(m, fem::DofKind::P2_scalar);
  Eigen::VectorXd load = fem::unit_load(m, d2);
  for (int p = 0; p <= 2; ++p)
    for (int q = 0; p + q <= 2; ++q) {
      Eigen::VectorXd f = fem::interpolate_scalar(
          d2, [&](double x, double y) { return std::pow(x, p) * std::pow(y, q); });
      CHECK(std::abs(load.dot(f) - monomial_integral(p, q)) <= 1e-14);
    }
  // degree-4 exactness: (x^2, x^2)_L2 = integral of x^4
  Eigen::MatrixXd M2 = Eigen::MatrixXd(fem::mass(m, d2));
  Eigen::VectorXd x2 = fem::interpolate_scalar(d2, [](double x, double) { return x * x; });
  CHECK(std::abs(x2.dot(M2 * x2) - monomial_integral(4, 0)) <= 1e-14);
  Eigen::VectorXd xy = fem::interpolate_scalar(d2, [](double x, double y) { return x * y; });
  CHECK(std::abs(xy.dot(M2 * xy) - monomial_integral(2, 2)) <= 1e-14);
  (void)d;
}

TEST_CASE("stiffness rows sum to zero and the matrix is PSD") {
  mesh::Mesh m = mesh::generate(mesh::Domain::lshape, 0.25);
  for (auto kind : {fem::DofKind::P2_scalar, fem::DofKind::P2_vector2}) {
    fem::DofMap d = fem::make_dofmap(m, kind);
    Eigen::MatrixXd K = Eigen::MatrixXd(fem::stiffness(m, d));
    CHECK((K - K.transpose()).norm() == 0.0);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.n_scalar_nodes);
    Eigen::VectorXd rs = K.topLeftCorner(d.n_scalar_nodes, d.n_scalar_nodes) * ones;
    CHECK(rs.cwiseAbs().maxCoeff() <= 1e-12);
    auto e = eigsolve::sym_eig(K, 1);
    CHECK(e.eigenvalues[0] >= -1e-10 * K.norm());
  }
}

TEST_CASE("mass: partition of unity gives the area, SPD") {
  mesh::Mesh m = mesh::generate(mesh::Domain::disk_polygon, 0.25, 16);
  fem::DofMap d = fem::make_dofmap(m, fem::DofKind::P2_scalar);
  Eigen::MatrixXd M = Eigen::MatrixXd(fem::mass(m, d));
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.n_dofs());
  CHECK(std::abs(ones.dot(M * ones) - mesh::area(m)) <= 1e-12);
  auto e = eigsolve::sym_eig(M, 1);
  CHECK(e.eigenvalues[0] > 0.0);
}

TEST_CASE("stiffness kernel on a connected mesh is the constants") {
  mesh::Mesh m = mesh::generate(mesh::Domain::square, 0.25);
  {
    fem::DofMap d = fem::make_dofmap(m, fem::DofKind::P2_scalar);
    Eigen::MatrixXd K = Eigen::MatrixXd(fem::stiffness(m, d));
    auto e = eigsolve::sym_eig(K, 3);
    double scale = K.norm();
    CHECK(std::abs(e.eigenvalues[0]) <= 1e-10 * scale);
    CHECK(e.eigenvalues[1] > 1e-6 * scale);
  }
  {
    fem::DofMap d = fem::make_dofmap(m, fem::DofKind::P2_vector2);
    Eigen::MatrixXd K = Eigen::MatrixXd(fem::stiffness(m, d));
    auto e = eigsolve::sym_eig(K, 4);
    double scale = K.norm();
    CHECK(std::abs(e.eigenvalues[1]) <= 1e-10 * scale);
    CHECK(e.eigenvalues[2] > 1e-6 * scale);
  }
}

TEST_CASE("transpose-gradient form: rigid rotation, shear, symmetry") {
  mesh::Mesh m = mesh::generate(mesh::Domain::square, 0.25);
  fem::DofMap d = fem::make_dofmap(m, fem::DofKind::P2_vector2);
  Eigen::MatrixXd K = Eigen::MatrixXd(fem::stiffness(m, d));
  Eigen::MatrixXd Kt = Eigen::MatrixXd(fem::transpose_gradient_form(m, d));
  CHECK((Kt - Kt.transpose()).norm() == 0.0);

  // rotation (-y, x): the symmetric-gradient form K + Kt vanishes
  Eigen::VectorXd rot = fem::interpolate_vector2(
      d, [](double, double y) { return -y; }, [](double x, double) { return x; });
  CHECK(std::abs(rot.dot((K + Kt) * rot)) <= 1e-12 * K.norm());

  // u = (x, 0): transpose form equals the gradient form equals the area
  Eigen::VectorXd ux = fem::interpolate_vector2(
      d, [](double x, double) { return x; }, [](double, double) { return 0.0; });
  CHECK(std::abs(ux.dot(Kt * ux) - mesh::area(m)) <= 1e-12);
  CHECK(std::abs(ux.dot(K * ux) - ux.dot(Kt * ux)) <= 1e-12);
}

TEST_CASE("divergence: constants and rotations are divergence-free; (x,0) rows") {
  mesh::Mesh m = mesh::generate(mesh::Domain::lshape, 0.25);
  fem::DofMap dv = fem::make_dofmap(m, fem::DofKind::P2_vector2);
  fem::DofMap dp = fem::make_dofmap(m, fem::DofKind::P1_scalar);
  fem::SpMat B = fem::divergence(m, dv, dp);

  Eigen::VectorXd c = fem::interpolate_vector2(
      dv, [](double, double) { return 2.0; }, [](double, double) { return -3.0; });
  CHECK((B * c).cwiseAbs().maxCoeff() <= 1e-13);

  Eigen::VectorXd rot = fem::interpolate_vector2(
      dv, [](double, double y) { return -y; }, [](double x, double) { return x; });
  CHECK((B * rot).cwiseAbs().maxCoeff() <= 1e-13);

  // div (x, 0) = 1: each row must integrate the P1 basis function
  Eigen::VectorXd ux = fem::interpolate_vector2(
      dv, [](double x, double) { return x; }, [](double, double) { return 0.0; });
  Eigen::VectorXd expected = fem::unit_load(m, dp);
  CHECK((B * ux - expected).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("boundary operators: edge mass block, perimeter, flux functional") {
  mesh::Mesh m = mesh::generate(mesh::Domain::square, 0.5);
  fem::DofMap d = fem::make_dofmap(m, fem::DofKind::P2_scalar);
  auto bo = fem::boundary_mass_and_trace(m, d);
  const int k = static_cast<int>(d.boundary_dofs.size());

  // J is a boolean selection
  CHECK(bo.J.nonZeros() == k);
  CHECK(bo.J.coeffs().cwiseAbs().maxCoeff() == 1.0);

  // partition of unity on the boundary: 1^T Mb 1 = perimeter
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);
  CHECK(std::abs(ones.dot(Eigen::MatrixXd(bo.Mb) * ones) - 4.0) <= 1e-12);

  // single-edge quadratic mass block (L/30) [[4,-1,2],[-1,4,2],[2,2,16]]
  mesh::Mesh single = unit_right_triangle();
  fem::DofMap ds = fem::make_dofmap(single, fem::DofKind::P2_scalar);
  auto bs = fem::boundary_mass_and_trace(single, ds);
  // edge (0,1): find boundary positions of nodes 0, 1 and the midpoint
  Eigen::MatrixXd Mb = Eigen::MatrixXd(bs.Mb);
  std::vector<int> pos(ds.n_scalar_nodes, -1);
  for (size_t i = 0; i < ds.boundary_dofs.size(); ++i) pos[ds.boundary_dofs[i]] = static_cast<int>(i);
  const auto& en = ds.boundary_edge_nodes[0];  // (0, 1, mid)
  const double L = 1.0;
  Eigen::Matrix3d ref;
  ref << 4, -1, 2, -1, 4, 2, 2, 2, 16;
  ref *= L / 30.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      // other edges contribute to diagonal/corner entries; isolate edge (0,1)
      // by checking a fresh mesh consisting of that edge only is impossible,
      // so check the midpoint row/column, which only edge (0,1) touches
      if (a == 2 || b == 2) CHECK(Mb(pos[en[a]], pos[en[b]]) == doctest::Approx(ref(a, b)).epsilon(1e-13));
    }

  // vector flux functional
  fem::DofMap dvec = fem::make_dofmap(m, fem::DofKind::P2_vector2);
  auto bv = fem::boundary_mass_and_trace(m, dvec);
  Eigen::VectorXd cf = fem::interpolate_vector2(
      dvec, [](double, double) { return 1.0; }, [](double, double) { return 2.0; });
  CHECK(std::abs(bv.nu_flux.dot(bv.J * cf)) <= 1e-12);

  // field (2x-1, 2y-1) has boundary flux = perimeter = 4 on the unit square
  Eigen::VectorXd lin = fem::interpolate_vector2(
      dvec, [](double x, double) { return 2 * x - 1; }, [](double, double y) { return 2 * y - 1; });
  CHECK(std::abs(bv.nu_flux.dot(bv.J * lin) - 4.0) <= 1e-12);
}

TEST_CASE("assembly independent of triangle enumeration order") {
  mesh::Mesh m = mesh::generate(mesh::Domain::disk_polygon, 0.5, 8);
  mesh::Mesh shuffled = m;
  std::mt19937_64 rng(5);
  std::shuffle(shuffled.triangles.begin(), shuffled.triangles.end(), rng);

  fem::DofMap d1 = fem::make_dofmap(m, fem::DofKind::P2_scalar);
  fem::DofMap d2 = fem::make_dofmap(shuffled, fem::DofKind::P2_scalar);
  // node numbering differs; compare quadratic forms on interpolants instead
  auto quad = [](const mesh::Mesh& mm, const fem::DofMap& dd) {
    Eigen::VectorXd f = fem::interpolate_scalar(
        dd, [](double x, double y) { return std::sin(1.3 * x) + 0.7 * y * y; });
    Eigen::MatrixXd K = Eigen::MatrixXd(fem::stiffness(mm, dd));
    Eigen::MatrixXd M = Eigen::MatrixXd(fem::mass(mm, dd));
    return std::make_pair(f.dot(K * f), f.dot(M * f));
  };
  auto [k1, m1] = quad(m, d1);
  auto [k2, m2] = quad(shuffled, d2);
  CHECK(std::abs(k1 - k2) <= 1e-12 * std::max(1.0, std::abs(k1)));
  CHECK(std::abs(m1 - m2) <= 1e-12 * std::max(1.0, std::abs(m1)));
}

TEST_CASE("component-major interleaving") {
  mesh::Mesh m = mesh::generate(mesh::Domain::square, 0.5);
  fem::DofMap d = fem::make_dofmap(m, fem::DofKind::P2_vector2);
  Eigen::VectorXd f = fem::interpolate_vector2(
      d, [](double x, double) { return x; }, [](double, double) { return 0.0; });
  for (int i = 0; i < d.n_scalar_nodes; ++i) {
    CHECK(f[i] == d.nodes[i][0]);
    CHECK(f[d.n_scalar_nodes + i] == 0.0);
  }
}

TEST_CASE("MINI space: bubbles vanish on the boundary") {
  mesh::Mesh m = mesh::generate(mesh::Domain::square, 0.5);
  fem::DofMap d = fem::make_dofmap(m, fem::DofKind::P1b_vector2);
  CHECK(d.n_scalar_nodes == m.n_vertices() + m.n_triangles());
  // boundary dofs are vertex dofs only
  for (int b : d.boundary_scalar_nodes) CHECK(b < m.n_vertices());
  // divergence-free constants still hold with bubbles present
  fem::DofMap dp = fem::make_dofmap(m, fem::DofKind::P1_scalar);
  fem::SpMat B = fem::divergence(m, d, dp);
  Eigen::VectorXd c = fem::interpolate_vector2(
      d, [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
  // zero out bubble coefficients (interpolate_vector2 fills them with nodal
  // values of the constant, but the bubble coefficient of a constant is 0)
  for (int i = m.n_vertices(); i < d.n_scalar_nodes; ++i) {
    c[i] = 0.0;
    c[d.n_scalar_nodes + i] = 0.0;
  }
  CHECK((B * c).cwiseAbs().maxCoeff() <= 1e-13);
}
