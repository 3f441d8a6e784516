#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "friedlab/mesh.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>

using namespace friedlab;

namespace {

constexpr double kPi = 3.14159265358979323846;

// V - E + F for a triangulation, counting all undirected edges
int euler_characteristic(const mesh::Mesh& m) {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  return m.n_vertices() - static_cast<int>(edges.size()) + m.n_triangles();
}

}  // namespace

TEST_CASE("square h=0.5: 9 vertices, 8 triangles, 8 boundary edges") {
  mesh::Mesh m = mesh::generate(mesh::Domain::square, 0.5);
  CHECK(m.n_vertices() == 9);
  CHECK(m.n_triangles() == 8);
  CHECK(m.n_boundary_edges() == 8);
  CHECK(mesh::validate(m).ok());
  CHECK(mesh::area(m) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mesh::boundary_measure(m) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(euler_characteristic(m) == 1);
}

TEST_CASE("lshape: area 0.75, perimeter 4, simply connected") {
  for (double h : {0.5, 0.25, 0.125}) {
    mesh::Mesh m = mesh::generate(mesh::Domain::lshape, h);
    CHECK(mesh::validate(m).ok());
    CHECK(std::abs(mesh::area(m) - 0.75) <= 1e-12);
    CHECK(std::abs(mesh::boundary_measure(m) - 4.0) <= 1e-12);
    CHECK(euler_characteristic(m) == 1);
  }
}

TEST_CASE("disk polygon: inscribed-polygon area and perimeter formulas") {
  mesh::Mesh m = mesh::generate(mesh::Domain::disk_polygon, 0.25, 16);
  CHECK(mesh::validate(m).ok());
  CHECK(std::abs(mesh::area(m) - 8.0 * std::sin(kPi / 8.0)) <= 1e-12);
  CHECK(std::abs(mesh::boundary_measure(m) - 32.0 * std::sin(kPi / 16.0)) <= 1e-12);
  CHECK(euler_characteristic(m) == 1);

  CHECK_THROWS_AS(mesh::generate(mesh::Domain::disk_polygon, 0.25, 5), mesh::BadParameter);
  CHECK_THROWS_AS(mesh::generate(mesh::Domain::square, -0.1), mesh::BadParameter);
}

TEST_CASE("generators respect the mesh-size bound") {
  for (double h : {0.5, 0.25, 0.125}) {
    CHECK(mesh::max_edge_length(mesh::generate(mesh::Domain::square, h)) <= 2.0 * h + 1e-15);
    CHECK(mesh::max_edge_length(mesh::generate(mesh::Domain::lshape, h)) <= 2.0 * h + 1e-15);
    CHECK(mesh::max_edge_length(mesh::generate(mesh::Domain::disk_polygon, h, 16)) <=
          2.0 * h + 1e-15);
  }
}

TEST_CASE("refine: 4x triangles, doubled boundary, area preserved") {
  mesh::Mesh m = mesh::generate(mesh::Domain::square, 0.5);
  mesh::Mesh r = mesh::refine(m);
  CHECK(r.n_triangles() == 32);
  CHECK(r.n_boundary_edges() == 16);
  CHECK(std::abs(mesh::area(r) - mesh::area(m)) <= 1e-12);
  CHECK(mesh::validate(r).ok());

  mesh::Mesh d = mesh::refine(mesh::generate(mesh::Domain::disk_polygon, 0.5, 16));
  CHECK(mesh::validate(d).ok());
  CHECK(std::abs(mesh::area(d) - 8.0 * std::sin(kPi / 8.0)) <= 1e-12);
}

TEST_CASE("validate flags broken meshes") {
  mesh::Mesh m = mesh::generate(mesh::Domain::square, 0.5);

  mesh::Mesh bad_area = m;
  std::swap(bad_area.triangles[0][0], bad_area.triangles[0][1]);
  auto rep = mesh::validate(bad_area);
  CHECK(!rep.ok());
  bool has_area = false;
  for (const auto& v : rep.violations) has_area |= v.find("area") != std::string::npos;
  CHECK(has_area);

  mesh::Mesh bad_edge = m;
  std::swap(bad_edge.boundary_edges[0][0], bad_edge.boundary_edges[0][1]);
  mesh::compute_edge_normals(bad_edge);
  auto rep2 = mesh::validate(bad_edge);
  CHECK(!rep2.ok());
  bool has_orient = false;
  for (const auto& v : rep2.violations)
    has_orient |= v.find("orientation") != std::string::npos ||
                  v.find("centroid") != std::string::npos;
  CHECK(has_orient);
}

TEST_CASE("normals: outward, closed boundary sum") {
  for (auto dom : {mesh::Domain::square, mesh::Domain::lshape, mesh::Domain::disk_polygon}) {
    mesh::Mesh m = mesh::generate(dom, 0.25, 16);
    double sx = 0, sy = 0;
    for (size_t e = 0; e < m.boundary_edges.size(); ++e) {
      const auto& be = m.boundary_edges[e];
      double len = std::hypot(m.vertices[be[1]][0] - m.vertices[be[0]][0],
                              m.vertices[be[1]][1] - m.vertices[be[0]][1]);
      sx += len * m.edge_normals[e][0];
      sy += len * m.edge_normals[e][1];
      CHECK(std::abs(std::hypot(m.edge_normals[e][0], m.edge_normals[e][1]) - 1.0) <= 1e-14);
    }
    CHECK(std::hypot(sx, sy) <= 1e-12);
  }
}

TEST_CASE("save/load round trip is bitwise on coordinates") {
  mesh::Mesh m = mesh::generate(mesh::Domain::disk_polygon, 0.25, 12);
  std::string path = "test_mesh_roundtrip.json";
  mesh::save(m, path);
  mesh::Mesh l = mesh::load(path);
  REQUIRE(l.n_vertices() == m.n_vertices());
  REQUIRE(l.n_triangles() == m.n_triangles());
  REQUIRE(l.n_boundary_edges() == m.n_boundary_edges());
  for (int i = 0; i < m.n_vertices(); ++i) {
    CHECK(l.vertices[i][0] == m.vertices[i][0]);
    CHECK(l.vertices[i][1] == m.vertices[i][1]);
  }
  CHECK(l.triangles == m.triangles);
  CHECK(l.boundary_edges == m.boundary_edges);
  CHECK(mesh::to_json(l) == mesh::to_json(m));
  std::remove(path.c_str());
}

TEST_CASE("parse errors carry diagnostics") {
  CHECK_THROWS_AS(mesh::from_json("{\"vertices\": []}"), mesh::ParseError);
  CHECK_THROWS_AS(
      mesh::from_json("{\"vertices\": [[0,0]], \"triangles\": [[0, 0.5, 1]], "
                      "\"boundary_edges\": []}"),
      mesh::ParseError);
  CHECK_THROWS_AS(mesh::from_json("not json"), mesh::ParseError);
}
