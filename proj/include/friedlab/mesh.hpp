#pragma once

// Conforming triangulations of the benchmark Lipschitz polygons: unit
// square, L-shape ([0,1]^2 minus [0.5,1]^2) and a regular polygon inscribed
// in the unit circle as a disk stand-in. All generators are structured and
// fully deterministic; domains are exact polygons so quadrature stays exact.

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace friedlab::mesh {

struct BadParameter : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Domain { square, lshape, disk_polygon };

std::string domain_name(Domain d);
Domain domain_from_name(const std::string& s);

struct Mesh {
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 3>> triangles;        // counterclockwise
  std::vector<std::array<int, 2>> boundary_edges;   // domain on the left
  std::vector<std::array<double, 2>> edge_normals;  // outward unit normals, cached

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }
  int n_boundary_edges() const { return static_cast<int>(boundary_edges.size()); }
};

// Structured triangulation with max edge length <= 2h. `sides` applies to
// disk_polygon only (>= 6).
Mesh generate(Domain domain, double h, int sides = 16);

// Uniform red refinement: each triangle split into four by edge midpoints.
Mesh refine(const Mesh& m);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};
ValidationReport validate(const Mesh& m);

void save(const Mesh& m, const std::string& path);
Mesh load(const std::string& path);
std::string to_json(const Mesh& m);  // canonical bytes; 17 significant digits
Mesh from_json(const std::string& text);

double boundary_measure(const Mesh& m);
double area(const Mesh& m);
double max_edge_length(const Mesh& m);
double triangle_area(const Mesh& m, int t);

void compute_edge_normals(Mesh& m);

}  // namespace friedlab::mesh
