#include "friedlab/mesh.hpp"

#include "friedlab/json_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace friedlab::mesh {

namespace {

constexpr double kPi = 3.14159265358979323846;

double signed_area(const Mesh& m, const std::array<int, 3>& t) {
  const auto& a = m.vertices[t[0]];
  const auto& b = m.vertices[t[1]];
  const auto& c = m.vertices[t[2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

// Collect directed edges owned by exactly one triangle (in CCW triangle
// order, so the domain lies on the left) and chain them into loops starting
// from the smallest vertex index.
std::vector<std::array<int, 2>> trace_boundary(const std::vector<std::array<int, 3>>& tris) {
  std::map<std::pair<int, int>, int> undirected_count;
  std::set<std::pair<int, int>> directed;
  for (const auto& t : tris) {
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      undirected_count[{std::min(a, b), std::max(a, b)}]++;
      directed.insert({a, b});
    }
  }
  std::map<int, int> next;  // boundary successor map
  for (const auto& [ab, cnt] : undirected_count) {
    if (cnt != 1) continue;
    auto [lo, hi] = ab;
    if (directed.count({lo, hi}))
      next[lo] = hi;
    else
      next[hi] = lo;
  }
  std::vector<std::array<int, 2>> edges;
  std::set<int> visited;
  while (visited.size() < next.size()) {
    int start = -1;
    for (const auto& [a, b] : next)
      if (!visited.count(a)) {
        start = a;
        break;
      }
    int cur = start;
    do {
      int nxt = next.at(cur);
      edges.push_back({cur, nxt});
      visited.insert(cur);
      cur = nxt;
    } while (cur != start);
  }
  return edges;
}

Mesh finish(Mesh m) {
  m.boundary_edges = trace_boundary(m.triangles);
  compute_edge_normals(m);
  return m;
}

Mesh generate_square(double h) {
  const int n = std::max(1, static_cast<int>(std::lround(1.0 / h)));
  Mesh m;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  return finish(std::move(m));
}

Mesh generate_lshape(double h) {
  // [0,1]^2 minus [0.5,1]^2; the grid must resolve the 0.5 line.
  const int n = 2 * std::max(1, static_cast<int>(std::lround(1.0 / (2.0 * h))));
  const int half = n / 2;
  std::vector<int> renumber((n + 1) * (n + 1), -1);
  Mesh m;
  auto keep_cell = [&](int i, int j) { return !(i >= half && j >= half); };
  auto grid_id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      bool touches = false;
      for (int dj = -1; dj <= 0 && !touches; ++dj)
        for (int di = -1; di <= 0 && !touches; ++di) {
          int ci = i + di, cj = j + dj;
          if (ci >= 0 && ci < n && cj >= 0 && cj < n && keep_cell(ci, cj)) touches = true;
        }
      if (touches) {
        renumber[grid_id(i, j)] = m.n_vertices();
        m.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
      }
    }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (!keep_cell(i, j)) continue;
      int v00 = renumber[grid_id(i, j)], v10 = renumber[grid_id(i + 1, j)];
      int v01 = renumber[grid_id(i, j + 1)], v11 = renumber[grid_id(i + 1, j + 1)];
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  return finish(std::move(m));
}

Mesh generate_disk(double h, int sides) {
  // Regular polygon inscribed in the unit circle; each center-to-side wedge
  // is uniformly subdivided into rings^2 triangles. Max edge = 1/rings <= 2h.
  const int rings = std::max(1, static_cast<int>(std::lround(1.0 / (2.0 * h))));
  Mesh m;
  m.vertices.push_back({0.0, 0.0});
  std::vector<std::array<double, 2>> corners(sides);
  for (int k = 0; k < sides; ++k)
    corners[k] = {std::cos(2.0 * kPi * k / sides), std::sin(2.0 * kPi * k / sides)};

  // Ring i (1-based) holds sides*i vertices; within it, wedge k contributes
  // positions k*i .. k*i + i - 1, interpolated along the scaled chord.
  auto ring_start = [&](int i) { return 1 + sides * (i - 1) * i / 2; };
  for (int i = 1; i <= rings; ++i) {
    double scale = static_cast<double>(i) / rings;
    for (int k = 0; k < sides; ++k) {
      const auto& A = corners[k];
      const auto& B = corners[(k + 1) % sides];
      for (int j = 0; j < i; ++j) {
        double t = static_cast<double>(j) / i;
        m.vertices.push_back({scale * ((1 - t) * A[0] + t * B[0]),
                              scale * ((1 - t) * A[1] + t * B[1])});
      }
    }
  }
  auto ring_id = [&](int i, int pos) {
    if (i == 0) return 0;
    int count = sides * i;
    return ring_start(i) + ((pos % count) + count) % count;
  };
  for (int i = 1; i <= rings; ++i) {
    for (int k = 0; k < sides; ++k) {
      for (int j = 0; j < i; ++j) {
        // "up" triangle between ring i-1 and i
        int a = ring_id(i, k * i + j);
        int b = ring_id(i, k * i + j + 1);
        int c = ring_id(i - 1, k * (i - 1) + j);
        m.triangles.push_back({a, b, c});
        // "down" triangle
        if (j < i - 1) {
          int d = ring_id(i - 1, k * (i - 1) + j + 1);
          m.triangles.push_back({b, d, c});
        }
      }
    }
  }
  return finish(std::move(m));
}

}  // namespace

std::string domain_name(Domain d) {
  switch (d) {
    case Domain::square: return "square";
    case Domain::lshape: return "lshape";
    case Domain::disk_polygon: return "disk_polygon";
  }
  return "?";
}

Domain domain_from_name(const std::string& s) {
  if (s == "square") return Domain::square;
  if (s == "lshape") return Domain::lshape;
  if (s == "disk_polygon" || s == "disk") return Domain::disk_polygon;
  throw BadParameter("unknown domain: " + s);
}

Mesh generate(Domain domain, double h, int sides) {
  if (!(h > 0.0)) throw BadParameter("generate: h must be positive");
  switch (domain) {
    case Domain::square: return generate_square(h);
    case Domain::lshape: return generate_lshape(h);
    case Domain::disk_polygon:
      if (sides < 6) throw BadParameter("generate: disk_polygon needs sides >= 6");
      return generate_disk(h, sides);
  }
  throw BadParameter("generate: unknown domain");
}

void compute_edge_normals(Mesh& m) {
  m.edge_normals.resize(m.boundary_edges.size());
  for (size_t e = 0; e < m.boundary_edges.size(); ++e) {
    const auto& a = m.vertices[m.boundary_edges[e][0]];
    const auto& b = m.vertices[m.boundary_edges[e][1]];
    double dx = b[0] - a[0], dy = b[1] - a[1];
    double len = std::hypot(dx, dy);
    // domain on the left of a->b, so the outward normal points right
    m.edge_normals[e] = {dy / len, -dx / len};
  }
}

Mesh refine(const Mesh& m) {
  Mesh r;
  r.vertices = m.vertices;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    auto key = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    int id = r.n_vertices();
    r.vertices.push_back({0.5 * (m.vertices[a][0] + m.vertices[b][0]),
                          0.5 * (m.vertices[a][1] + m.vertices[b][1])});
    midpoint[key] = id;
    return id;
  };
  for (const auto& t : m.triangles) {
    int a = t[0], b = t[1], c = t[2];
    int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    r.triangles.push_back({a, ab, ca});
    r.triangles.push_back({ab, b, bc});
    r.triangles.push_back({ca, bc, c});
    r.triangles.push_back({ab, bc, ca});
  }
  for (const auto& e : m.boundary_edges) {
    int ab = mid(e[0], e[1]);
    r.boundary_edges.push_back({e[0], ab});
    r.boundary_edges.push_back({ab, e[1]});
  }
  compute_edge_normals(r);
  return r;
}

ValidationReport validate(const Mesh& m) {
  ValidationReport rep;
  auto fail = [&](const std::string& s) { rep.violations.push_back(s); };

  for (int t = 0; t < m.n_triangles(); ++t) {
    for (int v : m.triangles[t])
      if (v < 0 || v >= m.n_vertices()) {
        fail("triangle " + std::to_string(t) + ": vertex index out of range");
        return rep;
      }
    if (signed_area(m, m.triangles[t]) <= 0.0)
      fail("triangle " + std::to_string(t) + ": non-positive signed area");
  }

  // ownership: each boundary edge belongs to exactly one triangle, and every
  // single-owner edge is listed as boundary
  std::map<std::pair<int, int>, int> owners;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      owners[{std::min(a, b), std::max(a, b)}]++;
    }
  std::set<std::pair<int, int>> listed;
  for (const auto& e : m.boundary_edges) {
    auto key = std::make_pair(std::min(e[0], e[1]), std::max(e[0], e[1]));
    if (!listed.insert(key).second)
      fail("boundary edge duplicated: " + std::to_string(e[0]) + "-" + std::to_string(e[1]));
    auto it = owners.find(key);
    if (it == owners.end() || it->second != 1)
      fail("boundary edge " + std::to_string(e[0]) + "-" + std::to_string(e[1]) +
           ": not owned by exactly one triangle");
  }
  int single_owner = 0;
  for (const auto& [k, cnt] : owners) {
    if (cnt == 1) ++single_owner;
    if (cnt > 2) fail("edge shared by more than two triangles");
  }
  if (single_owner != m.n_boundary_edges())
    fail("boundary edge list incomplete: " + std::to_string(single_owner) +
         " single-owner edges vs " + std::to_string(m.n_boundary_edges()) + " listed");

  // orientation: the directed edge must appear in its owning triangle's CCW
  // cycle (domain on the left)
  std::set<std::pair<int, int>> directed;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) directed.insert({t[e], t[(e + 1) % 3]});
  for (const auto& e : m.boundary_edges)
    if (!directed.count({e[0], e[1]}))
      fail("boundary edge " + std::to_string(e[0]) + "-" + std::to_string(e[1]) +
           ": reversed orientation (domain not on the left)");

  // normals: centroid test and closed-boundary sum
  if (m.edge_normals.size() == m.boundary_edges.size()) {
    std::map<std::pair<int, int>, int> tri_of_edge;
    for (int t = 0; t < m.n_triangles(); ++t)
      for (int e = 0; e < 3; ++e) {
        int a = m.triangles[t][e], b = m.triangles[t][(e + 1) % 3];
        auto key = std::make_pair(std::min(a, b), std::max(a, b));
        if (owners[key] == 1) tri_of_edge[key] = t;
      }
    double sx = 0, sy = 0;
    for (size_t e = 0; e < m.boundary_edges.size(); ++e) {
      const auto& be = m.boundary_edges[e];
      auto key = std::make_pair(std::min(be[0], be[1]), std::max(be[0], be[1]));
      auto it = tri_of_edge.find(key);
      if (it == tri_of_edge.end()) continue;
      const auto& t = m.triangles[it->second];
      double cx = (m.vertices[t[0]][0] + m.vertices[t[1]][0] + m.vertices[t[2]][0]) / 3.0;
      double cy = (m.vertices[t[0]][1] + m.vertices[t[1]][1] + m.vertices[t[2]][1]) / 3.0;
      double mx = 0.5 * (m.vertices[be[0]][0] + m.vertices[be[1]][0]);
      double my = 0.5 * (m.vertices[be[0]][1] + m.vertices[be[1]][1]);
      if (m.edge_normals[e][0] * (mx - cx) + m.edge_normals[e][1] * (my - cy) <= 0.0)
        fail("boundary edge " + std::to_string(be[0]) + "-" + std::to_string(be[1]) +
             ": normal fails the centroid test");
      double len = std::hypot(m.vertices[be[1]][0] - m.vertices[be[0]][0],
                              m.vertices[be[1]][1] - m.vertices[be[0]][1]);
      sx += len * m.edge_normals[e][0];
      sy += len * m.edge_normals[e][1];
    }
    if (std::hypot(sx, sy) > 1e-12 * std::max(1.0, boundary_measure(m)))
      fail("boundary not closed: sum of length-weighted normals is nonzero");
  } else {
    fail("edge normals not computed");
  }
  return rep;
}

double boundary_measure(const Mesh& m) {
  double s = 0;
  for (const auto& e : m.boundary_edges)
    s += std::hypot(m.vertices[e[1]][0] - m.vertices[e[0]][0],
                    m.vertices[e[1]][1] - m.vertices[e[0]][1]);
  return s;
}

double area(const Mesh& m) {
  double s = 0;
  for (const auto& t : m.triangles) s += signed_area(m, t);
  return s;
}

double triangle_area(const Mesh& m, int t) { return signed_area(m, m.triangles[t]); }

double max_edge_length(const Mesh& m) {
  double s = 0;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      s = std::max(s, std::hypot(m.vertices[b][0] - m.vertices[a][0],
                                 m.vertices[b][1] - m.vertices[a][1]));
    }
  return s;
}

std::string to_json(const Mesh& m) {
  io::JsonWriter w;
  w.begin_object();
  w.key("vertices").begin_array();
  for (const auto& v : m.vertices) {
    w.begin_array();
    w.value(v[0]).value(v[1]);
    w.end_array();
  }
  w.end_array();
  w.key("triangles").begin_array();
  for (const auto& t : m.triangles) {
    w.begin_array();
    w.value(t[0]).value(t[1]).value(t[2]);
    w.end_array();
  }
  w.end_array();
  w.key("boundary_edges").begin_array();
  for (const auto& e : m.boundary_edges) {
    w.begin_array();
    w.value(e[0]).value(e[1]);
    w.end_array();
  }
  w.end_array();
  w.end_object();
  return w.str() + "\n";
}

Mesh from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("mesh JSON: ") + e.what());
  }
  auto need = [&](const char* k) {
    if (!j.contains(k)) throw ParseError(std::string("mesh JSON: missing \"") + k + "\" key");
    if (!j[k].is_array()) throw ParseError(std::string("mesh JSON: \"") + k + "\" must be an array");
    return j[k];
  };
  Mesh m;
  for (const auto& v : need("vertices")) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ParseError("mesh JSON: vertex must be [x, y]");
    m.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  auto read_index = [](const nlohmann::json& x, const char* what) {
    if (!x.is_number_integer())
      throw ParseError(std::string("mesh JSON: non-integer index in ") + what);
    return x.get<int>();
  };
  for (const auto& t : need("triangles")) {
    if (!t.is_array() || t.size() != 3) throw ParseError("mesh JSON: triangle must be [i, j, k]");
    m.triangles.push_back({read_index(t[0], "triangles"), read_index(t[1], "triangles"),
                           read_index(t[2], "triangles")});
  }
  for (const auto& e : need("boundary_edges")) {
    if (!e.is_array() || e.size() != 2) throw ParseError("mesh JSON: boundary edge must be [i, j]");
    m.boundary_edges.push_back({read_index(e[0], "boundary_edges"), read_index(e[1], "boundary_edges")});
  }
  for (const auto& t : m.triangles)
    for (int v : t)
      if (v < 0 || v >= m.n_vertices()) throw ParseError("mesh JSON: triangle index out of range");
  for (const auto& e : m.boundary_edges)
    for (int v : e)
      if (v < 0 || v >= m.n_vertices()) throw ParseError("mesh JSON: boundary edge index out of range");
  compute_edge_normals(m);
  return m;
}

void save(const Mesh& m, const std::string& path) { io::write_file(path, to_json(m)); }

Mesh load(const std::string& path) { return from_json(io::read_file(path)); }

}  // namespace friedlab::mesh
