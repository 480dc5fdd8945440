#include "nsdg/mesh.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace nsdg {

namespace {

std::pair<int, int> ordered(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

std::string facet_name(const std::vector<Vec2>& v, int a, int b) {
  std::ostringstream os;
  os << "facet (" << a << "," << b << ") from (" << v[a].x() << "," << v[a].y() << ") to ("
     << v[b].x() << "," << v[b].y() << ")";
  return os.str();
}

}  // namespace

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
           const std::vector<std::array<int, 3>>& boundary_tags)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int nv = num_vertices();
  for (std::size_t k = 0; k < triangles_.size(); ++k)
    for (int v : triangles_[k])
      if (v < 0 || v >= nv)
        throw MeshTopologyError("triangle " + std::to_string(k) + " references vertex " +
                                std::to_string(v) + " outside [0," + std::to_string(nv) + ")");
  build_maps();

  std::map<std::pair<int, int>, int> index;
  element_facets_.assign(triangles_.size(), {-1, -1, -1});
  for (int k = 0; k < num_elements(); ++k) {
    const auto& t = triangles_[k];
    for (int i = 0; i < 3; ++i) {
      const auto [la, lb] = local_facet_vertices(i);
      const int a = t[la], b = t[lb];
      const auto key = ordered(a, b);
      auto it = index.find(key);
      if (it == index.end()) {
        Facet f;
        f.vertices = {key.first, key.second};
        f.plus = k;
        f.plus_local = i;
        const Vec2 d = vertices_[b] - vertices_[a];
        f.length = d.norm();
        f.normal = Vec2(d.y(), -d.x()) / f.length;
        f.tag = 1;
        index.emplace(key, num_facets());
        element_facets_[k][i] = num_facets();
        facets_.push_back(f);
      } else {
        Facet& f = facets_[it->second];
        if (f.minus >= 0)
          throw MeshTopologyError(facet_name(vertices_, a, b) + " is shared by more than two triangles");
        const auto [pa, pb] = local_facet_vertices(f.plus_local);
        if (triangles_[f.plus][pa] == a && triangles_[f.plus][pb] == b)
          throw MeshTopologyError(facet_name(vertices_, a, b) +
                                  " traversed in the same direction by two triangles");
        f.minus = k;
        f.minus_local = i;
        f.tag = 0;
        element_facets_[k][i] = it->second;
      }
    }
  }
  for (const auto& [a, b, tag] : boundary_tags) {
    auto it = index.find(ordered(a, b));
    if (it == index.end() || !facets_[it->second].boundary())
      throw MeshTopologyError(facet_name(vertices_, a, b) + " tagged " + std::to_string(tag) +
                              " is not a boundary facet");
    facets_[it->second].tag = tag;
  }
}

void Mesh::build_maps() {
  maps_.clear();
  maps_.reserve(triangles_.size());
  for (std::size_t k = 0; k < triangles_.size(); ++k) {
    const auto& t = triangles_[k];
    AffineMap m;
    m.origin = vertices_[t[0]];
    m.jacobian.col(0) = vertices_[t[1]] - m.origin;
    m.jacobian.col(1) = vertices_[t[2]] - m.origin;
    m.det = m.jacobian.determinant();
    const double scale = std::max(m.jacobian.col(0).squaredNorm(), m.jacobian.col(1).squaredNorm());
    if (!(m.det > 1e-14 * scale)) {
      std::ostringstream os;
      os << "triangle " << k << " (" << t[0] << "," << t[1] << "," << t[2] << ") is "
         << (m.det < -1e-14 * scale ? "clockwise (inverted)" : "degenerate");
      throw MeshTopologyError(os.str());
    }
    m.inverse = m.jacobian.inverse();
    maps_.push_back(m);
  }
  vertex_element_.assign(vertices_.size(), -1);
  for (int k = num_elements() - 1; k >= 0; --k)
    for (int v : triangles_[k]) vertex_element_[v] = k;
}

int Mesh::num_boundary_facets() const {
  return static_cast<int>(std::count_if(facets_.begin(), facets_.end(),
                                        [](const Facet& f) { return f.boundary(); }));
}

double Mesh::diameter(int k) const {
  const auto& t = triangles_[k];
  double h = 0.0;
  for (int i = 0; i < 3; ++i) h = std::max(h, (vertices_[t[i]] - vertices_[t[(i + 1) % 3]]).norm());
  return h;
}

double Mesh::mesh_size() const {
  double h = 0.0;
  for (int k = 0; k < num_elements(); ++k) h = std::max(h, diameter(k));
  return h;
}

double Mesh::total_area() const {
  double a = 0.0;
  for (int k = 0; k < num_elements(); ++k) a += area(k);
  return a;
}

std::pair<Vec2, Vec2> Mesh::bounds() const {
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return {lo, hi};
}

Vec2 Mesh::outward_normal(int k, int i) const {
  const auto [la, lb] = local_facet_vertices(i);
  const Vec2 d = vertices_[triangles_[k][lb]] - vertices_[triangles_[k][la]];
  return Vec2(d.y(), -d.x()).normalized();
}

int Mesh::locate(const Vec2& x) const {
  for (int k = 0; k < num_elements(); ++k) {
    const Vec2 r = maps_[k].to_reference(x);
    const double eps = 1e-12;
    if (r.x() >= -eps && r.y() >= -eps && r.x() + r.y() <= 1.0 + eps) return k;
  }
  return -1;
}

Mesh build_unit_square_mesh(int n, Diagonal diagonal) {
  if (n < 1) throw std::invalid_argument("build_unit_square_mesh: n must be >= 1");
  std::vector<Vec2> v;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      v.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  std::vector<std::array<int, 3>> t;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      switch (diagonal) {
        case Diagonal::right:
          t.push_back({v00, v10, v11});
          t.push_back({v00, v11, v01});
          break;
        case Diagonal::left:
          t.push_back({v00, v10, v01});
          t.push_back({v10, v11, v01});
          break;
        case Diagonal::crisscross: {
          const int c = static_cast<int>(v.size());
          v.emplace_back((i + 0.5) / n, (j + 0.5) / n);
          t.push_back({v00, v10, c});
          t.push_back({v10, v11, c});
          t.push_back({v11, v01, c});
          t.push_back({v01, v00, c});
          break;
        }
      }
    }
  }
  return Mesh(std::move(v), std::move(t));
}

namespace {

struct LineReader {
  std::istringstream in;
  int line_no = 0;

  explicit LineReader(std::string_view text) : in(std::string(text)) {}

  // Next non-empty line (comments stripped) split into tokens; empty at end of input.
  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      std::istringstream ls(line);
      std::vector<std::string> tok;
      for (std::string s; ls >> s;) tok.push_back(s);
      if (!tok.empty()) return tok;
    }
    return {};
  }
};

double parse_double(const std::string& s, int line) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw MeshParseError(line, "expected a number, got '" + s + "'");
  }
  if (pos != s.size()) throw MeshParseError(line, "expected a number, got '" + s + "'");
  return x;
}

long parse_int(const std::string& s, int line) {
  std::size_t pos = 0;
  long x = 0;
  try {
    x = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw MeshParseError(line, "expected an integer, got '" + s + "'");
  }
  if (pos != s.size()) throw MeshParseError(line, "expected an integer, got '" + s + "'");
  return x;
}

}  // namespace

Mesh read_mesh(std::string_view text) {
  LineReader r(text);
  auto head = r.next();
  if (head.empty()) throw MeshParseError(r.line_no, "empty document");
  if (head.size() != 4 || head[0] != "mesh2d")
    throw MeshParseError(r.line_no, "expected header 'mesh2d <nv> <nt> <nbf>'");
  const long nv = parse_int(head[1], r.line_no);
  const long nt = parse_int(head[2], r.line_no);
  const long nbf = parse_int(head[3], r.line_no);
  if (nv < 3 || nt < 1 || nbf < 0) throw MeshParseError(r.line_no, "invalid counts in header");

  auto expect = [&r](std::size_t count, const char* what) {
    auto tok = r.next();
    if (tok.empty()) throw MeshParseError(r.line_no, std::string("unexpected end of document, expected ") + what);
    if (tok.size() != count)
      throw MeshParseError(r.line_no, std::string("expected ") + std::to_string(count) + " fields for " + what);
    return tok;
  };
  auto vertex_index = [&](const std::string& s) {
    const long i = parse_int(s, r.line_no);
    if (i < 0 || i >= nv)
      throw MeshParseError(r.line_no, "vertex index " + s + " out of range [0," + std::to_string(nv) + ")");
    return static_cast<int>(i);
  };

  std::vector<Vec2> v;
  v.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    auto tok = expect(2, "a vertex");
    v.emplace_back(parse_double(tok[0], r.line_no), parse_double(tok[1], r.line_no));
  }
  std::vector<std::array<int, 3>> t;
  t.reserve(nt);
  for (long i = 0; i < nt; ++i) {
    auto tok = expect(3, "a triangle");
    t.push_back({vertex_index(tok[0]), vertex_index(tok[1]), vertex_index(tok[2])});
  }
  std::vector<std::array<int, 3>> tags;
  for (long i = 0; i < nbf; ++i) {
    auto tok = expect(3, "a boundary facet");
    tags.push_back({vertex_index(tok[0]), vertex_index(tok[1]),
                    static_cast<int>(parse_int(tok[2], r.line_no))});
  }
  if (!r.next().empty()) throw MeshParseError(r.line_no, "trailing data after declared records");
  return Mesh(std::move(v), std::move(t), tags);
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return read_mesh(ss.str());
}

Mesh apply_periodicity(const Mesh& mesh, bool x_axis, bool y_axis, double tol) {
  if (!x_axis && !y_axis) return mesh;
  const auto [lo, hi] = mesh.bounds();
  if (tol < 0.0) tol = 1e-9 * (hi - lo).norm();
  Mesh out = mesh;
  const auto& v = mesh.vertices_;

  std::vector<int> remove;
  std::vector<std::string> unmatched;
  for (int axis = 0; axis < 2; ++axis) {
    if ((axis == 0 && !x_axis) || (axis == 1 && !y_axis)) continue;
    const double period = hi[axis] - lo[axis];
    std::vector<int> low_side, high_side;
    for (int f = 0; f < mesh.num_facets(); ++f) {
      const Facet& F = mesh.facets_[f];
      if (!F.boundary()) continue;
      const Vec2& a = v[F.vertices[0]];
      const Vec2& b = v[F.vertices[1]];
      if (std::abs(a[axis] - lo[axis]) <= tol && std::abs(b[axis] - lo[axis]) <= tol) low_side.push_back(f);
      if (std::abs(a[axis] - hi[axis]) <= tol && std::abs(b[axis] - hi[axis]) <= tol) high_side.push_back(f);
    }
    Vec2 shift = Vec2::Zero();
    shift[axis] = period;
    std::vector<bool> used(high_side.size(), false);
    for (int f : low_side) {
      const Facet& F = mesh.facets_[f];
      const Vec2 a = v[F.vertices[0]] + shift, b = v[F.vertices[1]] + shift;
      int match = -1;
      for (std::size_t j = 0; j < high_side.size() && match < 0; ++j) {
        if (used[j]) continue;
        const Facet& G = mesh.facets_[high_side[j]];
        const Vec2& c = v[G.vertices[0]];
        const Vec2& d = v[G.vertices[1]];
        const bool same = (a - c).norm() <= tol && (b - d).norm() <= tol;
        const bool flipped = (a - d).norm() <= tol && (b - c).norm() <= tol;
        if (same || flipped) match = static_cast<int>(j);
      }
      if (match < 0) {
        unmatched.push_back(facet_name(v, F.vertices[0], F.vertices[1]));
        continue;
      }
      used[match] = true;
      const int g = high_side[match];
      const Facet& G = mesh.facets_[g];
      Facet& C = out.facets_[f];
      C.minus = G.plus;
      C.minus_local = G.plus_local;
      C.periodic = true;
      C.tag = 0;
      C.offset = shift;
      out.element_facets_[G.plus][G.plus_local] = f;
      remove.push_back(g);
    }
    for (std::size_t j = 0; j < high_side.size(); ++j)
      if (!used[j]) {
        const Facet& G = mesh.facets_[high_side[j]];
        unmatched.push_back(facet_name(v, G.vertices[0], G.vertices[1]));
      }
    if (low_side.empty()) unmatched.push_back(std::string("no boundary facets on the ") +
                                              (axis == 0 ? "x" : "y") + " = min side");
    out.period_[axis] = period;
  }
  if (!unmatched.empty()) {
    std::string msg = "unmatched periodic facets:";
    for (const auto& s : unmatched) msg += "\n  " + s;
    throw MeshTopologyError(msg);
  }

  // Compact facet numbering.
  std::sort(remove.begin(), remove.end());
  std::vector<int> renumber(out.facets_.size(), -1);
  std::vector<Facet> kept;
  for (int f = 0, r = 0; f < static_cast<int>(out.facets_.size()); ++f) {
    if (r < static_cast<int>(remove.size()) && remove[r] == f) {
      ++r;
      continue;
    }
    renumber[f] = static_cast<int>(kept.size());
    kept.push_back(out.facets_[f]);
  }
  out.facets_ = std::move(kept);
  for (auto& ef : out.element_facets_)
    for (int& f : ef) f = renumber[f];
  return out;
}

Diagonal parse_diagonal(std::string_view name) {
  if (name == "right") return Diagonal::right;
  if (name == "left") return Diagonal::left;
  if (name == "crisscross") return Diagonal::crisscross;
  throw std::invalid_argument("unknown diagonal pattern '" + std::string(name) +
                              "' (expected right, left or crisscross)");
}

}  // namespace nsdg
