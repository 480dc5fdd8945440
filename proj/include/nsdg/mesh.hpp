#pragma once

#include <Eigen/Core>

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nsdg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Thrown for malformed mesh documents; carries the 1-based line number.
class MeshParseError : public std::runtime_error {
public:
  MeshParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

/// Thrown when the triangulation violates an invariant (orientation, conformity, periodic matching).
class MeshTopologyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Diagonal { right, left, crisscross };

struct Facet {
  std::array<int, 2> vertices{};  // global direction: vertices[0] < vertices[1]
  int plus = -1;                  // K+
  int plus_local = -1;            // local facet index of F in K+
  int minus = -1;                 // K-, -1 on boundary facets
  int minus_local = -1;
  Vec2 normal = Vec2::Zero();     // unit, outward for K+
  double length = 0.0;            // h_F
  int tag = 0;                    // boundary label, 0 on interior facets
  bool periodic = false;
  Vec2 offset = Vec2::Zero();     // x on F seen from K+ corresponds to x + offset in K-

  bool boundary() const { return minus < 0; }
};

/// Affine map x = B xhat + b of a triangle from the reference triangle (0,0),(1,0),(0,1).
struct AffineMap {
  Mat2 jacobian;
  Mat2 inverse;
  Vec2 origin;
  double det = 0.0;

  Vec2 to_physical(const Vec2& ref) const { return jacobian * ref + origin; }
  Vec2 to_reference(const Vec2& x) const { return inverse * (x - origin); }
};

/// 2D conforming triangulation with oriented facet topology.
///
/// Local facet i of a triangle is opposite local vertex i and is traversed
/// counter-clockwise: facet 0 = (v1,v2), facet 1 = (v2,v0), facet 2 = (v0,v1).
/// Periodic partner facets are merged into one canonical interior facet whose
/// geometry is the K+ copy; the K- trace lives at x + offset.
class Mesh {
public:
  Mesh() = default;
  /// Builds facet topology; throws MeshTopologyError on inverted, degenerate or non-conforming input.
  /// `boundary_tags` maps vertex pairs (any order) to labels; unlisted boundary facets get tag 1.
  Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
       const std::vector<std::array<int, 3>>& boundary_tags = {});

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<Facet>& facets() const { return facets_; }
  const std::array<int, 3>& element_facets(int k) const { return element_facets_[k]; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_elements() const { return static_cast<int>(triangles_.size()); }
  int num_facets() const { return static_cast<int>(facets_.size()); }
  int num_boundary_facets() const;
  int num_interior_facets() const { return num_facets() - num_boundary_facets(); }

  const AffineMap& map(int k) const { return maps_[k]; }
  double area(int k) const { return 0.5 * maps_[k].det; }
  double diameter(int k) const;
  /// h = max_K h_K.
  double mesh_size() const;
  double total_area() const;

  /// Bounding box (min corner, max corner).
  std::pair<Vec2, Vec2> bounds() const;
  /// Axis periods applied by apply_periodicity, zero where not periodic.
  const Vec2& period() const { return period_; }
  bool is_periodic() const { return period_.x() > 0.0 || period_.y() > 0.0; }

  /// Local vertex indices (a,b) of local facet i, in counter-clockwise traversal order.
  static std::array<int, 2> local_facet_vertices(int i) {
    return {(i + 1) % 3, (i + 2) % 3};
  }

  /// Outward unit normal of element k on its local facet i.
  Vec2 outward_normal(int k, int i) const;

  /// Element containing x (closed triangles, tolerance relative to element size); -1 if none.
  int locate(const Vec2& x) const;

  /// One element per vertex (lowest index containing it).
  const std::vector<int>& vertex_element() const { return vertex_element_; }

private:
  friend Mesh apply_periodicity(const Mesh&, bool, bool, double);
  void build_maps();

  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Facet> facets_;
  std::vector<std::array<int, 3>> element_facets_;
  std::vector<AffineMap> maps_;
  std::vector<int> vertex_element_;
  Vec2 period_ = Vec2::Zero();
};

/// Structured triangulation of (0,1)^2 with n cells per side.
Mesh build_unit_square_mesh(int n, Diagonal diagonal = Diagonal::right);

/// Parses the ASCII `mesh2d` document format.
Mesh read_mesh(std::string_view text);
Mesh read_mesh_file(const std::string& path);

/// Identifies boundary facets on opposite sides of the bounding box along the
/// requested axes. tol < 0 selects the default 1e-9 * diameter.
Mesh apply_periodicity(const Mesh& mesh, bool x_axis, bool y_axis, double tol = -1.0);

Diagonal parse_diagonal(std::string_view name);

}  // namespace nsdg
