#include "nsdg/mesh.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace nsdg;

namespace {

int euler(const Mesh& m) { return m.num_vertices() - m.num_facets() + m.num_elements(); }

void expect_normals_outward_from_plus(const Mesh& m) {
  for (const Facet& F : m.facets()) {
    const Vec2 n = m.outward_normal(F.plus, F.plus_local);
    EXPECT_NEAR((n - F.normal).norm(), 0.0, 1e-12);
    if (!F.boundary()) {
      const Vec2 nm = m.outward_normal(F.minus, F.minus_local);
      EXPECT_NEAR((nm + F.normal).norm(), 0.0, 1e-12);
    }
  }
}

}  // namespace

TEST(Mesh, SingleSquareRight) {
  const Mesh m = build_unit_square_mesh(1, Diagonal::right);
  EXPECT_EQ(m.num_elements(), 2);
  EXPECT_EQ(m.num_facets(), 5);
  EXPECT_EQ(m.num_boundary_facets(), 4);
  EXPECT_EQ(m.num_interior_facets(), 1);
}

TEST(Mesh, TwoByTwoRightCountsAndEuler) {
  const Mesh m = build_unit_square_mesh(2, Diagonal::right);
  EXPECT_EQ(m.num_elements(), 8);
  EXPECT_EQ(m.num_facets(), 16);
  EXPECT_EQ(m.num_vertices(), 9);
  EXPECT_EQ(euler(m), 1);
}

TEST(Mesh, TwoByTwoCrisscrossCounts) {
  // 12 grid edges + 16 diagonal half-edges; V - E + T = 13 - 28 + 16 = 1.
  const Mesh m = build_unit_square_mesh(2, Diagonal::crisscross);
  EXPECT_EQ(m.num_elements(), 16);
  EXPECT_EQ(m.num_vertices(), 13);
  EXPECT_EQ(m.num_facets(), 28);
  EXPECT_EQ(euler(m), 1);
}

class MeshFamilies : public ::testing::TestWithParam<std::tuple<int, Diagonal>> {};

TEST_P(MeshFamilies, Invariants) {
  const auto [n, diag] = GetParam();
  const Mesh m = build_unit_square_mesh(n, diag);
  EXPECT_EQ(m.num_elements(), (diag == Diagonal::crisscross ? 4 : 2) * n * n);
  EXPECT_EQ(euler(m), 1);
  EXPECT_NEAR(m.total_area(), 1.0, 1e-12);
  for (int k = 0; k < m.num_elements(); ++k) EXPECT_GT(m.area(k), 0.0);
  EXPECT_EQ(m.num_boundary_facets(), 4 * n);
  expect_normals_outward_from_plus(m);
  const Mesh fine = build_unit_square_mesh(2 * n, diag);
  EXPECT_NEAR(fine.mesh_size(), 0.5 * m.mesh_size(), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(All, MeshFamilies,
                         ::testing::Combine(::testing::Values(1, 2, 3, 5),
                                            ::testing::Values(Diagonal::right, Diagonal::left,
                                                              Diagonal::crisscross)));

TEST(Mesh, ReadSingleTriangle) {
  const Mesh m = read_mesh("mesh2d 3 1 3\n0 0\n1 0\n0 1\n0 1 2\n0 1 1\n1 2 2\n2 0 3\n");
  EXPECT_EQ(m.num_elements(), 1);
  EXPECT_EQ(m.num_facets(), 3);
  EXPECT_EQ(m.num_boundary_facets(), 3);
  std::multiset<int> tags;
  for (const Facet& F : m.facets()) tags.insert(F.tag);
  EXPECT_EQ(tags, (std::multiset<int>{1, 2, 3}));
}

TEST(Mesh, ReadAcceptsComments) {
  const Mesh m = read_mesh("# tri\nmesh2d 3 1 0 # header\n0 0\n1 0\n\n0 1\n0 1 2\n");
  EXPECT_EQ(m.num_elements(), 1);
}

TEST(Mesh, ReadRejectsClockwise) {
  EXPECT_THROW(read_mesh("mesh2d 3 1 0\n0 0\n1 0\n0 1\n0 2 1\n"), MeshTopologyError);
}

TEST(Mesh, ReadRejectsDegenerate) {
  EXPECT_THROW(read_mesh("mesh2d 3 1 0\n0 0\n1 0\n2 0\n0 1 2\n"), MeshTopologyError);
}

TEST(Mesh, ReadRejectsIndexOutOfRange) {
  try {
    read_mesh("mesh2d 3 1 0\n0 0\n1 0\n0 1\n0 1 3\n");
    FAIL() << "expected parse error";
  } catch (const MeshParseError& e) {
    EXPECT_EQ(e.line(), 5);
  }
}

TEST(Mesh, ReadRejectsMalformedHeaderAndTruncation) {
  EXPECT_THROW(read_mesh("mesh3d 3 1 0\n"), MeshParseError);
  EXPECT_THROW(read_mesh("mesh2d 3 1 0\n0 0\n1 0\n"), MeshParseError);
  EXPECT_THROW(read_mesh("mesh2d 3 1 0\n0 0\n1 0\n0 1\n0 1 2\n7 7\n"), MeshParseError);
}

TEST(Mesh, ReadRejectsUnknownBoundaryFacet) {
  const std::string two = "mesh2d 4 2 1\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n";
  EXPECT_THROW(read_mesh(two + "0 2 5\n"), MeshTopologyError);  // interior edge
}

TEST(Mesh, PeriodicBothAxes) {
  const Mesh m = build_unit_square_mesh(2, Diagonal::right);
  const Mesh p = apply_periodicity(m, true, true);
  EXPECT_EQ(p.num_boundary_facets(), 0);
  EXPECT_EQ(p.num_facets(), m.num_facets() - 4);
  int periodic = 0;
  for (const Facet& F : p.facets()) {
    if (!F.periodic) continue;
    ++periodic;
    const Vec2 a = p.vertices()[F.vertices[0]], b = p.vertices()[F.vertices[1]];
    // canonical facet lies on the min-coordinate side
    EXPECT_TRUE(std::abs(a.x()) < 1e-12 && std::abs(b.x()) < 1e-12 ||
                std::abs(a.y()) < 1e-12 && std::abs(b.y()) < 1e-12);
    EXPECT_NEAR(F.offset.norm(), 1.0, 1e-12);
  }
  EXPECT_EQ(periodic, 4);
  expect_normals_outward_from_plus(p);
  EXPECT_TRUE(p.is_periodic());
}

TEST(Mesh, PeriodicNoAxesIsIdentity) {
  const Mesh m = build_unit_square_mesh(3, Diagonal::left);
  const Mesh p = apply_periodicity(m, false, false);
  EXPECT_EQ(p.num_facets(), m.num_facets());
  EXPECT_EQ(p.num_boundary_facets(), m.num_boundary_facets());
  EXPECT_FALSE(p.is_periodic());
}

TEST(Mesh, PeriodicUnmatchedFacetsReported) {
  Mesh m = build_unit_square_mesh(2, Diagonal::right);
  std::vector<Vec2> v = m.vertices();
  for (Vec2& x : v)
    if (x.x() > 0.99 && x.y() > 0.2 && x.y() < 0.8) x.x() += 0.05;
  const Mesh stretched(v, m.triangles());
  EXPECT_THROW(apply_periodicity(stretched, true, false), MeshTopologyError);
}

TEST(Mesh, LocateFindsContainingElement) {
  const Mesh m = build_unit_square_mesh(4, Diagonal::crisscross);
  for (int k = 0; k < m.num_elements(); ++k) {
    const Vec2 c = m.map(k).to_physical(Vec2(1.0 / 3.0, 1.0 / 3.0));
    EXPECT_EQ(m.locate(c), k);
  }
  EXPECT_LT(m.locate(Vec2(1.5, 0.5)), 0);
}
