#include "nsdg/basis.hpp"
#include "nsdg/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nsdg;

namespace {

double tri_integral(int degree, const std::function<double(const Vec2&)>& f) {
  const TriangleRule& q = triangle_quadrature(degree);
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * f(q.points[i]);
  return s;
}

// Exact reference-triangle monomial integral: a! b! / (a+b+2)!
double monomial_exact(int a, int b) {
  return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
}

}  // namespace

TEST(Quadrature, DegreeZeroIsMidpoint) {
  const TriangleRule& q = triangle_quadrature(0);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_NEAR(q.weights[0], 0.5, 1e-15);
  EXPECT_NEAR(q.points[0].x(), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(q.points[0].y(), 1.0 / 3.0, 1e-15);
}

TEST(Quadrature, TriangleExamples) {
  for (int d = 1; d <= 6; ++d) EXPECT_NEAR(tri_integral(d, [](const Vec2& x) { return x.x(); }), 1.0 / 6.0, 1e-15);
  for (int d = 3; d <= 8; ++d)
    EXPECT_NEAR(tri_integral(d, [](const Vec2& x) { return x.x() * x.x() * x.y(); }), 1.0 / 60.0, 1e-15);
}

class TriangleExactness : public ::testing::TestWithParam<int> {};

TEST_P(TriangleExactness, AllMonomials) {
  const int d = GetParam();
  const TriangleRule& q = triangle_quadrature(d);
  double wsum = 0.0;
  for (double w : q.weights) {
    EXPECT_GT(w, 0.0);
    wsum += w;
  }
  EXPECT_NEAR(wsum, 0.5, 1e-14);
  for (int a = 0; a <= d; ++a)
    for (int b = 0; a + b <= d; ++b) {
      const double got = tri_integral(d, [&](const Vec2& x) { return std::pow(x.x(), a) * std::pow(x.y(), b); });
      EXPECT_NEAR(got, monomial_exact(a, b), 1e-14) << "x^" << a << " y^" << b;
    }
}

INSTANTIATE_TEST_SUITE_P(Degrees, TriangleExactness, ::testing::Values(0, 1, 2, 3, 4, 7, 10, 16, 25, 40));

TEST(Quadrature, IntervalExamples) {
  const IntervalRule& q1 = interval_quadrature(1);
  ASSERT_EQ(q1.size(), 1u);
  EXPECT_NEAR(q1.points[0], 0.5, 1e-15);
  const IntervalRule& q3 = interval_quadrature(3);
  EXPECT_EQ(q3.size(), 2u);
  double s = 0.0;
  for (std::size_t i = 0; i < q3.size(); ++i) s += q3.weights[i] * std::pow(q3.points[i], 3);
  EXPECT_NEAR(s, 0.25, 1e-15);
  const IntervalRule& q5 = interval_quadrature(5);
  EXPECT_EQ(q5.size(), 3u);
  s = 0.0;
  for (std::size_t i = 0; i < q5.size(); ++i) s += q5.weights[i] * std::pow(q5.points[i], 5);
  EXPECT_NEAR(s, 1.0 / 6.0, 1e-15);
}

TEST(Quadrature, IntervalExactnessAndWeights) {
  for (int d : {0, 2, 9, 20, 41, 60}) {
    const IntervalRule& q = interval_quadrature(d);
    double wsum = 0.0;
    for (double w : q.weights) {
      EXPECT_GT(w, 0.0);
      wsum += w;
    }
    EXPECT_NEAR(wsum, 1.0, 1e-14);
    for (int a = 0; a <= d; ++a) {
      double s = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * std::pow(q.points[i], a);
      EXPECT_NEAR(s, 1.0 / (a + 1), 1e-14);
    }
  }
}

TEST(Quadrature, RejectsUnsupportedDegrees) {
  EXPECT_THROW(triangle_quadrature(-1), std::invalid_argument);
  try {
    triangle_quadrature(kMaxQuadratureDegree + 1);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find(std::to_string(kMaxQuadratureDegree)), std::string::npos);
  }
  EXPECT_NO_THROW(triangle_quadrature(kMaxQuadratureDegree));
}

TEST(Basis, Counts) {
  for (int k = 0; k <= 6; ++k) {
    EXPECT_EQ(scalar_basis(k).count(), (k + 1) * (k + 2) / 2);
    EXPECT_EQ(vector_basis(k).count(), (k + 1) * (k + 2));
    if (k >= 1) {
      EXPECT_EQ(bdm_basis(k).count(), (k + 1) * (k + 2));
      EXPECT_EQ(bdm_basis(k).facet_dofs(), k + 1);
      EXPECT_EQ(bdm_basis(k).interior_dofs(), (k - 1) * (k + 1));
    }
  }
  EXPECT_THROW(bdm_basis(0), std::invalid_argument);
  EXPECT_THROW(scalar_basis(-1), std::invalid_argument);
  EXPECT_THROW(scalar_basis(kMaxBasisDegree + 1), std::invalid_argument);
}

TEST(Basis, ScalarDegreeZeroIsSqrtTwo) {
  std::vector<ScalarShape> s(1);
  for (const Vec2& x : {Vec2(0.1, 0.2), Vec2(0.7, 0.1), Vec2(0.0, 1.0)}) {
    scalar_basis(0).evaluate(x, s);
    EXPECT_NEAR(s[0].value, std::sqrt(2.0), 1e-14);
  }
}

class BasisDegree : public ::testing::TestWithParam<int> {};
class BdmDegree : public ::testing::TestWithParam<int> {};

TEST_P(BasisDegree, ScalarOrthonormal) {
  const int k = GetParam();
  const ReferenceBasis& b = scalar_basis(k);
  const TriangleRule& q = triangle_quadrature(2 * k);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(b.count(), b.count());
  std::vector<ScalarShape> s(b.count());
  for (std::size_t i = 0; i < q.size(); ++i) {
    b.evaluate(q.points[i], s);
    for (int a = 0; a < b.count(); ++a)
      for (int c = 0; c < b.count(); ++c) G(a, c) += q.weights[i] * s[a].value * s[c].value;
  }
  EXPECT_NEAR((G - Eigen::MatrixXd::Identity(b.count(), b.count())).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST_P(BasisDegree, ScalarDerivativesMatchFiniteDifferences) {
  const int k = GetParam();
  const ReferenceBasis& b = scalar_basis(k);
  std::vector<ScalarShape> s0(b.count()), sx(b.count()), sy(b.count());
  const Vec2 x(0.23, 0.31);
  const double h = 1e-6;
  b.evaluate(x, s0, true);
  for (int dir = 0; dir < 2; ++dir) {
    const Vec2 e = dir == 0 ? Vec2(h, 0) : Vec2(0, h);
    b.evaluate(x + e, sx, true);
    b.evaluate(x - e, sy, true);
    for (int i = 0; i < b.count(); ++i) {
      const double scale = 1.0 + s0[i].grad.norm();
      EXPECT_NEAR((sx[i].value - sy[i].value) / (2 * h), s0[i].grad[dir], 1e-6 * scale);
      const Vec2 dg = (sx[i].grad - sy[i].grad) / (2 * h);
      EXPECT_NEAR((dg - s0[i].hess.col(dir)).norm(), 0.0, 1e-5 * (1.0 + s0[i].hess.norm()));
    }
  }
}

TEST_P(BdmDegree, BdmDualToMomentFunctionals) {
  const int k = GetParam();
  const ReferenceBasis& b = bdm_basis(k);
  const int n = b.count(), nf = b.facet_dofs();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);  // D(functional, function)
  std::vector<VectorShape> v(n);
  const IntervalRule& qi = interval_quadrature(2 * k + 2);
  for (int f = 0; f < 3; ++f) {
    const Vec2 nrm = reference_facet_normal(f);
    const double len = reference_facet_length(f);
    for (std::size_t i = 0; i < qi.size(); ++i) {
      b.evaluate(reference_facet_point(f, qi.points[i]), v);
      for (int j = 0; j < nf; ++j)
        for (int c = 0; c < n; ++c)
          D(f * nf + j, c) += qi.weights[i] * len * v[c].value.dot(nrm) * facet_moment_weight(j, qi.points[i]);
    }
  }
  const TriangleRule& qt = triangle_quadrature(2 * k);
  std::vector<Vec2> m(b.interior_dofs());
  for (std::size_t i = 0; i < qt.size(); ++i) {
    b.evaluate(qt.points[i], v);
    b.interior_moment_functions(qt.points[i], m);
    for (int j = 0; j < b.interior_dofs(); ++j)
      for (int c = 0; c < n; ++c) D(3 * nf + j, c) += qt.weights[i] * v[c].value.dot(m[j]);
  }
  EXPECT_NEAR((D - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 0.0, 1e-10);
}

TEST_P(BdmDegree, BdmDivergenceTheorem) {
  const int k = GetParam();
  const ReferenceBasis& b = bdm_basis(k);
  const int n = b.count();
  std::vector<double> vol(n, 0.0), bnd(n, 0.0);
  std::vector<VectorShape> v(n);
  const TriangleRule& qt = triangle_quadrature(k);
  for (std::size_t i = 0; i < qt.size(); ++i) {
    b.evaluate(qt.points[i], v);
    for (int c = 0; c < n; ++c) vol[c] += qt.weights[i] * v[c].div;
  }
  const IntervalRule& qi = interval_quadrature(k);
  for (int f = 0; f < 3; ++f)
    for (std::size_t i = 0; i < qi.size(); ++i) {
      b.evaluate(reference_facet_point(f, qi.points[i]), v);
      for (int c = 0; c < n; ++c)
        bnd[c] += qi.weights[i] * reference_facet_length(f) * v[c].value.dot(reference_facet_normal(f));
    }
  for (int c = 0; c < n; ++c) EXPECT_NEAR(vol[c], bnd[c], 1e-12);
}

TEST_P(BdmDegree, BdmDivergenceLiesInLowerDegree) {
  const int k = GetParam();
  const ReferenceBasis& b = bdm_basis(k);
  const ReferenceBasis& p = scalar_basis(k - 1);
  const int n = b.count();
  const TriangleRule& q = triangle_quadrature(2 * k);
  std::vector<VectorShape> v(n);
  std::vector<ScalarShape> s(p.count());
  Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(p.count(), n);
  for (std::size_t i = 0; i < q.size(); ++i) {
    b.evaluate(q.points[i], v);
    p.evaluate(q.points[i], s);
    for (int a = 0; a < p.count(); ++a)
      for (int c = 0; c < n; ++c) proj(a, c) += q.weights[i] * s[a].value * v[c].div;
  }
  for (const Vec2& x : {Vec2(0.1, 0.1), Vec2(0.6, 0.3), Vec2(0.2, 0.7)}) {
    b.evaluate(x, v);
    p.evaluate(x, s);
    for (int c = 0; c < n; ++c) {
      double r = v[c].div;
      for (int a = 0; a < p.count(); ++a) r -= proj(a, c) * s[a].value;
      EXPECT_NEAR(r, 0.0, 1e-12 * (1.0 + std::abs(v[c].div)));
    }
  }
}

TEST_P(BasisDegree, VectorGradientAndDivergenceConsistent) {
  const int k = GetParam();
  for (const ReferenceBasis* b : {&vector_basis(k), k >= 1 ? &bdm_basis(k) : &vector_basis(k)}) {
    std::vector<VectorShape> v0(b->count()), vp(b->count()), vm(b->count());
    const Vec2 x(0.27, 0.41);
    const double h = 1e-6;
    b->evaluate(x, v0, true);
    for (int c = 0; c < b->count(); ++c) EXPECT_NEAR(v0[c].div, v0[c].grad.trace(), 1e-12);
    for (int dir = 0; dir < 2; ++dir) {
      const Vec2 e = dir == 0 ? Vec2(h, 0) : Vec2(0, h);
      b->evaluate(x + e, vp, true);
      b->evaluate(x - e, vm, true);
      for (int c = 0; c < b->count(); ++c) {
        const Vec2 d = (vp[c].value - vm[c].value) / (2 * h);
        EXPECT_NEAR((d - v0[c].grad.col(dir)).norm(), 0.0, 1e-6 * (1.0 + v0[c].grad.norm()));
        for (int comp = 0; comp < 2; ++comp) {
          const Vec2 dg = (vp[c].grad.row(comp) - vm[c].grad.row(comp)).transpose() / (2 * h);
          EXPECT_NEAR((dg - v0[c].hess[comp].col(dir)).norm(), 0.0, 1e-5 * (1.0 + v0[c].hess[comp].norm()));
        }
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Degrees, BasisDegree, ::testing::Values(0, 1, 2, 3, 4, 6, 8));
INSTANTIATE_TEST_SUITE_P(Degrees, BdmDegree, ::testing::Values(1, 2, 3, 4, 6, 8));

TEST(Basis, BdmOneHasTwoNormalTraceFunctionsPerFacet) {
  const ReferenceBasis& b = bdm_basis(1);
  ASSERT_EQ(b.count(), 6);
  std::vector<VectorShape> v(6);
  for (int f = 0; f < 3; ++f) {
    int nonzero = 0;
    for (int c = 0; c < 6; ++c) {
      double mx = 0.0;
      for (double s : {0.0, 0.3, 0.8, 1.0}) {
        b.evaluate(reference_facet_point(f, s), v);
        mx = std::max(mx, std::abs(v[c].value.dot(reference_facet_normal(f))));
      }
      if (mx > 1e-12) {
        ++nonzero;
        EXPECT_TRUE(c / 2 == f) << "function " << c << " on facet " << f;
      }
    }
    EXPECT_EQ(nonzero, 2);
  }
}

TEST(CompositeQuadrature, ExactForPolynomialsAndWeightsSum) {
  for (int levels : {0, 1, 3}) {
    const TriangleRule t = composite_triangle_quadrature(4, levels);
    EXPECT_EQ(t.size(), triangle_quadrature(4).size() << (2 * levels));
    double s = 0.0, m = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      s += t.weights[i];
      m += t.weights[i] * std::pow(t.points[i].x(), 3) * t.points[i].y();
    }
    EXPECT_NEAR(s, 0.5, 1e-15);
    EXPECT_NEAR(m, 1.0 / 120.0, 1e-15);  // 3! 1! / 6!
    const IntervalRule g = composite_interval_quadrature(5, levels);
    double p = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) p += g.weights[i] * std::pow(g.points[i], 5);
    EXPECT_NEAR(p, 1.0 / 6.0, 1e-15);
  }
  EXPECT_THROW(composite_triangle_quadrature(2, -1), std::invalid_argument);
}

TEST(CompositeQuadrature, ConvergesOnKinkedIntegrand) {
  // int_0^1 |x - 1/3| dx = 5/18
  double prev = 1.0;
  for (int levels : {0, 2, 4}) {
    const IntervalRule g = composite_interval_quadrature(3, levels);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g.weights[i] * std::abs(g.points[i] - 1.0 / 3.0);
    const double err = std::abs(s - 5.0 / 18.0);
    EXPECT_LT(err, prev);
    prev = err;
  }
}
