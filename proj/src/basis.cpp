#include "nsdg/basis.hpp"

#include "nsdg/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

namespace nsdg {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::scalar_dg: return "scalar_dg";
    case Family::vector_dg: return "vector_dg";
    case Family::bdm: return "bdm";
  }
  return "?";
}

namespace {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

int dim_p(int k) { return k < 0 ? 0 : (k + 1) * (k + 2) / 2; }

// Legendre P_n(2x-1) with first and second x-derivatives, n = 0..k.
void legendre(int k, double x, double* p, double* dp, double* d2p) {
  const double t = 2.0 * x - 1.0;
  p[0] = 1.0;
  dp[0] = 0.0;
  d2p[0] = 0.0;
  if (k >= 1) {
    p[1] = t;
    dp[1] = 1.0;
    d2p[1] = 0.0;
  }
  for (int n = 1; n < k; ++n) {
    p[n + 1] = ((2 * n + 1) * t * p[n] - n * p[n - 1]) / (n + 1);
    dp[n + 1] = dp[n - 1] + (2 * n + 1) * p[n];
    d2p[n + 1] = d2p[n - 1] + (2 * n + 1) * dp[n];
  }
  for (int n = 0; n <= k; ++n) {
    dp[n] *= 2.0;
    d2p[n] *= 4.0;
  }
}

// Orthonormal Dubiner basis, ordered by total degree p + q:
//   psi_pq = c_pq Q_p(x, y) J_q^{(2p+1,0)}(2y-1),  Q_p = (1-y)^p P_p((2x+y-1)/(1-y)).
// Q_p follows (n+1) Q_{n+1} = (2n+1) t Q_n - n (1-y)^2 Q_{n-1}, t = 2x+y-1.
void primal(int k, const Vec2& x, std::span<ScalarShape> out) {
  struct D {
    double v = 0.0;
    Vec2 g = Vec2::Zero();
    Mat2 h = Mat2::Zero();
  };
  auto mul = [](const D& a, const D& b) {
    D r;
    r.v = a.v * b.v;
    r.g = a.v * b.g + b.v * a.g;
    r.h = a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose();
    return r;
  };
  auto axpy = [](double a, const D& x, double b, const D& y) {
    D r;
    r.v = a * x.v + b * y.v;
    r.g = a * x.g + b * y.g;
    r.h = a * x.h + b * y.h;
    return r;
  };
  D t;
  t.v = 2.0 * x.x() + x.y() - 1.0;
  t.g = Vec2(2.0, 1.0);
  D omy2;  // (1-y)^2
  omy2.v = (1.0 - x.y()) * (1.0 - x.y());
  omy2.g = Vec2(0.0, -2.0 * (1.0 - x.y()));
  omy2.h(1, 1) = 2.0;
  D q[kMaxBasisDegree + 1];
  q[0].v = 1.0;
  if (k >= 1) q[1] = t;
  for (int n = 1; n < k; ++n)
    q[n + 1] = axpy((2.0 * n + 1.0) / (n + 1), mul(t, q[n]), -static_cast<double>(n) / (n + 1), mul(omy2, q[n - 1]));

  const double s = 2.0 * x.y() - 1.0;
  int idx = 0;
  for (int d = 0; d <= k; ++d)
    for (int p = d; p >= 0; --p) {
      const int m = d - p;
      const double a = 2.0 * p + 1.0;
      // Jacobi P_n^{(a,0)}(s) and s-derivatives.
      double j0 = 1.0, dj0 = 0.0, d2j0 = 0.0;
      double j1 = 0.5 * ((a + 2.0) * s + a), dj1 = 0.5 * (a + 2.0), d2j1 = 0.0;
      double jm = j0, djm = dj0, d2jm = d2j0;
      if (m >= 1) jm = j1, djm = dj1, d2jm = d2j1;
      for (int n = 2; n <= m; ++n) {
        const double c0 = 2.0 * n * (n + a) * (2.0 * n + a - 2.0);
        const double c1 = (2.0 * n + a - 1.0) * (2.0 * n + a) * (2.0 * n + a - 2.0);
        const double c2 = (2.0 * n + a - 1.0) * a * a;
        const double c3 = 2.0 * (n + a - 1.0) * (n - 1.0) * (2.0 * n + a);
        const double jn = ((c1 * s + c2) * j1 - c3 * j0) / c0;
        const double djn = ((c1 * s + c2) * dj1 + c1 * j1 - c3 * dj0) / c0;
        const double d2jn = ((c1 * s + c2) * d2j1 + 2.0 * c1 * dj1 - c3 * d2j0) / c0;
        j0 = j1, dj0 = dj1, d2j0 = d2j1;
        j1 = jn, dj1 = djn, d2j1 = d2jn;
        jm = jn, djm = djn, d2jm = d2jn;
      }
      D jac;
      jac.v = jm;
      jac.g = Vec2(0.0, 2.0 * djm);
      jac.h(1, 1) = 4.0 * d2jm;
      const D r = mul(q[p], jac);
      // ||Q_p J_q||^2 = 1 / (2 (2p+1) (p+q+1)) on the reference triangle.
      const double c = std::sqrt(2.0 * (2.0 * p + 1.0) * (p + m + 1.0));
      ScalarShape& o = out[idx++];
      o.value = c * r.v;
      o.grad = c * r.g;
      o.hess = c * r.h;
    }
}

void check_degree(Family family, int k) {
  const int lo = family == Family::bdm ? 1 : 0;
  if (k < lo || k > kMaxBasisDegree)
    throw std::invalid_argument("basis degree " + std::to_string(k) + " out of range [" +
                                std::to_string(lo) + "," + std::to_string(kMaxBasisDegree) +
                                "] for " + std::string(to_string(family)));
}

}  // namespace

double facet_moment_weight(int j, double s) {
  double p[kMaxBasisDegree + 2], dp[kMaxBasisDegree + 2], d2p[kMaxBasisDegree + 2];
  legendre(j, s, p, dp, d2p);
  return std::sqrt(2.0 * j + 1.0) * p[j];
}

Vec2 reference_facet_point(int facet, double s) {
  static const Vec2 v[3] = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  const auto [a, b] = Mesh::local_facet_vertices(facet);
  return (1.0 - s) * v[a] + s * v[b];
}

Vec2 reference_facet_normal(int facet) {
  switch (facet) {
    case 0: return Vec2(1.0, 1.0) / std::sqrt(2.0);
    case 1: return Vec2(-1.0, 0.0);
    default: return Vec2(0.0, -1.0);
  }
}

double reference_facet_length(int facet) { return facet == 0 ? std::sqrt(2.0) : 1.0; }

ReferenceBasis::ReferenceBasis(Family family, int degree)
    : family_(family), degree_(degree), nscalar_(dim_p(degree)) {
  check_degree(family, degree);
  count_ = family == Family::scalar_dg ? nscalar_ : 2 * nscalar_;

  const TriangleRule& q = triangle_quadrature(2 * degree);

  if (family_ != Family::bdm) return;

  // Functional matrix over the vector basis, then invert for the dual basis.
  const int n = count_;
  LMatrix functionals = LMatrix::Zero(n, n);
  std::vector<VectorShape> v(n);
  const ReferenceBasis vec(Family::vector_dg, degree);
  const IntervalRule& qf = interval_quadrature(2 * degree);
  for (int f = 0; f < 3; ++f) {
    const Vec2 normal = reference_facet_normal(f);
    const double len = reference_facet_length(f);
    for (std::size_t iq = 0; iq < qf.size(); ++iq) {
      const double s = qf.points[iq];
      vec.evaluate(reference_facet_point(f, s), v);
      for (int j = 0; j <= degree; ++j) {
        const long double w = static_cast<long double>(qf.weights[iq]) * len * facet_moment_weight(j, s);
        for (int l = 0; l < n; ++l) functionals(f * (degree + 1) + j, l) += w * v[l].value.dot(normal);
      }
    }
  }
  const int ni = interior_dofs();
  if (ni > 0) {
    std::vector<Vec2> mom(ni);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      vec.evaluate(q.points[iq], v);
      interior_moment_functions(q.points[iq], mom);
      for (int i = 0; i < ni; ++i)
        for (int l = 0; l < n; ++l)
          functionals(3 * (degree + 1) + i, l) +=
              static_cast<long double>(q.weights[iq]) * v[l].value.dot(mom[i]);
    }
  }
  Eigen::FullPivLU<LMatrix> lu(functionals);
  if (!lu.isInvertible()) throw std::logic_error("BDM functional matrix is singular");
  bdm_coef_ = lu.inverse().cast<double>();
}

void ReferenceBasis::evaluate(const Vec2& x, std::span<ScalarShape> out, bool hessian) const {
  if (family_ != Family::scalar_dg) throw std::logic_error("scalar evaluation of a vector basis");
  primal(degree_, x, out.first(nscalar_));
  if (!hessian)
    for (int m = 0; m < nscalar_; ++m) out[m].hess.setZero();
}

void ReferenceBasis::evaluate(const Vec2& x, std::span<VectorShape> out, bool hessian) const {
  if (family_ == Family::scalar_dg) throw std::logic_error("vector evaluation of a scalar basis");
  ScalarShape psi[dim_p(kMaxBasisDegree)];
  primal(degree_, x, std::span(psi, nscalar_));
  if (family_ == Family::vector_dg) {
    for (int m = 0; m < nscalar_; ++m) {
      for (int c = 0; c < 2; ++c) {
        VectorShape& v = out[c * nscalar_ + m];
        v.value = Vec2::Zero();
        v.value[c] = psi[m].value;
        v.grad.setZero();
        v.grad.row(c) = psi[m].grad.transpose();
        v.div = psi[m].grad[c];
        v.hess[c] = psi[m].hess;
        v.hess[1 - c].setZero();
      }
    }
    return;
  }
  for (int j = 0; j < count_; ++j) {
    VectorShape v;
    for (int m = 0; m < nscalar_; ++m) {
      const double c0 = bdm_coef_(m, j), c1 = bdm_coef_(nscalar_ + m, j);
      v.value += Vec2(c0 * psi[m].value, c1 * psi[m].value);
      v.grad.row(0) += c0 * psi[m].grad.transpose();
      v.grad.row(1) += c1 * psi[m].grad.transpose();
      if (hessian) {
        v.hess[0] += c0 * psi[m].hess;
        v.hess[1] += c1 * psi[m].hess;
      }
    }
    v.div = v.grad(0, 0) + v.grad(1, 1);
    out[j] = v;
  }
}

void ReferenceBasis::interior_moment_functions(const Vec2& x, std::span<Vec2> out) const {
  const int k = degree_;
  const int nlow = dim_p(k - 2);
  if (nlow == 0) return;
  ScalarShape psi[dim_p(kMaxBasisDegree)];
  primal(k - 2, x, std::span(psi, nlow));
  int idx = 0;
  for (int c = 0; c < 2; ++c)
    for (int m = 0; m < nlow; ++m) {
      Vec2 q = Vec2::Zero();
      q[c] = psi[m].value;
      out[idx++] = q;
    }
  // x_perp times the degree-(k-2) Dubiner members, about the centroid.
  const Vec2 xp(-(x.y() - 1.0 / 3.0), x.x() - 1.0 / 3.0);
  for (int m = dim_p(k - 3); m < nlow; ++m) out[idx++] = psi[m].value * xp;
}

const ReferenceBasis& reference_basis(Family family, int k) {
  check_degree(family, k);
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<ReferenceBasis>> cache;
  const std::pair key{static_cast<int>(family), k};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return *it->second;
  }
  auto basis = std::make_unique<ReferenceBasis>(family, k);
  std::lock_guard lock(mutex);
  auto [it, inserted] = cache.emplace(key, std::move(basis));
  return *it->second;
}

const ReferenceBasis& scalar_basis(int k) { return reference_basis(Family::scalar_dg, k); }
const ReferenceBasis& vector_basis(int k) { return reference_basis(Family::vector_dg, k); }
const ReferenceBasis& bdm_basis(int k) { return reference_basis(Family::bdm, k); }

}  // namespace nsdg
