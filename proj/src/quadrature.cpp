#include "nsdg/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nsdg {

namespace {

void check_degree(int degree) {
  if (degree < 0 || degree > kMaxQuadratureDegree)
    throw std::invalid_argument("quadrature degree " + std::to_string(degree) +
                                " unsupported (max " + std::to_string(kMaxQuadratureDegree) + ")");
}

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int m = 2; m <= n; ++m) {
        const double p2 = ((2 * m - 1) * z * p1 - (m - 1) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = z;
      for (int m = 2; m <= n; ++m) {
        const double p2 = ((2 * m - 1) * z * p1 - (m - 1) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

IntervalRule make_interval(int degree) {
  IntervalRule r;
  r.degree = degree;
  const int n = degree / 2 + 1;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  // ascending order on [0,1]
  for (int i = n - 1; i >= 0; --i) {
    r.points.push_back(0.5 * (x[i] + 1.0));
    r.weights.push_back(0.5 * w[i]);
  }
  return r;
}

TriangleRule make_triangle(int degree) {
  TriangleRule r;
  r.degree = degree;
  if (degree <= 1) {
    r.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
    r.weights.push_back(0.5);
    return r;
  }
  // Duffy collapse x = u (1 - v), y = v with Jacobian (1 - v).
  const IntervalRule& ru = interval_quadrature(degree);
  const IntervalRule& rv = interval_quadrature(degree + 1);
  for (std::size_t j = 0; j < rv.size(); ++j)
    for (std::size_t i = 0; i < ru.size(); ++i) {
      const double v = rv.points[j];
      r.points.emplace_back(ru.points[i] * (1.0 - v), v);
      r.weights.push_back(ru.weights[i] * rv.weights[j] * (1.0 - v));
    }
  return r;
}

}  // namespace

const IntervalRule& interval_quadrature(int degree) {
  check_degree(degree > 0 ? degree - 1 : degree);  // the triangle rule needs one extra degree
  static std::mutex mutex;
  static std::map<int, IntervalRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, make_interval(degree)).first;
  return it->second;
}

const TriangleRule& triangle_quadrature(int degree) {
  check_degree(degree);
  static std::mutex mutex;
  static std::map<int, TriangleRule> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(degree); it != cache.end()) return it->second;
  }
  TriangleRule rule = make_triangle(degree);
  std::lock_guard lock(mutex);
  return cache.emplace(degree, std::move(rule)).first->second;
}

TriangleRule composite_triangle_quadrature(int degree, int levels) {
  if (levels < 0) throw std::invalid_argument("composite rule needs levels >= 0");
  const TriangleRule& base = triangle_quadrature(degree);
  if (levels == 0) return base;
  const int n = 1 << levels;
  const double h = 1.0 / n;
  TriangleRule out;
  out.degree = degree;
  const auto push = [&](const Vec2& a, const Vec2& b, const Vec2& c) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      const Vec2& p = base.points[i];
      out.points.push_back(a + p.x() * (b - a) + p.y() * (c - a));
      out.weights.push_back(base.weights[i] * h * h);
    }
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; i + j < n; ++j) {
      const Vec2 o(i * h, j * h);
      push(o, o + Vec2(h, 0), o + Vec2(0, h));
      if (i + j < n - 1) push(o + Vec2(h, 0), o + Vec2(h, h), o + Vec2(0, h));
    }
  return out;
}

IntervalRule composite_interval_quadrature(int degree, int levels) {
  if (levels < 0) throw std::invalid_argument("composite rule needs levels >= 0");
  const IntervalRule& base = interval_quadrature(degree);
  if (levels == 0) return base;
  const int n = 1 << levels;
  IntervalRule out;
  out.degree = degree;
  for (int i = 0; i < n; ++i)
    for (std::size_t q = 0; q < base.size(); ++q) {
      out.points.push_back((i + base.points[q]) / n);
      out.weights.push_back(base.weights[q] / n);
    }
  return out;
}

}  // namespace nsdg
