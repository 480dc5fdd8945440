#pragma once

#include "nsdg/mesh.hpp"

#include <vector>

namespace nsdg {

/// Points and positive weights, exact for polynomials up to `degree`.
template <class Point>
struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return points.size(); }
};

using TriangleRule = QuadratureRule<Vec2>;    // reference triangle, weights sum to 1/2
using IntervalRule = QuadratureRule<double>;  // [0,1], weights sum to 1

inline constexpr int kMaxQuadratureDegree = 60;

/// Collapsed Gauss rule on the reference triangle (centroid rule for degree <= 1).
/// Throws std::invalid_argument above kMaxQuadratureDegree.
const TriangleRule& triangle_quadrature(int degree);

/// Gauss-Legendre rule on [0,1] with ceil((degree+1)/2) points.
const IntervalRule& interval_quadrature(int degree);

/// Base rule of `degree` applied on each of the 4^levels (2^levels) congruent pieces
/// of a uniform refinement; for data with kinks inside the cell.
TriangleRule composite_triangle_quadrature(int degree, int levels);
IntervalRule composite_interval_quadrature(int degree, int levels);

}  // namespace nsdg
