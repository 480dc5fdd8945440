#pragma once

#include "nsdg/mesh.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace nsdg {

enum class Family {
  scalar_dg,  // discontinuous P_k
  vector_dg,  // discontinuous P_k^2
  bdm,        // Brezzi-Douglas-Marini BDM_k
};

std::string_view to_string(Family f);

struct ScalarShape {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

struct VectorShape {
  Vec2 value = Vec2::Zero();
  Mat2 grad = Mat2::Zero();  // grad(i, j) = d v_i / d x_j
  double div = 0.0;
  std::array<Mat2, 2> hess{Mat2::Zero(), Mat2::Zero()};  // hess[i] = Hessian of v_i
};

/// Polynomial bases on the reference triangle (0,0),(1,0),(0,1).
///
/// The scalar basis is L2-orthonormal and hierarchical: its first
/// (m+1)(m+2)/2 members span P_m. The vector basis is the scalar one times
/// e_0 (first block) and e_1 (second block). The BDM basis is dual to the
/// functionals
///   facet i, j = 0..k:   v -> int_{f_i} (v . n_i) mu_j ds
///   interior:            v -> int_T v . q   for q in N_{k-1} (Nedelec, first kind)
/// where mu_j is the L2([0,1])-orthonormal Legendre polynomial in the
/// counter-clockwise facet parameter. Local DOFs are ordered facet 0, 1, 2,
/// then interior.
class ReferenceBasis {
public:
  ReferenceBasis(Family family, int degree);

  Family family() const { return family_; }
  int degree() const { return degree_; }
  int count() const { return count_; }
  int facet_dofs() const { return family_ == Family::bdm ? degree_ + 1 : 0; }
  int interior_dofs() const { return count_ - 3 * facet_dofs(); }

  /// scalar_dg only.
  void evaluate(const Vec2& x, std::span<ScalarShape> out, bool hessian = false) const;
  /// vector_dg and bdm.
  void evaluate(const Vec2& x, std::span<VectorShape> out, bool hessian = false) const;

  /// Interior moment test functions q(x) (bdm only), interior_dofs() entries.
  void interior_moment_functions(const Vec2& x, std::span<Vec2> out) const;

private:
  Family family_;
  int degree_;
  int count_;
  int nscalar_;                 // dim P_k
  Eigen::MatrixXd bdm_coef_;     // bdm_j = sum_l bdm_coef_(l, j) vector_l
};

/// Cached, thread-safe accessors.
const ReferenceBasis& scalar_basis(int k);
const ReferenceBasis& vector_basis(int k);
const ReferenceBasis& bdm_basis(int k);
const ReferenceBasis& reference_basis(Family family, int k);

inline constexpr int kMaxBasisDegree = 12;

/// sqrt(2j+1) P_j(2s-1): L2([0,1])-orthonormal Legendre polynomial.
double facet_moment_weight(int j, double s);

/// Reference triangle facet geometry (counter-clockwise).
Vec2 reference_facet_point(int facet, double s);
Vec2 reference_facet_normal(int facet);
double reference_facet_length(int facet);

}  // namespace nsdg
