#pragma once

#include "nsdg/fespace.hpp"
#include "nsdg/sparse.hpp"

#include <optional>

namespace nsdg {

/// Assembled bilinear form plus the boundary-data functional that accompanies it.
struct AssembledOperator {
  SparseMatrix matrix;
  Vector rhs;
  double asymmetry = 0.0;  // max |a_ij - a_ji| / max |a_ij| before averaging (symmetric forms only)
};

inline double default_penalty(int k) { return static_cast<double>((k + 1) * (k + 2)); }

/// Volume and facet quadrature degree used for bilinear forms.
inline int form_quadrature_degree(int k) { return 2 * k + 2; }
/// Degree for the trilinear convection form (degree 3k-1 integrands).
inline int convection_quadrature_degree(int k) { return std::max(2 * k + 2, 3 * k); }

/// m_h(u, v) = int u . v.
SparseMatrix assemble_mass(const FeSpace& vspace);

/// matrix = nu * a_h (symmetric interior penalty), rhs = nu * a_h^boundary(g_D; .).
/// Facet sums run over interior (incl. periodic) and boundary facets.
AssembledOperator assemble_sip(const FeSpace& vspace, double nu, double sigma,
                               const std::optional<VectorField>& g_dirichlet = std::nullopt);

/// matrix(q, v) = b_h(v, q), rhs = b_h^boundary(g_D; q). For BDM spaces the interior
/// facet terms vanish identically and are not assembled.
AssembledOperator assemble_coupling(const FeSpace& vspace, const FeSpace& pspace,
                                    const std::optional<VectorField>& g_dirichlet = std::nullopt);

/// c[q] = int q dx, the zero-mean constraint column.
Vector pressure_mean_vector(const FeSpace& pspace);

/// (f, v_h) for analytic f; quad_degree < 0 selects data_quadrature_degree(k).
Vector assemble_rhs(const FeSpace& vspace, const VectorField& f, int quad_degree = -1);
/// (f, v_h) for a discrete f living on the same mesh.
Vector assemble_rhs(const FeSpace& vspace, const FieldFunction& f);

/// Skew-symmetrised upwind convection form applied as a functional:
///   v -> c_h(w; u, v) - c_h^boundary(g_D; u, v)
/// i.e. the net left-hand-side contribution of the convection term. Reference
/// shape tables are built once; apply() is reentrant.
class ConvectionOperator {
public:
  ConvectionOperator(std::shared_ptr<const FeSpace> vspace, double theta,
                     std::optional<VectorField> g_dirichlet = std::nullopt);

  Vector apply(const FieldFunction& w, const FieldFunction& u) const;
  Vector apply(const Vector& w, const Vector& u) const;
  double theta() const { return theta_; }

private:
  std::shared_ptr<const FeSpace> space_;
  double theta_;
  std::optional<VectorField> g_dirichlet_;
  TriangleRule volume_rule_;
  IntervalRule facet_rule_;
  ShapeTable<VectorShape> volume_;
  ShapeTable<VectorShape> facet_[3][2];  // [local facet][reversed]
};

/// One-shot form of ConvectionOperator::apply.
Vector apply_convection(const FieldFunction& w, const FieldFunction& u, double theta,
                        const std::optional<VectorField>& g_dirichlet = std::nullopt);

}  // namespace nsdg
