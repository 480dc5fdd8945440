#pragma once

#include "nsdg/basis.hpp"
#include "nsdg/mesh.hpp"
#include "nsdg/quadrature.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace nsdg {

using Vector = Eigen::VectorXd;
using VectorField = std::function<Vec2(const Vec2&)>;
using ScalarField = std::function<double(const Vec2&)>;
/// Field known per element at reference coordinates (element, xhat) -> value.
using ElementVectorField = std::function<Vec2(int, const Vec2&)>;

/// Global DOF layout of one of the three discrete space families on a mesh.
///
/// BDM facet DOFs are numbered first (facet-major, k+1 per facet), followed by
/// the interior DOFs element by element. Facet DOF j of facet F is the moment
/// of v.n_F against mu_j in the parameter running from the lower to the higher
/// vertex index; element-local signs absorb the normal and parameter flips.
class FeSpace {
public:
  FeSpace(std::shared_ptr<const Mesh> mesh, Family family, int degree);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  Family family() const { return family_; }
  int degree() const { return degree_; }
  bool is_vector() const { return family_ != Family::scalar_dg; }
  const ReferenceBasis& basis() const { return *basis_; }

  int num_dofs() const { return ndofs_; }
  int local_dofs() const { return nloc_; }
  std::span<const int> element_dofs(int k) const { return {dofs_.data() + k * nloc_, std::size_t(nloc_)}; }
  std::span<const double> element_signs(int k) const {
    return {signs_.data() + k * nloc_, std::size_t(nloc_)};
  }
  /// BDM only: global index of facet DOF j on facet f.
  int facet_dof(int f, int j) const { return f * (degree_ + 1) + j; }

  /// Map reference shapes of element k to physical ones (affine or contravariant Piola), signs applied.
  void map_shapes(int k, std::span<const VectorShape> ref, std::span<VectorShape> phys,
                  bool hessian = false) const;
  void map_shapes(int k, std::span<const ScalarShape> ref, std::span<ScalarShape> phys,
                  bool hessian = false) const;

private:
  std::shared_ptr<const Mesh> mesh_;
  Family family_;
  int degree_;
  const ReferenceBasis* basis_;
  int nloc_ = 0;
  int ndofs_ = 0;
  std::vector<int> dofs_;
  std::vector<double> signs_;
};

/// Enforces the scheme's degree rules: velocity families need k >= 2, pressure k >= 1.
std::shared_ptr<const FeSpace> build_space(std::shared_ptr<const Mesh> mesh, Family family, int k);

int count_dofs(const FeSpace& space);
int count_velocity_pressure_dofs(const FeSpace& vspace, const FeSpace& pspace);

/// Reference shape values at a fixed set of reference points.
template <class Shape>
struct ShapeTable {
  int npoints = 0;
  int nfuncs = 0;
  std::vector<Shape> data;  // point-major

  std::span<const Shape> at(int q) const { return {data.data() + q * nfuncs, std::size_t(nfuncs)}; }
};

ShapeTable<VectorShape> vector_table(const ReferenceBasis& b, std::span<const Vec2> points, bool hessian = false);
ShapeTable<ScalarShape> scalar_table(const ReferenceBasis& b, std::span<const Vec2> points, bool hessian = false);

/// Reference points of an interval rule on local facet i; reversed runs the parameter backwards.
std::vector<Vec2> facet_points(const IntervalRule& rule, int facet, bool reversed);

/// Coefficient vector bound to a space.
class FieldFunction {
public:
  FieldFunction() = default;
  explicit FieldFunction(std::shared_ptr<const FeSpace> space);
  FieldFunction(std::shared_ptr<const FeSpace> space, Vector coefficients);

  const FeSpace& space() const { return *space_; }
  const std::shared_ptr<const FeSpace>& space_ptr() const { return space_; }
  Vector& coefficients() { return coef_; }
  const Vector& coefficients() const { return coef_; }

  /// Raw local coefficients of element k (pair with signed physical shapes).
  void gather(int k, std::span<double> local) const;

private:
  std::shared_ptr<const FeSpace> space_;
  Vector coef_;
};

/// Value at x taken from the containing element (lowest index on shared edges). Throws if outside.
Vec2 evaluate_vector(const FieldFunction& f, const Vec2& x);
double evaluate_scalar(const FieldFunction& f, const Vec2& x);
/// Value on a given element at reference point xhat.
Vec2 evaluate_vector(const FieldFunction& f, int k, const Vec2& xhat);
double evaluate_scalar(const FieldFunction& f, int k, const Vec2& xhat);

/// Default quadrature degree for integrating non-polynomial data against degree-k functions.
inline int data_quadrature_degree(int k) { return 2 * k + 12; }

/// Elementwise L2 projection (DG families) or canonical BDM interpolant. With subdivisions > 0
/// the moments use composite rules on 4^subdivisions sub-cells (for piecewise-smooth data).
FieldFunction interpolate(std::shared_ptr<const FeSpace> space, const VectorField& field, int quad_degree = -1,
                          int subdivisions = 0);
FieldFunction interpolate(std::shared_ptr<const FeSpace> space, const ScalarField& field, int quad_degree = -1);
/// Elementwise L2 projection into a vector_dg space of a field given per element.
FieldFunction project_elementwise(std::shared_ptr<const FeSpace> space, const ElementVectorField& field,
                                  int quad_degree, int subdivisions = 0);

}  // namespace nsdg
