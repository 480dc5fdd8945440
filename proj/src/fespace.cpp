#include "nsdg/fespace.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nsdg {

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh, Family family, int degree)
    : mesh_(std::move(mesh)), family_(family), degree_(degree), basis_(&reference_basis(family, degree)) {
  const Mesh& m = *mesh_;
  nloc_ = basis_->count();
  const int ne = m.num_elements();
  dofs_.resize(static_cast<std::size_t>(ne) * nloc_);
  signs_.assign(dofs_.size(), 1.0);
  if (family_ != Family::bdm) {
    ndofs_ = ne * nloc_;
    for (int i = 0; i < ne * nloc_; ++i) dofs_[i] = i;
    return;
  }
  const int nf = degree_ + 1;
  const int ni = basis_->interior_dofs();
  ndofs_ = m.num_facets() * nf + ne * ni;
  const auto& verts = m.vertices();
  for (int k = 0; k < ne; ++k) {
    const auto& tri = m.triangles()[k];
    for (int i = 0; i < 3; ++i) {
      const int f = m.element_facets(k)[i];
      const Facet& F = m.facets()[f];
      const double nsign = F.plus == k && F.plus_local == i ? 1.0 : -1.0;
      // Global parameter runs from vertices[0] to vertices[1] of the canonical (K+) facet.
      const auto [la, lb] = Mesh::local_facet_vertices(i);
      const Vec2 local_t = verts[tri[lb]] - verts[tri[la]];
      const Vec2 global_t = verts[F.vertices[1]] - verts[F.vertices[0]];
      const double psign = local_t.dot(global_t) > 0.0 ? 1.0 : -1.0;
      double s = nsign;
      for (int j = 0; j < nf; ++j) {
        dofs_[k * nloc_ + i * nf + j] = facet_dof(f, j);
        signs_[k * nloc_ + i * nf + j] = s;
        s *= psign;
      }
    }
    for (int j = 0; j < ni; ++j) dofs_[k * nloc_ + 3 * nf + j] = m.num_facets() * nf + k * ni + j;
  }
}

void FeSpace::map_shapes(int k, std::span<const VectorShape> ref, std::span<VectorShape> phys,
                         bool hessian) const {
  const AffineMap& map = mesh_->map(k);
  const Mat2& binv = map.inverse;
  const auto signs = element_signs(k);
  if (family_ == Family::vector_dg) {
    for (int i = 0; i < nloc_; ++i) {
      const VectorShape& r = ref[i];
      VectorShape& p = phys[i];
      p.value = r.value;
      p.grad = r.grad * binv;
      p.div = p.grad.trace();
      if (hessian)
        for (int c = 0; c < 2; ++c) p.hess[c] = binv.transpose() * r.hess[c] * binv;
    }
    return;
  }
  const Mat2& b = map.jacobian;
  const double inv_det = 1.0 / map.det;
  for (int i = 0; i < nloc_; ++i) {
    const VectorShape& r = ref[i];
    VectorShape& p = phys[i];
    const double s = signs[i] * inv_det;
    p.value = s * (b * r.value);
    p.grad = s * (b * r.grad * binv);
    p.div = s * r.div;
    if (hessian) {
      const Mat2 h0 = binv.transpose() * r.hess[0] * binv;
      const Mat2 h1 = binv.transpose() * r.hess[1] * binv;
      p.hess[0] = s * (b(0, 0) * h0 + b(0, 1) * h1);
      p.hess[1] = s * (b(1, 0) * h0 + b(1, 1) * h1);
    }
  }
}

void FeSpace::map_shapes(int k, std::span<const ScalarShape> ref, std::span<ScalarShape> phys,
                         bool hessian) const {
  const Mat2& binv = mesh_->map(k).inverse;
  for (int i = 0; i < nloc_; ++i) {
    phys[i].value = ref[i].value;
    phys[i].grad = binv.transpose() * ref[i].grad;
    if (hessian) phys[i].hess = binv.transpose() * ref[i].hess * binv;
  }
}

std::shared_ptr<const FeSpace> build_space(std::shared_ptr<const Mesh> mesh, Family family, int k) {
  if (family != Family::scalar_dg && k < 2)
    throw std::invalid_argument("velocity spaces require k >= 2, got " + std::to_string(k));
  if (family == Family::scalar_dg && k < 1)
    throw std::invalid_argument("pressure space requires degree k-1 >= 1, got " + std::to_string(k));
  return std::make_shared<const FeSpace>(std::move(mesh), family, k);
}

int count_dofs(const FeSpace& space) { return space.num_dofs(); }

int count_velocity_pressure_dofs(const FeSpace& vspace, const FeSpace& pspace) {
  return vspace.num_dofs() + pspace.num_dofs();
}

ShapeTable<VectorShape> vector_table(const ReferenceBasis& b, std::span<const Vec2> points, bool hessian) {
  ShapeTable<VectorShape> t;
  t.npoints = static_cast<int>(points.size());
  t.nfuncs = b.count();
  t.data.resize(static_cast<std::size_t>(t.npoints) * t.nfuncs);
  for (int q = 0; q < t.npoints; ++q)
    b.evaluate(points[q], std::span(t.data.data() + q * t.nfuncs, t.nfuncs), hessian);
  return t;
}

ShapeTable<ScalarShape> scalar_table(const ReferenceBasis& b, std::span<const Vec2> points, bool hessian) {
  ShapeTable<ScalarShape> t;
  t.npoints = static_cast<int>(points.size());
  t.nfuncs = b.count();
  t.data.resize(static_cast<std::size_t>(t.npoints) * t.nfuncs);
  for (int q = 0; q < t.npoints; ++q)
    b.evaluate(points[q], std::span(t.data.data() + q * t.nfuncs, t.nfuncs), hessian);
  return t;
}

std::vector<Vec2> facet_points(const IntervalRule& rule, int facet, bool reversed) {
  std::vector<Vec2> pts;
  pts.reserve(rule.size());
  for (double s : rule.points) pts.push_back(reference_facet_point(facet, reversed ? 1.0 - s : s));
  return pts;
}

FieldFunction::FieldFunction(std::shared_ptr<const FeSpace> space)
    : space_(std::move(space)), coef_(Vector::Zero(space_->num_dofs())) {}

FieldFunction::FieldFunction(std::shared_ptr<const FeSpace> space, Vector coefficients)
    : space_(std::move(space)), coef_(std::move(coefficients)) {
  if (coef_.size() != space_->num_dofs())
    throw std::invalid_argument("coefficient vector length " + std::to_string(coef_.size()) +
                                " does not match space dimension " + std::to_string(space_->num_dofs()));
}

void FieldFunction::gather(int k, std::span<double> local) const {
  const auto dofs = space_->element_dofs(k);
  for (std::size_t i = 0; i < dofs.size(); ++i) local[i] = coef_[dofs[i]];
}

Vec2 evaluate_vector(const FieldFunction& f, int k, const Vec2& xhat) {
  const FeSpace& s = f.space();
  const int n = s.local_dofs();
  std::vector<VectorShape> ref(n), phys(n);
  s.basis().evaluate(xhat, ref);
  s.map_shapes(k, ref, phys);
  std::vector<double> c(n);
  f.gather(k, c);
  Vec2 v = Vec2::Zero();
  for (int i = 0; i < n; ++i) v += c[i] * phys[i].value;
  return v;
}

double evaluate_scalar(const FieldFunction& f, int k, const Vec2& xhat) {
  const FeSpace& s = f.space();
  const int n = s.local_dofs();
  std::vector<ScalarShape> ref(n);
  s.basis().evaluate(xhat, ref);
  std::vector<double> c(n);
  f.gather(k, c);
  double v = 0.0;
  for (int i = 0; i < n; ++i) v += c[i] * ref[i].value;
  return v;
}

namespace {

int locate_or_throw(const Mesh& m, const Vec2& x) {
  const int k = m.locate(x);
  if (k < 0)
    throw std::out_of_range("point (" + std::to_string(x.x()) + "," + std::to_string(x.y()) +
                            ") lies outside the mesh");
  return k;
}

}  // namespace

Vec2 evaluate_vector(const FieldFunction& f, const Vec2& x) {
  const int k = locate_or_throw(f.space().mesh(), x);
  return evaluate_vector(f, k, f.space().mesh().map(k).to_reference(x));
}

double evaluate_scalar(const FieldFunction& f, const Vec2& x) {
  const int k = locate_or_throw(f.space().mesh(), x);
  return evaluate_scalar(f, k, f.space().mesh().map(k).to_reference(x));
}

FieldFunction project_elementwise(std::shared_ptr<const FeSpace> space, const ElementVectorField& field,
                                  int quad_degree, int subdivisions) {
  if (space->family() != Family::vector_dg)
    throw std::invalid_argument("project_elementwise requires a vector_dg space");
  FieldFunction out(space);
  const Mesh& m = space->mesh();
  const TriangleRule q = composite_triangle_quadrature(quad_degree, subdivisions);
  const auto table = vector_table(space->basis(), q.points);
  const int n = space->local_dofs();
  for (int k = 0; k < m.num_elements(); ++k) {
    const auto dofs = space->element_dofs(k);
    // Orthonormal reference basis: the physical mass matrix is det(B) * I.
    std::vector<double> acc(n, 0.0);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      const Vec2 g = field(k, q.points[iq]);
      const auto shapes = table.at(static_cast<int>(iq));
      for (int i = 0; i < n; ++i) acc[i] += q.weights[iq] * g.dot(shapes[i].value);
    }
    for (int i = 0; i < n; ++i) out.coefficients()[dofs[i]] = acc[i];
  }
  return out;
}

FieldFunction interpolate(std::shared_ptr<const FeSpace> space, const VectorField& field, int quad_degree,
                          int subdivisions) {
  if (!space->is_vector()) throw std::invalid_argument("vector field interpolated into a scalar space");
  if (quad_degree < 0) quad_degree = data_quadrature_degree(space->degree());
  const Mesh& m = space->mesh();
  if (space->family() == Family::vector_dg) {
    return project_elementwise(
        space, [&](int k, const Vec2& xhat) { return field(m.map(k).to_physical(xhat)); }, quad_degree,
        subdivisions);
  }

  FieldFunction out(space);
  Vector& c = out.coefficients();
  const int k_deg = space->degree();
  const IntervalRule qf = composite_interval_quadrature(quad_degree, subdivisions);
  for (int f = 0; f < m.num_facets(); ++f) {
    const Facet& F = m.facets()[f];
    const Vec2& a = m.vertices()[F.vertices[0]];
    const Vec2& b = m.vertices()[F.vertices[1]];
    for (std::size_t iq = 0; iq < qf.size(); ++iq) {
      const double s = qf.points[iq];
      const double flux = field((1.0 - s) * a + s * b).dot(F.normal) * qf.weights[iq] * F.length;
      for (int j = 0; j <= k_deg; ++j) c[space->facet_dof(f, j)] += flux * facet_moment_weight(j, s);
    }
  }
  const int ni = space->basis().interior_dofs();
  if (ni > 0) {
    const TriangleRule q = composite_triangle_quadrature(quad_degree, subdivisions);
    std::vector<Vec2> mom(ni);
    const int first = 3 * (k_deg + 1);
    for (int k = 0; k < m.num_elements(); ++k) {
      const AffineMap& map = m.map(k);
      const auto dofs = space->element_dofs(k);
      // int_K u . B^{-T} q dx = det(B) int_ref (B^{-1} u) . q dxhat
      for (std::size_t iq = 0; iq < q.size(); ++iq) {
        space->basis().interior_moment_functions(q.points[iq], mom);
        const Vec2 u = map.inverse * field(map.to_physical(q.points[iq]));
        const double w = q.weights[iq] * map.det;
        for (int i = 0; i < ni; ++i) c[dofs[first + i]] += w * u.dot(mom[i]);
      }
    }
  }
  return out;
}

FieldFunction interpolate(std::shared_ptr<const FeSpace> space, const ScalarField& field, int quad_degree) {
  if (space->is_vector()) throw std::invalid_argument("scalar field interpolated into a vector space");
  if (quad_degree < 0) quad_degree = data_quadrature_degree(space->degree());
  FieldFunction out(space);
  const Mesh& m = space->mesh();
  const TriangleRule& q = triangle_quadrature(quad_degree);
  const auto table = scalar_table(space->basis(), q.points);
  const int n = space->local_dofs();
  for (int k = 0; k < m.num_elements(); ++k) {
    const auto dofs = space->element_dofs(k);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      const double g = field(m.map(k).to_physical(q.points[iq])) * q.weights[iq];
      const auto shapes = table.at(static_cast<int>(iq));
      for (int i = 0; i < n; ++i) out.coefficients()[dofs[i]] += g * shapes[i].value;
    }
  }
  return out;
}

}  // namespace nsdg
