#include "nsdg/forms.hpp"

#include <cmath>
#include <stdexcept>

namespace nsdg {

namespace {

struct FacetTables {
  IntervalRule rule;
  ShapeTable<VectorShape> vec[3][2];
  ShapeTable<ScalarShape> sca[3][2];
};

FacetTables facet_tables(const ReferenceBasis& basis, int degree) {
  FacetTables t;
  t.rule = interval_quadrature(degree);
  for (int f = 0; f < 3; ++f)
    for (int r = 0; r < 2; ++r) {
      const auto pts = facet_points(t.rule, f, r == 1);
      if (basis.family() == Family::scalar_dg)
        t.sca[f][r] = scalar_table(basis, pts);
      else
        t.vec[f][r] = vector_table(basis, pts);
    }
  return t;
}

void require_vector(const FeSpace& s, const char* what) {
  if (!s.is_vector()) throw std::invalid_argument(std::string(what) + ": expected a velocity space");
}

std::vector<int> concat(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Physical shapes of element k at row q of a reference table.
void physical(const FeSpace& s, int k, const ShapeTable<VectorShape>& t, int q, std::vector<VectorShape>& out) {
  out.resize(s.local_dofs());
  s.map_shapes(k, t.at(q), out);
}

}  // namespace

SparseMatrix assemble_mass(const FeSpace& V) {
  require_vector(V, "assemble_mass");
  const Mesh& m = V.mesh();
  const int n = V.local_dofs();
  BlockAssembler asmb(V.num_dofs(), V.num_dofs());
  for (int k = 0; k < m.num_elements(); ++k) asmb.reserve_block(V.element_dofs(k), V.element_dofs(k));
  asmb.compress();
  const TriangleRule& q = triangle_quadrature(form_quadrature_degree(V.degree()));
  const auto table = vector_table(V.basis(), q.points);
  std::vector<VectorShape> phi;
  std::vector<double> local(n * n);
  for (int k = 0; k < m.num_elements(); ++k) {
    std::fill(local.begin(), local.end(), 0.0);
    const double det = m.map(k).det;
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      physical(V, k, table, static_cast<int>(iq), phi);
      const double w = q.weights[iq] * det;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) local[i * n + j] += w * phi[i].value.dot(phi[j].value);
    }
    asmb.add_block(V.element_dofs(k), V.element_dofs(k), local);
  }
  SparseMatrix mass = asmb.release();
  symmetrize(mass);
  return mass;
}

AssembledOperator assemble_sip(const FeSpace& V, double nu, double sigma, const std::optional<VectorField>& g) {
  require_vector(V, "assemble_sip");
  if (!(sigma > 0.0)) throw std::invalid_argument("assemble_sip: penalty must be positive");
  const Mesh& m = V.mesh();
  const int n = V.local_dofs();
  BlockAssembler asmb(V.num_dofs(), V.num_dofs());
  for (int k = 0; k < m.num_elements(); ++k) asmb.reserve_block(V.element_dofs(k), V.element_dofs(k));
  for (const Facet& F : m.facets()) {
    if (F.boundary()) continue;
    const auto d = concat(V.element_dofs(F.plus), V.element_dofs(F.minus));
    asmb.reserve_block(d, d);
  }
  asmb.compress();
  Vector rhs = Vector::Zero(V.num_dofs());

  const int deg = form_quadrature_degree(V.degree());
  const TriangleRule& q = triangle_quadrature(deg);
  const auto table = vector_table(V.basis(), q.points);
  std::vector<VectorShape> phi, phi_m;
  std::vector<double> local(n * n);
  for (int k = 0; k < m.num_elements(); ++k) {
    std::fill(local.begin(), local.end(), 0.0);
    const double det = m.map(k).det;
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      physical(V, k, table, static_cast<int>(iq), phi);
      const double w = q.weights[iq] * det * nu;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) local[i * n + j] += w * phi[i].grad.cwiseProduct(phi[j].grad).sum();
    }
    asmb.add_block(V.element_dofs(k), V.element_dofs(k), local);
  }

  const FacetTables ft = facet_tables(V.basis(), deg);
  std::vector<Vec2> jump, avg;
  std::vector<double> flocal;
  for (const Facet& F : m.facets()) {
    const bool interior = !F.boundary();
    const int nn = interior ? 2 * n : n;
    jump.resize(nn);
    avg.resize(nn);
    flocal.assign(static_cast<std::size_t>(nn) * nn, 0.0);
    const double pen = sigma / F.length;
    for (std::size_t iq = 0; iq < ft.rule.size(); ++iq) {
      const double w = ft.rule.weights[iq] * F.length * nu;
      physical(V, F.plus, ft.vec[F.plus_local][0], static_cast<int>(iq), phi);
      const double half = interior ? 0.5 : 1.0;
      for (int i = 0; i < n; ++i) {
        jump[i] = phi[i].value;
        avg[i] = half * (phi[i].grad * F.normal);
      }
      if (interior) {
        physical(V, F.minus, ft.vec[F.minus_local][1], static_cast<int>(iq), phi_m);
        for (int i = 0; i < n; ++i) {
          jump[n + i] = -phi_m[i].value;
          avg[n + i] = 0.5 * (phi_m[i].grad * F.normal);
        }
      }
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j)
          flocal[i * nn + j] +=
              w * (pen * jump[j].dot(jump[i]) - (avg[j].dot(jump[i]) + jump[j].dot(avg[i])));
      if (!interior && g) {
        const Vec2 x = m.map(F.plus).to_physical(reference_facet_point(F.plus_local, ft.rule.points[iq]));
        const Vec2 gx = (*g)(x);
        const auto dofs = V.element_dofs(F.plus);
        for (int i = 0; i < n; ++i) rhs[dofs[i]] += w * (pen * gx.dot(jump[i]) - gx.dot(avg[i]));
      }
    }
    if (interior) {
      const auto d = concat(V.element_dofs(F.plus), V.element_dofs(F.minus));
      asmb.add_block(d, d, flocal);
    } else {
      asmb.add_block(V.element_dofs(F.plus), V.element_dofs(F.plus), flocal);
    }
  }
  SparseMatrix a = asmb.release();
  const double asym = relative_asymmetry(a);
  symmetrize(a);
  return {std::move(a), std::move(rhs), asym};
}

AssembledOperator assemble_coupling(const FeSpace& V, const FeSpace& Q, const std::optional<VectorField>& g) {
  require_vector(V, "assemble_coupling");
  if (Q.is_vector()) throw std::invalid_argument("assemble_coupling: expected a scalar pressure space");
  if (&V.mesh() != &Q.mesh()) throw std::invalid_argument("assemble_coupling: spaces on different meshes");
  const Mesh& m = V.mesh();
  const int nv = V.local_dofs(), np = Q.local_dofs();
  const bool hdiv = V.family() == Family::bdm;
  BlockAssembler asmb(Q.num_dofs(), V.num_dofs());
  for (int k = 0; k < m.num_elements(); ++k) asmb.reserve_block(Q.element_dofs(k), V.element_dofs(k));
  if (!hdiv)
    for (const Facet& F : m.facets()) {
      if (F.boundary()) continue;
      const auto r = concat(Q.element_dofs(F.plus), Q.element_dofs(F.minus));
      const auto c = concat(V.element_dofs(F.plus), V.element_dofs(F.minus));
      asmb.reserve_block(r, c);
    }
  asmb.compress();
  Vector rhs = Vector::Zero(Q.num_dofs());

  const int deg = form_quadrature_degree(V.degree());
  const TriangleRule& q = triangle_quadrature(deg);
  const auto vt = vector_table(V.basis(), q.points);
  const auto st = scalar_table(Q.basis(), q.points);
  std::vector<VectorShape> phi, phi_m;
  std::vector<double> local(np * nv);
  for (int k = 0; k < m.num_elements(); ++k) {
    std::fill(local.begin(), local.end(), 0.0);
    const double det = m.map(k).det;
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      physical(V, k, vt, static_cast<int>(iq), phi);
      const auto psi = st.at(static_cast<int>(iq));
      const double w = q.weights[iq] * det;
      for (int i = 0; i < np; ++i)
        for (int j = 0; j < nv; ++j) local[i * nv + j] -= w * psi[i].value * phi[j].div;
    }
    asmb.add_block(Q.element_dofs(k), V.element_dofs(k), local);
  }

  const FacetTables fv = facet_tables(V.basis(), deg);
  const FacetTables fq = facet_tables(Q.basis(), deg);
  std::vector<double> flocal;
  std::vector<double> jn, qavg;
  for (const Facet& F : m.facets()) {
    const bool interior = !F.boundary();
    if (interior && hdiv) continue;
    const int rv = interior ? 2 * nv : nv, rq = interior ? 2 * np : np;
    flocal.assign(static_cast<std::size_t>(rq) * rv, 0.0);
    jn.resize(rv);
    qavg.resize(rq);
    for (std::size_t iq = 0; iq < fv.rule.size(); ++iq) {
      const int qi = static_cast<int>(iq);
      const double w = fv.rule.weights[iq] * F.length;
      physical(V, F.plus, fv.vec[F.plus_local][0], qi, phi);
      const auto psi_p = fq.sca[F.plus_local][0].at(qi);
      const double half = interior ? 0.5 : 1.0;
      for (int j = 0; j < nv; ++j) jn[j] = phi[j].value.dot(F.normal);
      for (int i = 0; i < np; ++i) qavg[i] = half * psi_p[i].value;
      if (interior) {
        physical(V, F.minus, fv.vec[F.minus_local][1], qi, phi_m);
        const auto psi_m = fq.sca[F.minus_local][1].at(qi);
        for (int j = 0; j < nv; ++j) jn[nv + j] = -phi_m[j].value.dot(F.normal);
        for (int i = 0; i < np; ++i) qavg[np + i] = 0.5 * psi_m[i].value;
      }
      for (int i = 0; i < rq; ++i)
        for (int j = 0; j < rv; ++j) flocal[i * rv + j] += w * qavg[i] * jn[j];
      if (!interior && g) {
        const Vec2 x = m.map(F.plus).to_physical(reference_facet_point(F.plus_local, fv.rule.points[iq]));
        const double gn = (*g)(x).dot(F.normal);
        const auto dofs = Q.element_dofs(F.plus);
        for (int i = 0; i < np; ++i) rhs[dofs[i]] += w * gn * qavg[i];
      }
    }
    if (interior) {
      asmb.add_block(concat(Q.element_dofs(F.plus), Q.element_dofs(F.minus)),
                     concat(V.element_dofs(F.plus), V.element_dofs(F.minus)), flocal);
    } else {
      asmb.add_block(Q.element_dofs(F.plus), V.element_dofs(F.plus), flocal);
    }
  }
  return {asmb.release(), std::move(rhs)};
}

Vector pressure_mean_vector(const FeSpace& Q) {
  const Mesh& m = Q.mesh();
  const TriangleRule& q = triangle_quadrature(Q.degree());
  const auto st = scalar_table(Q.basis(), q.points);
  Vector c = Vector::Zero(Q.num_dofs());
  for (int k = 0; k < m.num_elements(); ++k) {
    const auto dofs = Q.element_dofs(k);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      const auto psi = st.at(static_cast<int>(iq));
      for (int i = 0; i < Q.local_dofs(); ++i) c[dofs[i]] += q.weights[iq] * m.map(k).det * psi[i].value;
    }
  }
  return c;
}

Vector assemble_rhs(const FeSpace& V, const VectorField& f, int quad_degree) {
  require_vector(V, "assemble_rhs");
  if (quad_degree < 0) quad_degree = data_quadrature_degree(V.degree());
  const Mesh& m = V.mesh();
  const TriangleRule& q = triangle_quadrature(quad_degree);
  const auto table = vector_table(V.basis(), q.points);
  std::vector<VectorShape> phi;
  Vector r = Vector::Zero(V.num_dofs());
  for (int k = 0; k < m.num_elements(); ++k) {
    const auto dofs = V.element_dofs(k);
    const AffineMap& map = m.map(k);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      physical(V, k, table, static_cast<int>(iq), phi);
      const Vec2 fx = f(map.to_physical(q.points[iq])) * (q.weights[iq] * map.det);
      for (int i = 0; i < V.local_dofs(); ++i) r[dofs[i]] += fx.dot(phi[i].value);
    }
  }
  return r;
}

Vector assemble_rhs(const FeSpace& V, const FieldFunction& f) {
  require_vector(V, "assemble_rhs");
  const FeSpace& S = f.space();
  if (&S.mesh() != &V.mesh()) throw std::invalid_argument("assemble_rhs: field lives on a different mesh");
  const Mesh& m = V.mesh();
  const TriangleRule& q = triangle_quadrature(V.degree() + S.degree());
  const auto vt = vector_table(V.basis(), q.points);
  const auto ft = vector_table(S.basis(), q.points);
  std::vector<VectorShape> phi, psi;
  std::vector<double> c(S.local_dofs());
  Vector r = Vector::Zero(V.num_dofs());
  for (int k = 0; k < m.num_elements(); ++k) {
    const auto dofs = V.element_dofs(k);
    f.gather(k, c);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      physical(V, k, vt, static_cast<int>(iq), phi);
      physical(S, k, ft, static_cast<int>(iq), psi);
      Vec2 fx = Vec2::Zero();
      for (int j = 0; j < S.local_dofs(); ++j) fx += c[j] * psi[j].value;
      fx *= q.weights[iq] * m.map(k).det;
      for (int i = 0; i < V.local_dofs(); ++i) r[dofs[i]] += fx.dot(phi[i].value);
    }
  }
  return r;
}

// Convection ---------------------------------------------------------------

ConvectionOperator::ConvectionOperator(std::shared_ptr<const FeSpace> vspace, double theta,
                                       std::optional<VectorField> g)
    : space_(std::move(vspace)), theta_(theta), g_dirichlet_(std::move(g)) {
  require_vector(*space_, "ConvectionOperator");
  const int deg = convection_quadrature_degree(space_->degree());
  volume_rule_ = triangle_quadrature(deg);
  facet_rule_ = interval_quadrature(deg);
  volume_ = vector_table(space_->basis(), volume_rule_.points);
  for (int f = 0; f < 3; ++f)
    for (int r = 0; r < 2; ++r) facet_[f][r] = vector_table(space_->basis(), facet_points(facet_rule_, f, r == 1));
}

namespace {

// Per-element map between reference and physical velocity quantities:
// v = P vhat, grad v = P grad(vhat) B^{-1}; P = B / det for BDM, identity for vector_dg.
struct ElementMap {
  Mat2 p;
  Mat2 binv;
  double det;
};

ElementMap element_map(const FeSpace& s, int k) {
  const AffineMap& a = s.mesh().map(k);
  ElementMap e;
  e.p = s.family() == Family::bdm ? Mat2(a.jacobian / a.det) : Mat2(Mat2::Identity());
  e.binv = a.inverse;
  e.det = a.det;
  return e;
}

struct Trace {
  Vec2 value;
  Mat2 grad;
  double div;
};

Trace sample(const ElementMap& e, std::span<const VectorShape> shapes, std::span<const double> c, bool need_grad) {
  Vec2 v = Vec2::Zero();
  Mat2 g = Mat2::Zero();
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    v += c[i] * shapes[i].value;
    if (need_grad) g += c[i] * shapes[i].grad;
  }
  Trace t;
  t.value = e.p * v;
  if (need_grad) {
    t.grad = e.p * g * e.binv;
    t.div = t.grad.trace();
  } else {
    t.grad.setZero();
    t.div = 0.0;
  }
  return t;
}

// r_i += s_i * (P^T g) . phihat_i
void test_against(const ElementMap& e, std::span<const VectorShape> shapes, const Vec2& g,
                  std::span<const double> signs, std::span<const int> dofs, Vector& r) {
  const Vec2 gh = e.p.transpose() * g;
  for (std::size_t i = 0; i < shapes.size(); ++i) r[dofs[i]] += signs[i] * gh.dot(shapes[i].value);
}

}  // namespace

Vector ConvectionOperator::apply(const FieldFunction& w, const FieldFunction& u) const {
  if (&w.space() != space_.get())
    throw std::invalid_argument("apply_convection: w lives in a different space");
  if (&u.space() != space_.get()) throw std::invalid_argument("apply_convection: u lives in a different space");
  return apply(w.coefficients(), u.coefficients());
}

Vector ConvectionOperator::apply(const Vector& wc, const Vector& uc) const {
  const FeSpace& V = *space_;
  if (wc.size() != V.num_dofs() || uc.size() != V.num_dofs())
    throw std::invalid_argument("apply_convection: coefficient length mismatch");
  const Mesh& m = V.mesh();
  const int n = V.local_dofs();
  Vector r = Vector::Zero(V.num_dofs());
  std::vector<double> cw(n), cu(n), cw2(n), cu2(n);
  auto gather = [&](int k, const Vector& src, std::vector<double>& dst) {
    const auto dofs = V.element_dofs(k);
    const auto sg = V.element_signs(k);
    for (int i = 0; i < n; ++i) dst[i] = src[dofs[i]] * sg[i];
  };

  for (int k = 0; k < m.num_elements(); ++k) {
    const ElementMap e = element_map(V, k);
    gather(k, wc, cw);
    gather(k, uc, cu);
    for (std::size_t iq = 0; iq < volume_rule_.size(); ++iq) {
      const auto shapes = volume_.at(static_cast<int>(iq));
      const Trace tw = sample(e, shapes, cw, true);
      const Trace tu = sample(e, shapes, cu, true);
      const Vec2 g = (tu.grad * tw.value + 0.5 * tw.div * tu.value) * (volume_rule_.weights[iq] * e.det);
      test_against(e, shapes, g, V.element_signs(k), V.element_dofs(k), r);
    }
  }

  for (const Facet& F : m.facets()) {
    const ElementMap ep = element_map(V, F.plus);
    gather(F.plus, wc, cw);
    gather(F.plus, uc, cu);
    if (F.boundary()) {
      for (std::size_t iq = 0; iq < facet_rule_.size(); ++iq) {
        const auto shapes = facet_[F.plus_local][0].at(static_cast<int>(iq));
        const Trace tw = sample(ep, shapes, cw, false);
        const Trace tu = sample(ep, shapes, cu, false);
        double wn = tw.value.dot(F.normal);
        if (g_dirichlet_) {
          const Vec2 x = m.map(F.plus).to_physical(reference_facet_point(F.plus_local, facet_rule_.points[iq]));
          wn -= (*g_dirichlet_)(x).dot(F.normal);
        }
        const Vec2 g = (-0.5 * wn * facet_rule_.weights[iq] * F.length) * tu.value;
        test_against(ep, shapes, g, V.element_signs(F.plus), V.element_dofs(F.plus), r);
      }
      continue;
    }
    const ElementMap em = element_map(V, F.minus);
    gather(F.minus, wc, cw2);
    gather(F.minus, uc, cu2);
    for (std::size_t iq = 0; iq < facet_rule_.size(); ++iq) {
      const auto sp = facet_[F.plus_local][0].at(static_cast<int>(iq));
      const auto sm = facet_[F.minus_local][1].at(static_cast<int>(iq));
      const Trace wp = sample(ep, sp, cw, false), up = sample(ep, sp, cu, false);
      const Trace wm = sample(em, sm, cw2, false), um = sample(em, sm, cu2, false);
      const double w = facet_rule_.weights[iq] * F.length;
      const double avg_wn = 0.5 * (wp.value + wm.value).dot(F.normal);
      const double jump_wn = (wp.value - wm.value).dot(F.normal);
      const Vec2 jump_u = up.value - um.value;
      const double up_coef = 0.5 * theta_ * std::abs(avg_wn);
      const Vec2 gp = w * (-0.5 * avg_wn * jump_u - 0.25 * jump_wn * up.value + up_coef * jump_u);
      const Vec2 gm = w * (-0.5 * avg_wn * jump_u - 0.25 * jump_wn * um.value - up_coef * jump_u);
      test_against(ep, sp, gp, V.element_signs(F.plus), V.element_dofs(F.plus), r);
      test_against(em, sm, gm, V.element_signs(F.minus), V.element_dofs(F.minus), r);
    }
  }
  return r;
}

Vector apply_convection(const FieldFunction& w, const FieldFunction& u, double theta,
                        const std::optional<VectorField>& g) {
  if (&w.space() != &u.space()) throw std::invalid_argument("apply_convection: w and u live in different spaces");
  ConvectionOperator op(u.space_ptr(), theta, g);
  return op.apply(w, u);
}

}  // namespace nsdg
