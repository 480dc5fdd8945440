#include "nsdg/benchmarks.hpp"

#include <cmath>
#include <numeric>

namespace nsdg {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Vec2 lattice_exact(double t, const Vec2& x, double nu) {
  const double a = 2.0 * kPi * x.x(), b = 2.0 * kPi * x.y();
  const double decay = std::exp(-8.0 * kPi * kPi * nu * t);
  return decay * Vec2(std::sin(a) * std::sin(b), std::cos(a) * std::cos(b));
}

Vec2 lattice_convection(double t, const Vec2& x, double nu) {
  const double decay = std::exp(-16.0 * kPi * kPi * nu * t);
  return decay * kPi * Vec2(std::sin(4.0 * kPi * x.x()), -std::sin(4.0 * kPi * x.y()));
}

VectorField lattice_field(double t, double nu) {
  return [t, nu](const Vec2& x) { return lattice_exact(t, x, nu); };
}

Vec2 gresho_initial(const Vec2& x, const GreshoParams& p) {
  const Vec2 d = x - p.center;
  const double r = d.norm();
  const Vec2 perp(-d.y(), d.x());
  if (r < 0.2) return p.wind + 5.0 * perp;
  if (r < 0.4) return p.wind + (2.0 / r - 5.0) * perp;
  return p.wind;
}

double gresho_vortex_kinetic_energy() { return 2.0 * kPi / 75.0; }

Vec2 noflow_forcing(double gamma, const Vec2& x) {
  return Vec2(0.0, gamma * (gamma + 1.0) * std::pow(x.y(), gamma - 1.0));
}

VectorField noflow_field(double gamma) {
  return [gamma](const Vec2& x) { return noflow_forcing(gamma, x); };
}

int noflow_quadrature_degree(double gamma, int k) {
  const int exact = static_cast<int>(std::ceil(gamma)) - 1 + k;
  return std::min(kMaxQuadratureDegree, std::max(data_quadrature_degree(k), exact));
}

// Diagnostics ----------------------------------------------------------------

DiagnosticsEvaluator::DiagnosticsEvaluator(std::shared_ptr<const FeSpace> vspace, int quad_degree)
    : space_(std::move(vspace)) {
  if (!space_->is_vector()) throw std::invalid_argument("diagnostics need a velocity space");
  if (quad_degree < 0) quad_degree = 2 * space_->degree() + 4;
  rule_ = triangle_quadrature(quad_degree);
  table_ = vector_table(space_->basis(), rule_.points, true);
}

FieldDiagnostics DiagnosticsEvaluator::evaluate(const FieldFunction& u, const VectorField* exact) const {
  if (&u.space() != space_.get()) throw std::invalid_argument("diagnostics: field lives in another space");
  const Mesh& m = space_->mesh();
  const int n = space_->local_dofs();
  std::vector<VectorShape> phi(n);
  std::vector<double> c(n);
  double kin = 0.0, ens = 0.0, pal = 0.0, err = 0.0, divmax = 0.0;
  for (int e = 0; e < m.num_elements(); ++e) {
    u.gather(e, c);
    const AffineMap& map = m.map(e);
    double div2 = 0.0;
    for (std::size_t iq = 0; iq < rule_.size(); ++iq) {
      space_->map_shapes(e, table_.at(static_cast<int>(iq)), phi, true);
      Vec2 v = Vec2::Zero();
      Mat2 g = Mat2::Zero();
      Mat2 h0 = Mat2::Zero(), h1 = Mat2::Zero();
      for (int i = 0; i < n; ++i) {
        v += c[i] * phi[i].value;
        g += c[i] * phi[i].grad;
        h0 += c[i] * phi[i].hess[0];
        h1 += c[i] * phi[i].hess[1];
      }
      const double w = rule_.weights[iq] * map.det;
      const double omega = g(1, 0) - g(0, 1);
      // grad omega = grad(d1 u2) - grad(d2 u1)
      const Vec2 gomega = h1.col(0) - h0.col(1);
      kin += w * v.squaredNorm();
      ens += w * omega * omega;
      pal += w * gomega.squaredNorm();
      div2 += w * g.trace() * g.trace();
      if (exact) err += w * (v - (*exact)(map.to_physical(rule_.points[iq]))).squaredNorm();
    }
    divmax = std::max(divmax, std::sqrt(div2));
  }
  FieldDiagnostics d;
  d.kinetic = 0.5 * kin;
  d.enstrophy = 0.5 * ens;
  d.palinstrophy = 0.5 * pal;
  d.div_norm = divmax;
  if (exact) d.l2_error = std::sqrt(err);
  return d;
}

FieldDiagnostics diagnostics(const FieldFunction& u, const VectorField* exact) {
  return DiagnosticsEvaluator(u.space_ptr()).evaluate(u, exact);
}

namespace {

// Calls fn(element, xhat, weight, value) at every quadrature point of a vector field.
template <class Fn>
void for_each_value(const FieldFunction& v, int degree, Fn&& fn) {
  const FeSpace& s = v.space();
  const Mesh& m = s.mesh();
  const TriangleRule& q = triangle_quadrature(degree);
  const auto table = vector_table(s.basis(), q.points);
  std::vector<VectorShape> phi(s.local_dofs());
  std::vector<double> c(s.local_dofs());
  for (int e = 0; e < m.num_elements(); ++e) {
    v.gather(e, c);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      s.map_shapes(e, table.at(static_cast<int>(iq)), phi);
      Vec2 val = Vec2::Zero();
      for (std::size_t i = 0; i < phi.size(); ++i) val += c[i] * phi[i].value;
      fn(e, q.points[iq], q.weights[iq] * m.map(e).det, val);
    }
  }
}

double lp_accumulate(const Vec2& v, double p) { return std::pow(std::abs(v.x()), p) + std::pow(std::abs(v.y()), p); }

}  // namespace

double lp_norm(const FieldFunction& v, double p, int quad_degree) {
  if (quad_degree < 0) quad_degree = 2 * v.space().degree() + 4;
  double s = 0.0;
  for_each_value(v, quad_degree, [&](int, const Vec2&, double w, const Vec2& val) { s += w * lp_accumulate(val, p); });
  return std::pow(s, 1.0 / p);
}

double lp_norm_difference(const FieldFunction& a, const FieldFunction& b, double p, int quad_degree) {
  if (&a.space().mesh() != &b.space().mesh()) throw std::invalid_argument("fields live on different meshes");
  if (quad_degree < 0) quad_degree = 2 * std::max(a.space().degree(), b.space().degree()) + 4;
  const TriangleRule& q = triangle_quadrature(quad_degree);
  const auto ta = vector_table(a.space().basis(), q.points);
  const auto tb = vector_table(b.space().basis(), q.points);
  const Mesh& m = a.space().mesh();
  std::vector<VectorShape> pa(a.space().local_dofs()), pb(b.space().local_dofs());
  std::vector<double> ca(pa.size()), cb(pb.size());
  double s = 0.0;
  for (int e = 0; e < m.num_elements(); ++e) {
    a.gather(e, ca);
    b.gather(e, cb);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      a.space().map_shapes(e, ta.at(static_cast<int>(iq)), pa);
      b.space().map_shapes(e, tb.at(static_cast<int>(iq)), pb);
      Vec2 d = Vec2::Zero();
      for (std::size_t i = 0; i < pa.size(); ++i) d += ca[i] * pa[i].value;
      for (std::size_t i = 0; i < pb.size(); ++i) d -= cb[i] * pb[i].value;
      s += q.weights[iq] * m.map(e).det * lp_accumulate(d, p);
    }
  }
  return std::pow(s, 1.0 / p);
}

double l2_error(const FieldFunction& v, const VectorField& g, int quad_degree) {
  if (quad_degree < 0) quad_degree = 2 * v.space().degree() + 4;
  const Mesh& m = v.space().mesh();
  double s = 0.0;
  for_each_value(v, quad_degree, [&](int e, const Vec2& xhat, double w, const Vec2& val) {
    s += w * (val - g(m.map(e).to_physical(xhat))).squaredNorm();
  });
  return std::sqrt(s);
}

double l2_norm(const FieldFunction& v, int quad_degree) {
  if (quad_degree < 0) quad_degree = 2 * v.space().degree() + 2;
  double s = 0.0;
  if (v.space().is_vector()) {
    for_each_value(v, quad_degree, [&](int, const Vec2&, double w, const Vec2& val) { s += w * val.squaredNorm(); });
    return std::sqrt(s);
  }
  const Mesh& m = v.space().mesh();
  const TriangleRule& q = triangle_quadrature(quad_degree);
  const auto table = scalar_table(v.space().basis(), q.points);
  std::vector<double> c(v.space().local_dofs());
  for (int e = 0; e < m.num_elements(); ++e) {
    v.gather(e, c);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      const auto psi = table.at(static_cast<int>(iq));
      double f = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) f += c[i] * psi[i].value;
      s += q.weights[iq] * m.map(e).det * f * f;
    }
  }
  return std::sqrt(s);
}

DecompositionNorms decompose(const HelmholtzProjector& projector, const FieldFunction& f, double p) {
  const HelmholtzResult r = projector.project(f);
  DecompositionNorms d;
  d.total = lp_norm(f, p);
  d.div_part = lp_norm(r.projection, p);
  d.grad_part = lp_norm_difference(f, r.projection, p);
  return d;
}

void SpaceTimeError::add(double t, double error) {
  const double e2 = error * error;
  if (count_ > 0) {
    if (!(t > last_t_)) throw std::invalid_argument("space-time error samples must be increasing in time");
    integral_ += 0.5 * (t - last_t_) * (e2 + last_e2_);
  }
  last_t_ = t;
  last_e2_ = e2;
  ++count_;
}

double observed_order(std::span<const double> h, std::span<const double> err) {
  if (h.size() != err.size() || h.size() < 2) throw std::invalid_argument("observed_order needs >= 2 samples");
  const std::size_t n = h.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(h[i]);
    my += std::log(err[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(h[i]) - mx;
    sxy += dx * (std::log(err[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace nsdg
