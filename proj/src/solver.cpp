#include "nsdg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nsdg {

std::string_view to_string(Method m) { return m == Method::hdiv ? "hdiv" : "l2dg"; }

Method parse_method(std::string_view name) {
  if (name == "hdiv") return Method::hdiv;
  if (name == "l2dg") return Method::l2dg;
  throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected hdiv or l2dg)");
}

Family velocity_family(Method m) { return m == Method::hdiv ? Family::bdm : Family::vector_dg; }

Discretization make_discretization(std::shared_ptr<const Mesh> mesh, Method method, int k) {
  Discretization d;
  d.mesh = mesh;
  d.method = method;
  d.k = k;
  d.velocity = build_space(mesh, velocity_family(method), k);
  d.pressure = build_space(mesh, Family::scalar_dg, k - 1);
  return d;
}

std::vector<int> boundary_normal_dofs(const FeSpace& V) {
  std::vector<int> dofs;
  if (V.family() != Family::bdm) return dofs;
  const auto& facets = V.mesh().facets();
  for (int f = 0; f < static_cast<int>(facets.size()); ++f)
    if (facets[f].boundary())
      for (int j = 0; j <= V.degree(); ++j) dofs.push_back(V.facet_dof(f, j));
  return dofs;
}

void constrain_dofs(SparseMatrix& matrix, Vector& rhs, std::span<const int> dofs, const Vector& values) {
  if (static_cast<Eigen::Index>(dofs.size()) != values.size())
    throw std::invalid_argument("constrain_dofs: size mismatch");
  if (dofs.empty()) return;
  std::vector<int> slot(matrix.rows(), -1);
  for (std::size_t i = 0; i < dofs.size(); ++i) slot[dofs[i]] = static_cast<int>(i);
  const auto ptr = matrix.row_ptr();
  const auto idx = matrix.col_idx();
  auto val = matrix.values();
  for (int r = 0; r < matrix.rows(); ++r)
    for (auto p = ptr[r]; p < ptr[r + 1]; ++p) {
      const int c = idx[p];
      if (slot[r] >= 0) {
        val[p] = r == c ? 1.0 : 0.0;
      } else if (slot[c] >= 0) {
        rhs[r] -= val[p] * values[slot[c]];
        val[p] = 0.0;
      }
    }
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    if (matrix.find(dofs[i], dofs[i]) < 0) throw std::invalid_argument("constrain_dofs: missing diagonal entry");
    rhs[dofs[i]] = values[static_cast<Eigen::Index>(i)];
  }
}

namespace {

double sigma_or_default(double sigma, int k) { return sigma > 0.0 ? sigma : default_penalty(k); }

Vector boundary_values(const std::shared_ptr<const FeSpace>& V, std::span<const int> dofs,
                       const std::optional<VectorField>& g) {
  Vector values = Vector::Zero(static_cast<Eigen::Index>(dofs.size()));
  if (!g || dofs.empty()) return values;
  const Vector gi = interpolate(V, *g).coefficients();
  for (std::size_t i = 0; i < dofs.size(); ++i) values[static_cast<Eigen::Index>(i)] = gi[dofs[i]];
  return values;
}

double relative_residual(const SparseMatrix& a, const Vector& x, const Vector& b) {
  const double nb = b.lpNorm<Eigen::Infinity>();
  const double r = (a * x - b).lpNorm<Eigen::Infinity>();
  return nb > 0.0 ? r / nb : r;
}

}  // namespace

StokesSolution solve_stokes(const Discretization& disc, const StokesProblem& pb) {
  const FeSpace& V = *disc.velocity;
  const FeSpace& Q = *disc.pressure;
  const std::optional<VectorField> g = disc.mesh->num_boundary_facets() > 0 ? pb.dirichlet : std::nullopt;
  const AssembledOperator a = assemble_sip(V, pb.nu, sigma_or_default(pb.sigma, disc.k), g);
  const AssembledOperator b = assemble_coupling(V, Q, g);
  SparseMatrix s = saddle_matrix(a.matrix, b.matrix, pressure_mean_vector(Q));
  const int nu = V.num_dofs(), np = Q.num_dofs();
  Vector rhs = Vector::Zero(nu + np + 1);
  rhs.head(nu) = a.rhs;
  if (pb.forcing) rhs.head(nu) += assemble_rhs(V, pb.forcing, pb.forcing_quadrature);
  rhs.segment(nu, np) = b.rhs;
  const std::vector<int> fixed = boundary_normal_dofs(V);
  constrain_dofs(s, rhs, fixed, boundary_values(disc.velocity, fixed, g));

  StokesSolution out;
  out.nze = count_nze(s);
  const Factorization f(s);
  const Vector x = f.solve(rhs);
  out.residual = relative_residual(f.matrix(), x, rhs);
  out.velocity = FieldFunction(disc.velocity, x.head(nu));
  out.pressure = FieldFunction(disc.pressure, x.segment(nu, np));
  out.multiplier = x[nu + np];
  return out;
}

// Helmholtz ------------------------------------------------------------------

namespace {

Factorization helmholtz_factor(const Discretization& d, const std::vector<int>& fixed) {
  const AssembledOperator b = assemble_coupling(*d.velocity, *d.pressure);
  SparseMatrix s = saddle_matrix(assemble_mass(*d.velocity), b.matrix, pressure_mean_vector(*d.pressure));
  Vector dummy = Vector::Zero(s.rows());
  constrain_dofs(s, dummy, fixed, Vector::Zero(static_cast<Eigen::Index>(fixed.size())));
  return Factorization(std::move(s));
}

}  // namespace

HelmholtzProjector::HelmholtzProjector(Discretization disc)
    : disc_(std::move(disc)), constrained_(boundary_normal_dofs(*disc_.velocity)) {
  factor_.emplace(helmholtz_factor(disc_, constrained_));
}

HelmholtzResult HelmholtzProjector::project_load(const Vector& load) const {
  const int nu = disc_.velocity->num_dofs(), np = disc_.pressure->num_dofs();
  if (load.size() != nu) throw std::invalid_argument("HelmholtzProjector: load vector length mismatch");
  Vector rhs = Vector::Zero(nu + np + 1);
  rhs.head(nu) = load;
  for (int d : constrained_) rhs[d] = 0.0;
  const Vector x = factor_->solve(rhs);
  HelmholtzResult r;
  r.projection = FieldFunction(disc_.velocity, x.head(nu));
  r.potential = FieldFunction(disc_.pressure, x.segment(nu, np));
  r.variant = disc_.method;
  return r;
}

HelmholtzResult HelmholtzProjector::project(const VectorField& g, int quad_degree) const {
  return project_load(assemble_rhs(*disc_.velocity, g, quad_degree));
}

HelmholtzResult HelmholtzProjector::project(const FieldFunction& g) const {
  return project_load(assemble_rhs(*disc_.velocity, g));
}

HelmholtzResult helmholtz_project(const VectorField& g, std::shared_ptr<const Mesh> mesh, Method variant, int k) {
  return HelmholtzProjector(make_discretization(std::move(mesh), variant, k)).project(g);
}

// Transient ------------------------------------------------------------------

TransientSolver::TransientSolver(Discretization disc, TransientConfig config)
    : disc_(std::move(disc)), config_(std::move(config)) {
  if (!(config_.dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(config_.nu > 0.0)) throw std::invalid_argument("viscosity must be positive");
  if (config_.theta != 0.0 && config_.theta != 1.0) throw std::invalid_argument("theta must be 0 or 1");
  const FeSpace& V = *disc_.velocity;
  const bool bounded = disc_.mesh->num_boundary_facets() > 0;
  if (!bounded) config_.dirichlet.reset();
  mass_ = assemble_mass(V);
  sip_ = assemble_sip(V, config_.nu, sigma_or_default(config_.sigma, disc_.k), config_.dirichlet);
  coupling_ = assemble_coupling(V, *disc_.pressure, config_.dirichlet);
  mean_ = pressure_mean_vector(*disc_.pressure);
  for (const SeparableForcing& f : config_.forcing) forcing_vectors_.push_back(assemble_rhs(V, f.spatial, f.quadrature));
  constrained_ = boundary_normal_dofs(V);
  constrained_values_ = boundary_values(disc_.velocity, constrained_, config_.dirichlet);
  if (config_.convection) convection_.emplace(disc_.velocity, config_.theta, config_.dirichlet);

  nze_ = count_nze(build_matrix(1.5 / config_.dt).first);

  u_[0] = config_.initial ? interpolate(disc_.velocity, config_.initial, -1, config_.initial_subdivisions)
                          : FieldFunction(disc_.velocity, Vector::Zero(V.num_dofs()));
  if (config_.project_initial) {
    if (bounded) throw std::invalid_argument("initial projection needs a fully periodic mesh");
    u_[0] = HelmholtzProjector(disc_).project(u_[0]).projection;
  }
  for (std::size_t i = 0; i < constrained_.size(); ++i)
    u_[0].coefficients()[constrained_[i]] = constrained_values_[static_cast<Eigen::Index>(i)];
  p_ = FieldFunction(disc_.pressure, Vector::Zero(disc_.pressure->num_dofs()));
  initial_norm_ = velocity_norm();
}

std::pair<SparseMatrix, Vector> TransientSolver::build_matrix(double mass_scale) const {
  SparseMatrix a = add(mass_scale, mass_, 1.0, sip_.matrix);
  SparseMatrix s = saddle_matrix(a, coupling_.matrix, mean_);
  Vector lift = Vector::Zero(s.rows());
  constrain_dofs(s, lift, constrained_, constrained_values_);
  return {std::move(s), std::move(lift)};
}

const FieldFunction& TransientSolver::history(int i) const {
  if (i < 0 || i > 2 || i > step_) throw std::out_of_range("velocity history not available");
  return u_[i];
}

double TransientSolver::velocity_norm() const {
  const Vector& u = u_[0].coefficients();
  return std::sqrt(std::max(0.0, u.dot(mass_ * u)));
}

Vector TransientSolver::forcing_at(double t) const {
  Vector f = sip_.rhs;
  for (std::size_t i = 0; i < forcing_vectors_.size(); ++i) {
    const auto& temporal = config_.forcing[i].temporal;
    f += (temporal ? temporal(t) : 1.0) * forcing_vectors_[i];
  }
  return f;
}

Vector TransientSolver::solve_system(const Factorization& f, const Vector& lift, const Vector& momentum_rhs) {
  const int nu = disc_.velocity->num_dofs(), np = disc_.pressure->num_dofs();
  Vector rhs = Vector::Zero(nu + np + 1);
  rhs.head(nu) = momentum_rhs;
  rhs.segment(nu, np) = coupling_.rhs;
  for (int d : constrained_) rhs[d] = 0.0;
  rhs += lift;
  return f.solve(rhs);
}

void TransientSolver::step() {
  const double dt = config_.dt;
  const double t_next = (step_ + 1) * dt;
  const int nu = disc_.velocity->num_dofs(), np = disc_.pressure->num_dofs();
  const Vector& un = u_[0].coefficients();
  Vector conv = convection_ ? convection_->apply(un, un) : Vector::Zero(nu);
  Vector rhs = forcing_at(t_next);
  Vector x;
  if (step_ == 0) {
    auto [a, lift] = build_matrix(1.0 / dt);
    const Factorization euler(std::move(a));
    rhs += mass_ * un / dt - conv;
    x = solve_system(euler, lift, rhs);
  } else {
    if (!bdf2_) {
      auto [a, lift] = build_matrix(1.5 / dt);
      bdf2_.emplace(std::move(a));
      bdf2_lift_ = std::move(lift);
    }
    const Vector& um = u_[1].coefficients();
    rhs += mass_ * (2.0 * un - 0.5 * um) / dt - (2.0 * conv - conv_prev_);
    x = solve_system(*bdf2_, bdf2_lift_, rhs);
  }
  conv_prev_ = std::move(conv);
  u_[2] = std::move(u_[1]);
  u_[1] = std::move(u_[0]);
  u_[0] = FieldFunction(disc_.velocity, x.head(nu));
  p_ = FieldFunction(disc_.pressure, x.segment(nu, np));
  ++step_;

  const double norm = velocity_norm();
  if (!std::isfinite(norm) || (initial_norm_ > 0.0 && norm > config_.blowup_factor * initial_norm_)) {
    std::ostringstream msg;
    msg << "velocity blow-up at t=" << time() << " (||u||=" << norm << ", initial " << initial_norm_ << ")";
    throw BlowUpError(time(), msg.str());
  }
}

// Material derivative --------------------------------------------------------

FieldFunction material_derivative(const FieldFunction& un, const FieldFunction& unm1, const FieldFunction& unm2,
                                  double dt) {
  const auto& V = un.space_ptr();
  if (unm1.space_ptr() != V || unm2.space_ptr() != V)
    throw std::invalid_argument("material_derivative: states live in different spaces");
  const int k = V->degree();
  const auto W = V->family() == Family::vector_dg ? V : build_space(V->mesh_ptr(), Family::vector_dg, k);
  const Mesh& m = V->mesh();
  const TriangleRule& q = triangle_quadrature(3 * k);
  const auto vt = vector_table(V->basis(), q.points);
  const auto wt = vector_table(W->basis(), q.points);
  const int n = V->local_dofs(), nw = W->local_dofs();
  const Vector dudt = (3.0 * un.coefficients() - 4.0 * unm1.coefficients() + unm2.coefficients()) / (2.0 * dt);
  const FieldFunction ut(V, dudt);
  std::vector<VectorShape> phi(n);
  std::vector<double> cu(n), ct(n);
  FieldFunction out(W);
  for (int e = 0; e < m.num_elements(); ++e) {
    un.gather(e, cu);
    ut.gather(e, ct);
    std::vector<double> acc(nw, 0.0);
    for (std::size_t iq = 0; iq < q.size(); ++iq) {
      V->map_shapes(e, vt.at(static_cast<int>(iq)), phi);
      Vec2 u = Vec2::Zero(), d = Vec2::Zero();
      Mat2 g = Mat2::Zero();
      for (int i = 0; i < n; ++i) {
        u += cu[i] * phi[i].value;
        g += cu[i] * phi[i].grad;
        d += ct[i] * phi[i].value;
      }
      const Vec2 f = d + g * u;
      const auto psi = wt.at(static_cast<int>(iq));
      for (int i = 0; i < nw; ++i) acc[i] += q.weights[iq] * f.dot(psi[i].value);
    }
    const auto dofs = W->element_dofs(e);
    for (int i = 0; i < nw; ++i) out.coefficients()[dofs[i]] = acc[i];
  }
  return out;
}

FieldFunction material_derivative(const TransientSolver& s) {
  if (s.step_index() < 2) throw std::logic_error("material derivative needs three time levels (step >= 2)");
  return material_derivative(s.history(0), s.history(1), s.history(2), s.config().dt);
}

}  // namespace nsdg
