#pragma once

#include "nsdg/forms.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string_view>

namespace nsdg {

/// hdiv: BDM_k velocity (pressure-robust). l2dg: discontinuous P_k^2 velocity.
enum class Method { hdiv, l2dg };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);
Family velocity_family(Method m);

/// Velocity space of degree k and pressure space of degree k-1 on one mesh.
struct Discretization {
  std::shared_ptr<const Mesh> mesh;
  Method method = Method::hdiv;
  int k = 2;
  std::shared_ptr<const FeSpace> velocity;
  std::shared_ptr<const FeSpace> pressure;

  int num_dofs() const { return velocity->num_dofs() + pressure->num_dofs(); }
};

Discretization make_discretization(std::shared_ptr<const Mesh> mesh, Method method, int k);

/// Boundary-facet normal-moment DOFs of a BDM space (empty for other families).
std::vector<int> boundary_normal_dofs(const FeSpace& vspace);

/// Fixes dofs[i] = values[i] while keeping the matrix symmetric: known columns move
/// to the right-hand side, the row and column become unit vectors (pattern kept).
void constrain_dofs(SparseMatrix& matrix, Vector& rhs, std::span<const int> dofs, const Vector& values);

struct StokesProblem {
  double nu = 1.0;
  double sigma = 0.0;  // <= 0 selects default_penalty(k)
  VectorField forcing;  // empty means f = 0
  int forcing_quadrature = -1;
  std::optional<VectorField> dirichlet;  // g_D; ignored on fully periodic meshes
};

struct StokesSolution {
  FieldFunction velocity;
  FieldFunction pressure;
  double multiplier = 0.0;
  std::int64_t nze = 0;
  double residual = 0.0;  // ||S x - b||_inf / ||b||_inf
};

StokesSolution solve_stokes(const Discretization& disc, const StokesProblem& problem);

struct HelmholtzResult {
  FieldFunction projection;  // P_h(g)
  FieldFunction potential;   // phi_h
  Method variant = Method::hdiv;
};

/// Discrete Helmholtz-Hodge projector: find (P_h g, phi_h) with
///   m_h(P_h g, v) + b_h(v, phi_h) = (g, v),   b_h(P_h g, q) = 0.
/// The saddle matrix is factorized once and reused for every projection.
class HelmholtzProjector {
public:
  explicit HelmholtzProjector(Discretization disc);

  HelmholtzResult project(const VectorField& g, int quad_degree = -1) const;
  HelmholtzResult project(const FieldFunction& g) const;
  /// From a precomputed load vector (g, v_h).
  HelmholtzResult project_load(const Vector& load) const;

  const Discretization& discretization() const { return disc_; }
  std::int64_t nze() const { return count_nze(factor_->matrix()); }

private:
  Discretization disc_;
  std::vector<int> constrained_;
  std::optional<Factorization> factor_;
};

HelmholtzResult helmholtz_project(const VectorField& g, std::shared_ptr<const Mesh> mesh, Method variant, int k);

/// Forcing term spatial(x) * temporal(t).
struct SeparableForcing {
  VectorField spatial;
  std::function<double(double)> temporal;  // empty means 1
  int quadrature = -1;
};

struct TransientConfig {
  double nu = 1e-5;
  double dt = 1e-4;
  double theta = 1.0;
  double sigma = 0.0;  // <= 0 selects default_penalty(k)
  bool convection = true;
  VectorField initial;
  int initial_subdivisions = 0;  // composite-rule level for interpolating kinked initial data
  bool project_initial = false;  // replace u^0 by its discrete Helmholtz projection (periodic meshes)
  std::vector<SeparableForcing> forcing;
  std::optional<VectorField> dirichlet;
  double blowup_factor = 1e3;
};

class BlowUpError : public std::runtime_error {
public:
  BlowUpError(double t, const std::string& what) : std::runtime_error(what), time_(t) {}
  double time() const { return time_; }

private:
  double time_;
};

/// SBDF2 IMEX integrator: BDF2 for the Stokes part, second-order extrapolation of
/// the convection term. The first step is IMEX Euler.
class TransientSolver {
public:
  TransientSolver(Discretization disc, TransientConfig config);

  /// Advances one step; throws BlowUpError when the velocity norm explodes.
  void step();

  int step_index() const { return step_; }
  double time() const { return step_ * config_.dt; }
  const Discretization& discretization() const { return disc_; }
  const TransientConfig& config() const { return config_; }

  const FieldFunction& velocity() const { return u_[0]; }
  const FieldFunction& pressure() const { return p_; }
  /// u^{n-i}, i = 0, 1, 2; available for i <= step_index().
  const FieldFunction& history(int i) const;

  /// NZE of the SBDF2 system matrix M*.
  std::int64_t nze() const { return nze_; }
  double velocity_norm() const;

private:
  Vector forcing_at(double t) const;
  Vector solve_system(const Factorization& f, const Vector& lift, const Vector& momentum_rhs);
  std::pair<SparseMatrix, Vector> build_matrix(double mass_scale) const;

  Discretization disc_;
  TransientConfig config_;
  int step_ = 0;
  SparseMatrix mass_;
  AssembledOperator sip_;
  AssembledOperator coupling_;
  Vector mean_;
  std::vector<Vector> forcing_vectors_;
  std::vector<int> constrained_;
  Vector constrained_values_;
  std::optional<ConvectionOperator> convection_;
  std::optional<Factorization> bdf2_;
  Vector bdf2_lift_;
  std::int64_t nze_ = 0;
  FieldFunction u_[3];
  FieldFunction p_;
  Vector conv_prev_;
  double initial_norm_ = 0.0;
};

/// f_h^t = (3u^n - 4u^{n-1} + u^{n-2}) / (2 dt) + (u^n . grad_h) u^n, projected
/// elementwise in L2 onto discontinuous P_k^2. Requires step_index() >= 2.
FieldFunction material_derivative(const TransientSolver& solver);
FieldFunction material_derivative(const FieldFunction& un, const FieldFunction& unm1, const FieldFunction& unm2,
                                  double dt);

}  // namespace nsdg
