#pragma once

#include "nsdg/solver.hpp"

#include <limits>

namespace nsdg {

// Exact solutions and data ---------------------------------------------------

/// 2D planar lattice flow: u0 = (sin 2pi x sin 2pi y, cos 2pi x cos 2pi y), decaying like exp(-8 pi^2 nu t).
Vec2 lattice_exact(double t, const Vec2& x, double nu);
/// Its convection term (u . grad) u = (pi sin 4pi x, -pi sin 4pi y) exp(-16 pi^2 nu t), a gradient field.
Vec2 lattice_convection(double t, const Vec2& x, double nu);
VectorField lattice_field(double t, double nu);

struct GreshoParams {
  Vec2 center{0.5, 0.5};
  Vec2 wind{0.0, 0.0};
};

/// Gresho (triangle) vortex: angular speed 5r for r < 0.2, 2 - 5r for r < 0.4, 0 beyond, plus wind.
Vec2 gresho_initial(const Vec2& x, const GreshoParams& p = {});
/// Kinetic energy 1/2 int |u0 - w0|^2 of the vortex part, 2 pi int_0^0.4 u_phi(r)^2 r dr / 2.
double gresho_vortex_kinetic_energy();

/// f = grad(phi) / int phi with phi = y^gamma on the unit square: (0, gamma (gamma+1) y^(gamma-1)).
Vec2 noflow_forcing(double gamma, const Vec2& x);
VectorField noflow_field(double gamma);
/// Quadrature degree integrating the no-flow forcing exactly against degree-k test functions.
int noflow_quadrature_degree(double gamma, int k);

// Diagnostics ----------------------------------------------------------------

inline constexpr double kNotAvailable = std::numeric_limits<double>::quiet_NaN();

struct FieldDiagnostics {
  double kinetic = 0.0;       // 1/2 ||u||^2
  double enstrophy = 0.0;     // 1/2 ||omega_h||^2
  double palinstrophy = 0.0;  // 1/2 ||grad_h omega_h||^2
  double l2_error = kNotAvailable;
  double div_norm = 0.0;  // max_K ||div u||_{L2(K)}
};

/// Quadrature-based scalar diagnostics of velocity fields on one space; shape tables are built once.
class DiagnosticsEvaluator {
public:
  explicit DiagnosticsEvaluator(std::shared_ptr<const FeSpace> vspace, int quad_degree = -1);
  FieldDiagnostics evaluate(const FieldFunction& u, const VectorField* exact = nullptr) const;

private:
  std::shared_ptr<const FeSpace> space_;
  TriangleRule rule_;
  ShapeTable<VectorShape> table_;
};

FieldDiagnostics diagnostics(const FieldFunction& u, const VectorField* exact = nullptr);

/// (int sum_i |v_i|^p)^(1/p), the componentwise L^p convention.
double lp_norm(const FieldFunction& v, double p, int quad_degree = -1);
/// Same norm of a - b for vector fields on the same mesh (possibly different spaces).
double lp_norm_difference(const FieldFunction& a, const FieldFunction& b, double p, int quad_degree = -1);
/// ||v - g||_{L2} against an analytic field.
double l2_error(const FieldFunction& v, const VectorField& g, int quad_degree = -1);
/// L2 norm of a vector or scalar FE function.
double l2_norm(const FieldFunction& v, int quad_degree = -1);

struct DecompositionNorms {
  double total = kNotAvailable;     // ||f||
  double div_part = kNotAvailable;  // ||P_h f||
  double grad_part = kNotAvailable; // ||f - P_h f||
};

/// Helmholtz-Hodge split of f by the projector, measured in L^p.
DecompositionNorms decompose(const HelmholtzProjector& projector, const FieldFunction& f, double p = 1.5);

/// Trapezoidal accumulation of int_0^T e(t)^2 dt from samples (t_i, e_i).
class SpaceTimeError {
public:
  void add(double t, double error);
  /// (int e^2 dt)^(1/2)
  double value() const { return std::sqrt(integral_); }
  double squared() const { return integral_; }
  int samples() const { return count_; }

private:
  double integral_ = 0.0;
  double last_t_ = 0.0;
  double last_e2_ = 0.0;
  int count_ = 0;
};

/// Least-squares slope of log(err) against log(h).
double observed_order(std::span<const double> h, std::span<const double> err);

}  // namespace nsdg
