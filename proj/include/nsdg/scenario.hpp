#pragma once

#include "nsdg/benchmarks.hpp"
#include "nsdg/config.hpp"

#include <functional>

namespace nsdg {

enum class ScenarioKind { noflow, lattice, gresho };

std::string_view to_string(ScenarioKind s);
ScenarioKind parse_scenario(std::string_view name);

/// Declarative description of one run.
struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::lattice;
  bool stokes = false;  // lattice only: convection off, f = -(u.grad)u of the exact solution
  Method method = Method::hdiv;
  int k = 2;

  int n = 8;
  Diagonal diagonal = Diagonal::right;
  std::string mesh_file;  // overrides n/diagonal when set
  bool periodic_x = true;
  bool periodic_y = true;

  double nu = 1e-5;
  double dt = 1e-4;
  double T = 0.0;
  double theta = 1.0;
  double sigma = 0.0;  // <= 0: (k+1)(k+2)
  double gamma = 1.0;  // noflow potential exponent
  Vec2 center{0.5, 0.5};
  Vec2 wind{0.0, 0.0};
  int initial_subdivisions = 2;  // gresho: composite-rule level for the kinked initial data
  bool project_initial = true;   // gresho: start from the discretely divergence-free projection
  double blowup_factor = 1e3;

  int diag_every = 1;
  int snapshot_every = 0;  // 0: no VTK output
  bool material_derivative = false;
  std::string output_dir = "output";

  int num_steps() const;
};

/// Reads sections [scenario], [discretization], [mesh], [physics], [time], [output].
/// Missing keys keep scenario-dependent defaults. Keys of other sections are left unread.
ScenarioConfig read_scenario(const Config& cfg);
/// Throws ConfigError naming the offending key path.
void validate(const ScenarioConfig& c);

std::shared_ptr<const Mesh> build_mesh(const ScenarioConfig& c);

struct DiagnosticsRow {
  int step = 0;
  double t = 0.0;
  FieldDiagnostics fields;
  DecompositionNorms matderiv;  // NaN when not evaluated
};

struct Snapshot {
  int step = 0;
  double t = 0.0;
  const FieldFunction* velocity = nullptr;
  const FieldFunction* pressure = nullptr;
};

struct RunResult {
  std::vector<DiagnosticsRow> rows;
  int velocity_dofs = 0;
  int pressure_dofs = 0;
  std::int64_t nze = 0;
  double h = 0.0;
  int steps = 0;
  double final_time = 0.0;
  double spacetime_error = kNotAvailable;  // (int_0^T ||u_h - u||^2)^(1/2), sampled every step
  double velocity_l2 = 0.0;                 // ||u_h|| at the final state
  bool blew_up = false;
  double blowup_time = kNotAvailable;
  std::string failure;
  double wall_seconds = 0.0;

  int dofs() const { return velocity_dofs + pressure_dofs; }
};

/// Runs one scenario. Blow-up is recorded in the result (rows up to the failure are kept);
/// other solver failures propagate as exceptions.
RunResult run_scenario(const ScenarioConfig& c, const std::function<void(const Snapshot&)>& on_snapshot = {});

// Sweeps ---------------------------------------------------------------------

struct ConvergenceConfig {
  ScenarioConfig base;
  std::vector<int> levels{1, 2, 3};
  int base_n = 2;  // level l uses n = base_n * 2^(l-1)
};

ConvergenceConfig read_convergence(const Config& cfg);

struct ConvergenceRow {
  int level = 0;
  int n = 0;
  double h = 0.0;
  int dofs = 0;
  std::int64_t nze = 0;
  double error = 0.0;
  double observed_order = kNotAvailable;  // against the previous level
  double wall_seconds = 0.0;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  double fitted_order = kNotAvailable;  // least squares over all levels
};

ConvergenceResult run_convergence(const ConvergenceConfig& c);

enum class HelmholtzField { gradient, lattice_convection };

struct HelmholtzConfig {
  HelmholtzField field = HelmholtzField::gradient;
  std::vector<int> ks{2, 3};
  std::vector<int> ns{8, 16, 32};
  Diagonal diagonal = Diagonal::right;
  bool periodic = true;
  double p = 1.5;
  std::string output_dir = "output";
};

HelmholtzConfig read_helmholtz(const Config& cfg);

/// grad(sin 2pi x sin 2pi y) or (u0 . grad) u0 of the lattice flow.
VectorField helmholtz_field(HelmholtzField f);

struct HelmholtzRow {
  int k = 0;
  int n = 0;
  double h = 0.0;
  int hdiv_dofs = 0;
  int l2dg_dofs = 0;
  double hdiv_l2 = 0.0;   // ||P_h^div g||_{L2}
  double l2dg_l2 = 0.0;   // ||P_h^l2 g||_{L2}
  double diff_p = 0.0;    // ||(P_h^div - P_h^l2) g||_{L^p}
};

struct HelmholtzStudy {
  std::vector<HelmholtzRow> rows;
};

HelmholtzStudy run_helmholtz(const HelmholtzConfig& c);

struct NoflowConfig {
  std::vector<double> gammas{1, 2, 4, 9};
  std::vector<int> ks{2};
  std::vector<Method> methods{Method::hdiv, Method::l2dg};
  int n = 8;
  Diagonal diagonal = Diagonal::right;
  double nu = 1.0;
  std::string output_dir = "output";
};

NoflowConfig read_noflow(const Config& cfg);

struct NoflowRow {
  Method method = Method::hdiv;
  int k = 0;
  double gamma = 0.0;
  int dofs = 0;
  std::int64_t nze = 0;
  double velocity_l2 = 0.0;
  double wall_seconds = 0.0;
};

std::vector<NoflowRow> run_noflow(const NoflowConfig& c);

}  // namespace nsdg
