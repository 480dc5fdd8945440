#include "nsdg/scenario.hpp"

#include <chrono>
#include <cmath>

namespace nsdg {

namespace {

constexpr double kPi = 3.14159265358979323846;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <class Fn>
auto parse_key(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

Vec2 read_point(const Config& cfg, const std::string& key, Vec2 fallback) {
  const auto v = cfg.get_doubles(key);
  if (!v) return fallback;
  if (v->size() != 2) throw ConfigError(key, "expected two numbers");
  return {(*v)[0], (*v)[1]};
}

void read_periodic(const Config& cfg, bool& px, bool& py) {
  const auto s = cfg.get_string("mesh.periodic");
  if (!s) return;
  if (*s == "xy" || *s == "both") px = py = true;
  else if (*s == "x") px = true, py = false;
  else if (*s == "y") px = false, py = true;
  else if (*s == "none") px = py = false;
  else throw ConfigError("mesh.periodic", "expected one of xy, x, y, none");
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

std::string read_output_dir(const Config& cfg, const std::string& fallback) {
  return cfg.get_string("output.directory").value_or(fallback);
}

}  // namespace

std::string_view to_string(ScenarioKind s) {
  switch (s) {
    case ScenarioKind::noflow: return "noflow";
    case ScenarioKind::lattice: return "lattice";
    case ScenarioKind::gresho: return "gresho";
  }
  return "?";
}

ScenarioKind parse_scenario(std::string_view name) {
  if (name == "noflow") return ScenarioKind::noflow;
  if (name == "lattice") return ScenarioKind::lattice;
  if (name == "gresho") return ScenarioKind::gresho;
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "' (expected noflow, lattice or gresho)");
}

int ScenarioConfig::num_steps() const {
  if (scenario == ScenarioKind::noflow) return 0;
  return static_cast<int>(std::llround(T / dt));
}

ScenarioConfig read_scenario(const Config& cfg) {
  ScenarioConfig c;
  if (const auto s = cfg.get_string("scenario.name"))
    c.scenario = parse_key("scenario.name", [&] { return parse_scenario(*s); });
  const bool noflow = c.scenario == ScenarioKind::noflow;
  if (const auto s = cfg.get_string("scenario.variant")) {
    if (*s == "stokes") c.stokes = true;
    else if (*s != "navier_stokes") throw ConfigError("scenario.variant", "expected navier_stokes or stokes");
  }

  if (const auto s = cfg.get_string("discretization.method"))
    c.method = parse_key("discretization.method", [&] { return parse_method(*s); });
  c.k = cfg.get_int("discretization.k").value_or(c.k);
  c.sigma = cfg.get_double("discretization.sigma").value_or(c.sigma);
  if (cfg.has("discretization.theta")) {
    if (noflow) throw ConfigError("discretization.theta", "not allowed for the noflow scenario (no convection)");
    c.theta = *cfg.get_double("discretization.theta");
  }
  c.initial_subdivisions = cfg.get_int("discretization.initial_subdivisions").value_or(c.initial_subdivisions);
  c.project_initial = cfg.get_bool("discretization.project_initial").value_or(c.project_initial);

  c.periodic_x = c.periodic_y = !noflow;
  if (c.scenario == ScenarioKind::gresho) c.diagonal = Diagonal::crisscross;
  c.n = cfg.get_int("mesh.n").value_or(c.n);
  if (const auto s = cfg.get_string("mesh.diagonal"))
    c.diagonal = parse_key("mesh.diagonal", [&] { return parse_diagonal(*s); });
  c.mesh_file = cfg.get_string("mesh.file").value_or("");
  read_periodic(cfg, c.periodic_x, c.periodic_y);

  c.nu = cfg.get_double("physics.nu").value_or(noflow ? 1.0 : c.nu);
  if (cfg.has("physics.gamma")) {
    if (!noflow) throw ConfigError("physics.gamma", "only used by the noflow scenario");
    c.gamma = *cfg.get_double("physics.gamma");
  }
  if (c.scenario != ScenarioKind::gresho)
    for (const char* key : {"physics.center", "physics.wind"})
      if (cfg.has(key)) throw ConfigError(key, "only used by the gresho scenario");
  c.center = read_point(cfg, "physics.center", c.center);
  c.wind = read_point(cfg, "physics.wind", c.wind);

  if (noflow) {
    for (const char* key : {"time.dt", "time.T", "time.blowup_factor"})
      if (cfg.has(key)) throw ConfigError(key, "not allowed for the steady noflow scenario");
  }
  c.dt = cfg.get_double("time.dt").value_or(c.dt);
  c.T = cfg.get_double("time.T").value_or(c.T);
  c.blowup_factor = cfg.get_double("time.blowup_factor").value_or(c.blowup_factor);

  c.output_dir = read_output_dir(cfg, c.output_dir);
  c.diag_every = cfg.get_int("output.diag_every").value_or(c.diag_every);
  c.snapshot_every = cfg.get_int("output.snapshot_every").value_or(c.snapshot_every);
  c.material_derivative = cfg.get_bool("output.material_derivative").value_or(c.material_derivative);
  validate(c);
  return c;
}

void validate(const ScenarioConfig& c) {
  const bool noflow = c.scenario == ScenarioKind::noflow;
  require(!c.stokes || c.scenario == ScenarioKind::lattice, "scenario.variant",
          "the stokes variant needs the lattice scenario");
  require(c.k >= 2 && c.k <= 8, "discretization.k", "must lie in [2, 8]");
  require(c.sigma >= 0.0, "discretization.sigma", "must be non-negative (0 selects (k+1)(k+2))");
  require(c.theta == 0.0 || c.theta == 1.0, "discretization.theta", "must be 0 (central) or 1 (upwind)");
  require(c.initial_subdivisions >= 0 && c.initial_subdivisions <= 4, "discretization.initial_subdivisions",
          "must lie in [0, 4]");
  require(!c.mesh_file.empty() || c.n >= 1, "mesh.n", "must be positive");
  if (noflow) {
    require(!c.periodic_x && !c.periodic_y, "mesh.periodic", "noflow needs the bounded (non-periodic) square");
  } else {
    require(c.periodic_x && c.periodic_y, "mesh.periodic", std::string(to_string(c.scenario)) +
                                                               " runs on the fully periodic square");
  }
  require(c.nu > 0.0, "physics.nu", "must be positive");
  require(c.gamma > 0.0, "physics.gamma", "must be positive");
  require(c.dt > 0.0, "time.dt", "must be positive");
  require(c.T >= 0.0, "time.T", "must be non-negative");
  require(c.blowup_factor > 1.0, "time.blowup_factor", "must exceed 1");
  if (!noflow) {
    const double steps = c.T / c.dt;
    require(std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, steps), "time.T",
            "must be an integer multiple of time.dt");
  }
  require(c.diag_every >= 1, "output.diag_every", "must be at least 1");
  require(c.snapshot_every >= 0, "output.snapshot_every", "must be non-negative");
  if (c.snapshot_every > 0 && !noflow)
    require(c.num_steps() % c.snapshot_every == 0, "output.snapshot_every",
            "time.T must be a multiple of the snapshot interval");
  require(!(noflow && c.material_derivative), "output.material_derivative", "needs a transient scenario");
  require(!c.output_dir.empty(), "output.directory", "must not be empty");
}

std::shared_ptr<const Mesh> build_mesh(const ScenarioConfig& c) {
  Mesh m = c.mesh_file.empty() ? build_unit_square_mesh(c.n, c.diagonal) : read_mesh_file(c.mesh_file);
  if (c.periodic_x || c.periodic_y) m = apply_periodicity(m, c.periodic_x, c.periodic_y);
  return std::make_shared<const Mesh>(std::move(m));
}

namespace {

RunResult run_noflow_scenario(const ScenarioConfig& c, const std::shared_ptr<const Mesh>& mesh,
                              const std::function<void(const Snapshot&)>& on_snapshot) {
  const Discretization disc = make_discretization(mesh, c.method, c.k);
  StokesProblem pb;
  pb.nu = c.nu;
  pb.sigma = c.sigma;
  pb.forcing = noflow_field(c.gamma);
  pb.forcing_quadrature = noflow_quadrature_degree(c.gamma, c.k);
  pb.dirichlet = [](const Vec2&) { return Vec2::Zero(); };
  const StokesSolution sol = solve_stokes(disc, pb);
  RunResult r;
  r.velocity_dofs = disc.velocity->num_dofs();
  r.pressure_dofs = disc.pressure->num_dofs();
  r.nze = sol.nze;
  r.velocity_l2 = l2_norm(sol.velocity);
  const VectorField zero = [](const Vec2&) { return Vec2::Zero(); };
  r.rows.push_back({0, 0.0, diagnostics(sol.velocity, &zero), {}});
  if (on_snapshot) on_snapshot({0, 0.0, &sol.velocity, &sol.pressure});
  return r;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& c, const std::function<void(const Snapshot&)>& on_snapshot) {
  validate(c);
  const auto t0 = Clock::now();
  const auto mesh = build_mesh(c);
  RunResult r;
  if (c.scenario == ScenarioKind::noflow) {
    r = run_noflow_scenario(c, mesh, on_snapshot);
    r.h = mesh->mesh_size();
    r.wall_seconds = seconds_since(t0);
    return r;
  }

  const Discretization disc = make_discretization(mesh, c.method, c.k);
  TransientConfig tc;
  tc.nu = c.nu;
  tc.dt = c.dt;
  tc.theta = c.theta;
  tc.sigma = c.sigma;
  tc.blowup_factor = c.blowup_factor;
  tc.convection = !c.stokes;
  std::function<VectorField(double)> exact;
  if (c.scenario == ScenarioKind::lattice) {
    const double nu = c.nu;
    tc.initial = lattice_field(0.0, nu);
    exact = [nu](double t) { return lattice_field(t, nu); };
    if (c.stokes) {
      SeparableForcing f;
      f.spatial = [nu](const Vec2& x) -> Vec2 { return -lattice_convection(0.0, x, nu); };
      f.temporal = [nu](double t) { return std::exp(-16.0 * kPi * kPi * nu * t); };
      f.quadrature = data_quadrature_degree(c.k);
      tc.forcing.push_back(std::move(f));
    }
  } else {
    const GreshoParams gp{c.center, c.wind};
    tc.initial = [gp](const Vec2& x) { return gresho_initial(x, gp); };
    tc.initial_subdivisions = c.initial_subdivisions;
    tc.project_initial = c.project_initial;
  }

  TransientSolver solver(disc, tc);
  r.velocity_dofs = disc.velocity->num_dofs();
  r.pressure_dofs = disc.pressure->num_dofs();
  r.nze = solver.nze();
  r.h = mesh->mesh_size();

  const DiagnosticsEvaluator evaluator(disc.velocity);
  const int diag_quad = 2 * c.k + 4;
  std::optional<HelmholtzProjector> projector;
  SpaceTimeError spacetime;
  const int steps = c.num_steps();

  auto record = [&](bool diag_row) {
    const int n = solver.step_index();
    const double t = solver.time();
    std::optional<VectorField> ex;
    if (exact) ex = exact(t);
    if (diag_row) {
      DiagnosticsRow row{n, t, evaluator.evaluate(solver.velocity(), ex ? &*ex : nullptr), {}};
      if (c.material_derivative && n >= 2) {
        if (!projector) projector.emplace(make_discretization(mesh, Method::hdiv, c.k));
        row.matderiv = decompose(*projector, material_derivative(solver), 1.5);
      }
      if (ex) spacetime.add(t, row.fields.l2_error);
      r.rows.push_back(row);
    } else if (ex) {
      spacetime.add(t, l2_error(solver.velocity(), *ex, diag_quad));
    }
    if (on_snapshot && (n == 0 || (c.snapshot_every > 0 && n % c.snapshot_every == 0)))
      on_snapshot({n, t, &solver.velocity(), &solver.pressure()});
  };

  record(true);
  try {
    for (int n = 1; n <= steps; ++n) {
      solver.step();
      record(n % c.diag_every == 0 || n == steps);
    }
  } catch (const BlowUpError& e) {
    r.blew_up = true;
    r.blowup_time = e.time();
    r.failure = e.what();
    record(true);
  }
  r.steps = solver.step_index();
  r.final_time = solver.time();
  r.velocity_l2 = l2_norm(solver.velocity());
  if (exact) r.spacetime_error = spacetime.value();
  r.wall_seconds = seconds_since(t0);
  return r;
}

// Convergence -----------------------------------------------------------------

ConvergenceConfig read_convergence(const Config& cfg) {
  for (const char* key : {"mesh.n", "mesh.file"})
    if (cfg.has(key)) throw ConfigError(key, "mesh size is set by convergence.base_n and convergence.levels");
  ConvergenceConfig c;
  c.base = read_scenario(cfg);
  c.levels = cfg.get_ints("convergence.levels").value_or(c.levels);
  c.base_n = cfg.get_int("convergence.base_n").value_or(c.base_n);
  require(c.base.scenario == ScenarioKind::lattice, "scenario.name",
          "convergence needs a scenario with an exact solution (lattice)");
  require(c.base.T > 0.0, "time.T", "must be positive for a space-time error");
  require(!c.levels.empty(), "convergence.levels", "must not be empty");
  for (std::size_t i = 0; i < c.levels.size(); ++i) {
    require(c.levels[i] >= 1 && c.levels[i] <= 10, "convergence.levels", "levels must lie in [1, 10]");
    require(i == 0 || c.levels[i] > c.levels[i - 1], "convergence.levels", "levels must be increasing");
  }
  require(c.base_n >= 1, "convergence.base_n", "must be positive");
  return c;
}

ConvergenceResult run_convergence(const ConvergenceConfig& c) {
  ConvergenceResult out;
  std::vector<double> hs, errs;
  for (int level : c.levels) {
    ScenarioConfig s = c.base;
    s.n = c.base_n << (level - 1);
    s.snapshot_every = 0;
    s.material_derivative = false;
    s.diag_every = std::max(1, s.num_steps());
    const RunResult r = run_scenario(s);
    if (r.blew_up) throw BlowUpError(r.blowup_time, "level " + std::to_string(level) + ": " + r.failure);
    ConvergenceRow row;
    row.level = level;
    row.n = s.n;
    row.h = r.h;
    row.dofs = r.dofs();
    row.nze = r.nze;
    row.error = r.spacetime_error;
    row.wall_seconds = r.wall_seconds;
    if (!out.rows.empty())
      row.observed_order = std::log(out.rows.back().error / row.error) / std::log(out.rows.back().h / row.h);
    out.rows.push_back(row);
    hs.push_back(row.h);
    errs.push_back(row.error);
  }
  if (hs.size() >= 2) out.fitted_order = observed_order(hs, errs);
  return out;
}

// Helmholtz -------------------------------------------------------------------

HelmholtzConfig read_helmholtz(const Config& cfg) {
  HelmholtzConfig c;
  if (const auto s = cfg.get_string("helmholtz.field")) {
    if (*s == "gradient") c.field = HelmholtzField::gradient;
    else if (*s == "lattice_convection") c.field = HelmholtzField::lattice_convection;
    else throw ConfigError("helmholtz.field", "expected gradient or lattice_convection");
  }
  c.ks = cfg.get_ints("helmholtz.ks").value_or(c.ks);
  c.ns = cfg.get_ints("helmholtz.ns").value_or(c.ns);
  c.p = cfg.get_double("helmholtz.p").value_or(c.p);
  if (const auto s = cfg.get_string("mesh.diagonal"))
    c.diagonal = parse_key("mesh.diagonal", [&] { return parse_diagonal(*s); });
  bool px = c.periodic, py = c.periodic;
  read_periodic(cfg, px, py);
  require(px == py, "mesh.periodic", "expected xy or none");
  c.periodic = px;
  c.output_dir = read_output_dir(cfg, c.output_dir);
  require(!c.ks.empty(), "helmholtz.ks", "must not be empty");
  for (int k : c.ks) require(k >= 2 && k <= 8, "helmholtz.ks", "degrees must lie in [2, 8]");
  require(!c.ns.empty(), "helmholtz.ns", "must not be empty");
  for (int n : c.ns) require(n >= 1, "helmholtz.ns", "mesh sizes must be positive");
  require(c.p >= 1.0, "helmholtz.p", "must be at least 1");
  return c;
}

VectorField helmholtz_field(HelmholtzField f) {
  if (f == HelmholtzField::lattice_convection) return [](const Vec2& x) { return lattice_convection(0.0, x, 0.0); };
  return [](const Vec2& x) -> Vec2 {
    const double a = 2.0 * kPi * x.x(), b = 2.0 * kPi * x.y();
    return 2.0 * kPi * Vec2(std::cos(a) * std::sin(b), std::sin(a) * std::cos(b));
  };
}

HelmholtzStudy run_helmholtz(const HelmholtzConfig& c) {
  HelmholtzStudy out;
  const VectorField g = helmholtz_field(c.field);
  for (int k : c.ks)
    for (int n : c.ns) {
      Mesh m = build_unit_square_mesh(n, c.diagonal);
      if (c.periodic) m = apply_periodicity(m, true, true);
      const auto mesh = std::make_shared<const Mesh>(std::move(m));
      const HelmholtzProjector pdiv(make_discretization(mesh, Method::hdiv, k));
      const HelmholtzProjector pl2(make_discretization(mesh, Method::l2dg, k));
      const HelmholtzResult a = pdiv.project(g);
      const HelmholtzResult b = pl2.project(g);
      HelmholtzRow row;
      row.k = k;
      row.n = n;
      row.h = mesh->mesh_size();
      row.hdiv_dofs = pdiv.discretization().num_dofs();
      row.l2dg_dofs = pl2.discretization().num_dofs();
      row.hdiv_l2 = l2_norm(a.projection);
      row.l2dg_l2 = l2_norm(b.projection);
      row.diff_p = lp_norm_difference(a.projection, b.projection, c.p);
      out.rows.push_back(row);
    }
  return out;
}

// No-flow ---------------------------------------------------------------------

NoflowConfig read_noflow(const Config& cfg) {
  NoflowConfig c;
  c.gammas = cfg.get_doubles("noflow.gammas").value_or(c.gammas);
  c.ks = cfg.get_ints("noflow.ks").value_or(c.ks);
  if (const auto ms = cfg.get_strings("noflow.methods")) {
    c.methods.clear();
    for (const auto& s : *ms) c.methods.push_back(parse_key("noflow.methods", [&] { return parse_method(s); }));
  }
  c.n = cfg.get_int("mesh.n").value_or(c.n);
  if (const auto s = cfg.get_string("mesh.diagonal"))
    c.diagonal = parse_key("mesh.diagonal", [&] { return parse_diagonal(*s); });
  c.nu = cfg.get_double("physics.nu").value_or(c.nu);
  c.output_dir = read_output_dir(cfg, c.output_dir);
  require(!c.gammas.empty(), "noflow.gammas", "must not be empty");
  for (double g : c.gammas) require(g > 0.0, "noflow.gammas", "exponents must be positive");
  require(!c.ks.empty(), "noflow.ks", "must not be empty");
  for (int k : c.ks) require(k >= 2 && k <= 8, "noflow.ks", "degrees must lie in [2, 8]");
  require(!c.methods.empty(), "noflow.methods", "must not be empty");
  require(c.n >= 1, "mesh.n", "must be positive");
  require(c.nu > 0.0, "physics.nu", "must be positive");
  return c;
}

std::vector<NoflowRow> run_noflow(const NoflowConfig& c) {
  std::vector<NoflowRow> rows;
  for (Method m : c.methods)
    for (int k : c.ks)
      for (double gamma : c.gammas) {
        ScenarioConfig s;
        s.scenario = ScenarioKind::noflow;
        s.method = m;
        s.k = k;
        s.n = c.n;
        s.diagonal = c.diagonal;
        s.periodic_x = s.periodic_y = false;
        s.nu = c.nu;
        s.gamma = gamma;
        const RunResult r = run_scenario(s);
        rows.push_back({m, k, gamma, r.dofs(), r.nze, r.velocity_l2, r.wall_seconds});
      }
  return rows;
}

}  // namespace nsdg
