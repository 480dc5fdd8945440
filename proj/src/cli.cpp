#include "nsdg/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace nsdg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
}

std::string join(std::initializer_list<std::string> fields) {
  std::string s;
  for (const auto& f : fields) {
    if (!s.empty()) s += ',';
    s += f;
  }
  return s + '\n';
}

std::string str(std::int64_t v) { return std::to_string(v); }

}  // namespace

std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows) {
  std::string s = std::string(kDiagnosticsHeader) + '\n';
  for (const auto& r : rows) {
    const auto& f = r.fields;
    s += join({str(r.step), format_number(r.t), format_number(f.kinetic), format_number(f.enstrophy),
               format_number(f.palinstrophy), format_number(f.l2_error), format_number(f.div_norm),
               format_number(r.matderiv.total), format_number(r.matderiv.div_part),
               format_number(r.matderiv.grad_part)});
  }
  return s;
}

std::string convergence_csv(const ConvergenceResult& result) {
  std::string s = std::string(kConvergenceHeader) + '\n';
  for (const auto& r : result.rows)
    s += join({str(r.level), format_number(r.h), str(r.dofs), str(r.nze), format_number(r.error),
               format_number(r.observed_order)});
  return s;
}

std::string helmholtz_csv(const HelmholtzStudy& study) {
  std::string s = std::string(kHelmholtzHeader) + '\n';
  for (const auto& r : study.rows)
    s += join({str(r.k), str(r.n), format_number(r.h), str(r.hdiv_dofs), str(r.l2dg_dofs), format_number(r.hdiv_l2),
               format_number(r.l2dg_l2), format_number(r.diff_p)});
  return s;
}

std::string noflow_csv(const std::vector<NoflowRow>& rows) {
  std::string s = std::string(kNoflowHeader) + '\n';
  for (const auto& r : rows)
    s += join({std::string(to_string(r.method)), str(r.k), format_number(r.gamma), str(r.dofs), str(r.nze),
               format_number(r.velocity_l2)});
  return s;
}

std::string vtk_snapshot(const Snapshot& s) {
  const FieldFunction& u = *s.velocity;
  const Mesh& m = u.space().mesh();
  std::ostringstream o;
  o.precision(12);
  o << std::scientific;
  o << "# vtk DataFile Version 3.0\n";
  o << "nsdg step " << s.step << " t " << format_number(s.t) << "\n";
  o << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  o << "POINTS " << m.num_vertices() << " double\n";
  for (const Vec2& v : m.vertices()) o << v.x() << ' ' << v.y() << " 0\n";
  o << "CELLS " << m.num_elements() << ' ' << 4 * m.num_elements() << '\n';
  for (const auto& t : m.triangles()) o << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  o << "CELL_TYPES " << m.num_elements() << '\n';
  for (int e = 0; e < m.num_elements(); ++e) o << "5\n";

  o << "POINT_DATA " << m.num_vertices() << "\nVECTORS u double\n";
  for (int v = 0; v < m.num_vertices(); ++v) {
    const int e = m.vertex_element()[v];
    const Vec2 val = e < 0 ? Vec2::Zero() : evaluate_vector(u, e, m.map(e).to_reference(m.vertices()[v]));
    o << val.x() << ' ' << val.y() << " 0\n";
  }

  const FeSpace& V = u.space();
  const std::vector<Vec2> centroid{Vec2(1.0 / 3.0, 1.0 / 3.0)};
  const auto table = vector_table(V.basis(), centroid);
  std::vector<VectorShape> phi(V.local_dofs());
  std::vector<double> c(V.local_dofs());
  o << "CELL_DATA " << m.num_elements() << '\n';
  if (s.pressure) {
    o << "SCALARS p double 1\nLOOKUP_TABLE default\n";
    for (int e = 0; e < m.num_elements(); ++e) o << evaluate_scalar(*s.pressure, e, centroid[0]) << '\n';
  }
  o << "SCALARS omega double 1\nLOOKUP_TABLE default\n";
  for (int e = 0; e < m.num_elements(); ++e) {
    u.gather(e, c);
    V.map_shapes(e, table.at(0), phi);
    Mat2 g = Mat2::Zero();
    for (int i = 0; i < V.local_dofs(); ++i) g += c[i] * phi[i].grad;
    o << g(1, 0) - g(0, 1) << '\n';
  }
  return o.str();
}

std::string run_summary_json(const ScenarioConfig& c, const RunResult& r) {
  json j;
  j["command"] = "run";
  j["csv_schema_version"] = kCsvSchemaVersion;
  j["scenario"] = std::string(to_string(c.scenario));
  j["variant"] = c.stokes ? "stokes" : "navier_stokes";
  j["method"] = std::string(to_string(c.method));
  j["k"] = c.k;
  j["h"] = r.h;
  j["velocity_dofs"] = r.velocity_dofs;
  j["pressure_dofs"] = r.pressure_dofs;
  j["dofs"] = r.dofs();
  j["nze"] = r.nze;
  j["steps"] = r.steps;
  j["final_time"] = r.final_time;
  j["spacetime_l2_error"] = number(r.spacetime_error);
  j["final_velocity_l2"] = number(r.velocity_l2);
  j["blew_up"] = r.blew_up;
  j["blowup_time"] = number(r.blowup_time);
  if (!r.failure.empty()) j["failure"] = r.failure;
  j["wall_time_seconds"] = r.wall_seconds;
  return j.dump(2) + '\n';
}

namespace {

int command_run(const Config& cfg, const std::string& out_override, std::ostream& out) {
  ScenarioConfig c = read_scenario(cfg);
  cfg.reject_unused();
  if (!out_override.empty()) c.output_dir = out_override;
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  const RunResult r = run_scenario(c, [&](const Snapshot& s) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%06d.vtk", s.step);
    write_file(dir / name, vtk_snapshot(s));
  });
  write_file(dir / "diagnostics.csv", diagnostics_csv(r.rows));
  write_file(dir / "summary.json", run_summary_json(c, r));
  out << to_string(c.scenario) << ' ' << to_string(c.method) << " k=" << c.k << ": dofs=" << r.dofs()
      << " nze=" << r.nze << " steps=" << r.steps << " wall=" << r.wall_seconds << "s\n";
  if (r.blew_up) throw BlowUpError(r.blowup_time, r.failure);
  return kExitOk;
}

int command_convergence(const Config& cfg, const std::string& out_override, std::ostream& out) {
  ConvergenceConfig c = read_convergence(cfg);
  cfg.reject_unused();
  if (!out_override.empty()) c.base.output_dir = out_override;
  const fs::path dir(c.base.output_dir);
  const ConvergenceResult r = run_convergence(c);
  write_file(dir / "convergence.csv", convergence_csv(r));
  json j;
  j["command"] = "convergence";
  j["csv_schema_version"] = kCsvSchemaVersion;
  j["scenario"] = std::string(to_string(c.base.scenario));
  j["method"] = std::string(to_string(c.base.method));
  j["k"] = c.base.k;
  j["fitted_order"] = number(r.fitted_order);
  double wall = 0.0;
  for (const auto& row : r.rows) {
    j["levels"].push_back({{"level", row.level}, {"n", row.n}, {"h", row.h}, {"dofs", row.dofs}, {"nze", row.nze},
                           {"err_l2_spacetime", number(row.error)}, {"wall_time_seconds", row.wall_seconds}});
    wall += row.wall_seconds;
  }
  j["wall_time_seconds"] = wall;
  write_file(dir / "summary.json", j.dump(2) + '\n');
  out << "convergence: fitted order " << format_number(r.fitted_order) << '\n';
  return kExitOk;
}

int command_helmholtz(const Config& cfg, const std::string& out_override, std::ostream& out) {
  HelmholtzConfig c = read_helmholtz(cfg);
  cfg.reject_unused();
  if (!out_override.empty()) c.output_dir = out_override;
  const fs::path dir(c.output_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const HelmholtzStudy s = run_helmholtz(c);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(dir / "helmholtz.csv", helmholtz_csv(s));
  json j;
  j["command"] = "helmholtz";
  j["csv_schema_version"] = kCsvSchemaVersion;
  j["field"] = c.field == HelmholtzField::gradient ? "gradient" : "lattice_convection";
  for (int k : c.ks) {
    std::vector<double> h, e;
    int max_dofs = 0;
    for (const auto& r : s.rows)
      if (r.k == k) {
        h.push_back(r.h);
        e.push_back(r.l2dg_l2);
        max_dofs = std::max({max_dofs, r.hdiv_dofs, r.l2dg_dofs});
      }
    const bool fit = h.size() >= 2 && std::all_of(e.begin(), e.end(), [](double v) { return v > 0.0; });
    j["orders"].push_back({{"k", k}, {"l2dg_observed_order", fit ? number(observed_order(h, e)) : json(nullptr)},
                           {"max_dofs", max_dofs}});
  }
  j["wall_time_seconds"] = wall;
  write_file(dir / "summary.json", j.dump(2) + '\n');
  out << "helmholtz: " << s.rows.size() << " rows\n";
  return kExitOk;
}

int command_noflow(const Config& cfg, const std::string& out_override, std::ostream& out) {
  NoflowConfig c = read_noflow(cfg);
  cfg.reject_unused();
  if (!out_override.empty()) c.output_dir = out_override;
  const fs::path dir(c.output_dir);
  const auto rows = run_noflow(c);
  write_file(dir / "noflow.csv", noflow_csv(rows));
  json j;
  j["command"] = "noflow";
  j["csv_schema_version"] = kCsvSchemaVersion;
  double wall = 0.0;
  for (const auto& r : rows) {
    j["cases"].push_back({{"method", std::string(to_string(r.method))}, {"k", r.k}, {"gamma", r.gamma},
                          {"dofs", r.dofs}, {"nze", r.nze}, {"velocity_l2", r.velocity_l2},
                          {"wall_time_seconds", r.wall_seconds}});
    wall += r.wall_seconds;
    out << to_string(r.method) << " k=" << r.k << " gamma=" << r.gamma << ": ||u_h|| = "
        << format_number(r.velocity_l2) << '\n';
  }
  j["wall_time_seconds"] = wall;
  write_file(dir / "summary.json", j.dump(2) + '\n');
  return kExitOk;
}

}  // namespace

int run_command(const std::string& command, const std::string& config_path, const std::string& output_dir,
                std::ostream& out, std::ostream& err) {
  try {
    const Config cfg = Config::load(config_path);
    if (command == "run") return command_run(cfg, output_dir, out);
    if (command == "convergence") return command_convergence(cfg, output_dir, out);
    if (command == "helmholtz") return command_helmholtz(cfg, output_dir, out);
    if (command == "noflow") return command_noflow(cfg, output_dir, out);
    err << "unknown command '" << command << "'\n";
    return kExitConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const MeshParseError& e) {
    err << "config error: mesh.file: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const MeshTopologyError& e) {
    err << "config error: mesh.file: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const BlowUpError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolverFailure;
  } catch (const std::exception& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolverFailure;
  }
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Pressure-robust DG benchmark lab for 2D incompressible flow"};
  app.require_subcommand(1);
  std::string config_path, output_dir;
  const std::pair<const char*, const char*> commands[] = {
      {"run", "Run one scenario: diagnostics CSV, VTK snapshots, summary.json"},
      {"convergence", "Sweep mesh levels: space-time errors and observed orders"},
      {"helmholtz", "Helmholtz projector consistency study for both variants"},
      {"noflow", "No-flow locking matrix (gamma x k x method)"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "Config file (key = value with [sections])")->required();
    sub->add_option("-o,--output-dir", output_dir, "Override output.directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }
  return run_command(app.get_subcommands().front()->get_name(), config_path, output_dir, std::cout, std::cerr);
}

}  // namespace nsdg
