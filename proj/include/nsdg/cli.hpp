#pragma once

#include "nsdg/scenario.hpp"

#include <iosfwd>

namespace nsdg {

enum ExitCode : int { kExitOk = 0, kExitConfigError = 2, kExitSolverFailure = 3 };

inline constexpr int kCsvSchemaVersion = 1;
inline constexpr const char* kDiagnosticsHeader =
    "step,t,kinetic,enstrophy,palinstrophy,l2_err,div_norm,matderiv_32,matderiv_div_32,matderiv_grad_32";
inline constexpr const char* kConvergenceHeader = "level,h,dofs,nze,err_l2_spacetime,observed_order";
inline constexpr const char* kHelmholtzHeader = "k,n,h,hdiv_dofs,l2dg_dofs,hdiv_l2,l2dg_l2,diff_32";
inline constexpr const char* kNoflowHeader = "method,k,gamma,dofs,nze,velocity_l2";

/// Fixed-format number: "%.12e", or "nan" for unavailable values.
std::string format_number(double v);

std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows);
std::string convergence_csv(const ConvergenceResult& result);
std::string helmholtz_csv(const HelmholtzStudy& study);
std::string noflow_csv(const std::vector<NoflowRow>& rows);

/// Legacy ASCII VTK unstructured grid: u sampled at vertices (lowest-index adjacent element),
/// cell data p and omega at element centroids.
std::string vtk_snapshot(const Snapshot& s);

std::string run_summary_json(const ScenarioConfig& c, const RunResult& r);

/// Executes one subcommand (run, convergence, helmholtz, noflow) on a config file.
/// Writes its outputs below the configured directory (or output_dir when non-empty).
int run_command(const std::string& command, const std::string& config_path, const std::string& output_dir,
                std::ostream& out, std::ostream& err);

/// Command-line entry point.
int cli_main(int argc, char** argv);

}  // namespace nsdg
