#include "nsdg/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>

using namespace nsdg;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<Outcome()> check;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

ScenarioConfig lattice(Method m, int k, int n, double theta = 1.0, bool stokes = false) {
  ScenarioConfig c;
  c.scenario = ScenarioKind::lattice;
  c.method = m;
  c.k = k;
  c.n = n;
  c.theta = theta;
  c.stokes = stokes;
  c.nu = 1e-5;
  c.dt = 2e-4;
  c.T = 2.0;
  c.diag_every = 500;
  return c;
}

RunResult must_run(const ScenarioConfig& c) {
  RunResult r = run_scenario(c);
  if (r.blew_up) throw std::runtime_error(r.failure);
  return r;
}

Vector random_vector(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

// 1 ---------------------------------------------------------------------------

Outcome noflow_locking() {
  NoflowConfig c;
  c.gammas = {1, 2, 4, 9};
  c.ks = {2};
  c.n = 8;
  const auto rows = run_noflow(c);
  bool ok = true;
  double hdiv_max = 0.0, slowest = 0.0;
  std::vector<double> l2;
  for (const auto& r : rows) {
    slowest = std::max(slowest, r.wall_seconds);
    if (r.method == Method::hdiv) {
      hdiv_max = std::max(hdiv_max, r.velocity_l2);
      ok &= r.velocity_l2 <= 1e-10;
    } else {
      l2.push_back(r.velocity_l2);
    }
  }
  ok &= l2.size() == 4 && l2[0] <= 1e-10 && l2[2] >= 1e-6 && l2[3] >= 1e-6;
  for (std::size_t i = 1; i < l2.size(); ++i) ok &= l2[i] > l2[i - 1];
  ok &= slowest < 10.0;
  std::string d = "hdiv max ||u_h|| " + fmt(hdiv_max) + " (<= 1e-10); l2dg ||u_h|| for gamma 1,2,4,9:";
  for (double v : l2) d += " " + fmt(v);
  d += " (gamma=1 <= 1e-10, gamma 4,9 >= 1e-6, increasing); slowest case " + fmt(slowest) + " s";
  return {ok, d};
}

// 2 ---------------------------------------------------------------------------

Outcome helmholtz_consistency() {
  HelmholtzConfig c;
  c.field = HelmholtzField::gradient;
  c.ks = {2, 3};
  c.ns = {8, 16, 32};
  const HelmholtzStudy s = run_helmholtz(c);
  bool ok = true;
  double hdiv_max = 0.0;
  std::string d;
  for (int k : c.ks) {
    std::vector<double> h, e;
    for (const auto& r : s.rows) {
      if (r.k != k) continue;
      hdiv_max = std::max(hdiv_max, r.hdiv_l2);
      h.push_back(r.h);
      e.push_back(r.l2dg_l2);
    }
    const double order = observed_order(h, e);
    const double need = (k - 1) - 0.3;
    ok &= order >= need;
    d += "l2dg k=" + std::to_string(k) + " order " + fmt(order) + " (>= " + fmt(need) + "); ";
  }
  ok &= hdiv_max <= 1e-9;
  d += "hdiv max ||P_h grad psi|| " + fmt(hdiv_max) + " (<= 1e-9)";
  return {ok, d};
}

// 3, 4 --------------------------------------------------------------------------

// hdiv k=2 on n=8 is shared by criteria 3 and 4.
const RunResult& hdiv_k2_n8() {
  static const RunResult r = must_run(lattice(Method::hdiv, 2, 8));
  return r;
}

Outcome lattice_separation() {
  bool ok = true;
  std::string d;
  for (int n : {8, 16}) {
    const RunResult& h = n == 8 ? hdiv_k2_n8() : must_run(lattice(Method::hdiv, 2, n));
    const RunResult l = must_run(lattice(Method::l2dg, 2, n));
    const double ratio = h.spacetime_error / l.spacetime_error;
    ok &= ratio <= 0.2;
    d += "n=" + std::to_string(n) + ": hdiv " + fmt(h.spacetime_error) + " / l2dg " + fmt(l.spacetime_error) +
         " = " + fmt(ratio) + "; ";
  }
  d += "(limit 0.2)";
  return {ok, d};
}

Outcome order_halving() {
  const RunResult& h = hdiv_k2_n8();
  const RunResult l = must_run(lattice(Method::l2dg, 4, 8));
  const double ratio = h.spacetime_error / l.spacetime_error;
  const bool ok = ratio >= 1.0 / 3.0 && ratio <= 3.0 && h.nze < l.nze;
  return {ok, "n=8: hdiv k=2 " + fmt(h.spacetime_error) + " vs l2dg k=4 " + fmt(l.spacetime_error) + ", ratio " +
                  fmt(ratio) + " (within [1/3, 3]); NZE " + std::to_string(h.nze) + " vs " + std::to_string(l.nze)};
}

// 5, 6 --------------------------------------------------------------------------

Outcome upwind_benefit() {
  const RunResult up = must_run(lattice(Method::hdiv, 3, 4, 1.0));
  const RunResult central = must_run(lattice(Method::hdiv, 3, 4, 0.0));
  return {up.spacetime_error <= central.spacetime_error,
          "hdiv k=3 n=4: theta=1 " + fmt(up.spacetime_error) + " <= theta=0 " + fmt(central.spacetime_error)};
}

Outcome stokes_lower_bound() {
  ScenarioConfig ns = lattice(Method::hdiv, 3, 4);
  ScenarioConfig st = lattice(Method::hdiv, 3, 4, 1.0, true);
  ns.diag_every = st.diag_every = 100;
  const RunResult a = must_run(ns), b = must_run(st);
  bool ok = a.rows.size() == b.rows.size() && !a.rows.empty();
  double worst = 0.0;
  for (std::size_t i = 0; ok && i < a.rows.size(); ++i) {
    const double ratio = b.rows[i].fields.l2_error / a.rows[i].fields.l2_error;
    worst = std::max(worst, ratio);
    ok &= b.rows[i].t == a.rows[i].t && ratio <= 1.05;
  }
  return {ok, std::to_string(a.rows.size()) + " diagnostic times; max stokes/navier-stokes error ratio " + fmt(worst) +
                  " (<= 1.05)"};
}

// 7 ---------------------------------------------------------------------------

Outcome gresho_structure() {
  ScenarioConfig c;
  c.scenario = ScenarioKind::gresho;
  c.k = 4;
  c.n = 32;
  c.diagonal = Diagonal::crisscross;
  c.nu = 1e-5;
  c.dt = 5e-4;
  c.T = 1.0;
  c.theta = 1.0;
  c.diag_every = 20;
  c.method = Method::hdiv;
  c.material_derivative = true;
  const RunResult h = run_scenario(c);
  c.method = Method::l2dg;
  c.material_derivative = false;
  const RunResult l = run_scenario(c);

  auto drop = [](const RunResult& r) {
    return (r.rows.front().fields.kinetic - r.rows.back().fields.kinetic) / r.rows.front().fields.kinetic;
  };
  const double dh = drop(h), dl = drop(l);
  bool enstrophy_ok = true;
  for (std::size_t i = 1; i < h.rows.size(); ++i)
    if (h.rows[i - 1].t >= 0.05) enstrophy_ok &= h.rows[i].fields.enstrophy <= h.rows[i - 1].fields.enstrophy;
  double worst = 0.0;
  int checked = 0;
  for (const auto& r : h.rows)
    if (r.t >= 0.1 - 1e-12) {
      worst = std::max(worst, r.matderiv.div_part / r.matderiv.grad_part);
      ++checked;
    }
  const bool ok = !h.blew_up && dh <= 0.01 && dl > dh && enstrophy_ok && checked > 0 && worst <= 0.5;
  std::string d = "KE drop hdiv " + fmt(100 * dh) + "% (<= 1%), l2dg " + fmt(100 * dl) + "%" +
                  (l.blew_up ? " (l2dg blew up at t=" + fmt(l.blowup_time) + ")" : "") +
                  "; hdiv enstrophy non-increasing after t=0.05: " + (enstrophy_ok ? "yes" : "no") +
                  "; max ||P div f||/||grad phi|| for t>=0.1: " + fmt(worst) + " (<= 0.5)";
  return {ok, d};
}

// 8 ---------------------------------------------------------------------------

Outcome projector_difference() {
  HelmholtzConfig c;
  c.field = HelmholtzField::lattice_convection;
  c.ks = {2, 3, 4};
  c.ns = {16};
  const HelmholtzStudy s = run_helmholtz(c);
  bool ok = s.rows.size() == 3;
  std::string d = "||(P_div - P_l2) g||_3/2 at k=2,3,4:";
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    d += " " + fmt(s.rows[i].diff_p);
    if (i > 0) ok &= s.rows[i].diff_p < s.rows[i - 1].diff_p;
  }
  return {ok, d + " (strictly decreasing)"};
}

// 9 ---------------------------------------------------------------------------

Outcome structural_invariants() {
  bool ok = true;
  std::ostringstream d;
  const auto periodic = std::make_shared<const Mesh>(apply_periodicity(build_unit_square_mesh(4, Diagonal::crisscross),
                                                                       true, true));
  double asym = 0.0, skew = 0.0, neg = 0.0;
  for (Family fam : {Family::bdm, Family::vector_dg})
    for (int k : {2, 3, 4}) {
      const auto V = build_space(periodic, fam, k);
      asym = std::max(asym, assemble_sip(*V, 1.0, default_penalty(k)).asymmetry);
      const FieldFunction w = fam == Family::bdm ? interpolate(V, lattice_field(0.0, 1.0))
                                                 : FieldFunction(V, random_vector(V->num_dofs(), 11 + k));
      const Vector u = random_vector(V->num_dofs(), 23 + k), v = random_vector(V->num_dofs(), 37 + k);
      const ConvectionOperator central(V, 0.0), upwind(V, 1.0);
      const Vector cu = central.apply(w.coefficients(), u), cv = central.apply(w.coefficients(), v);
      const double scale = v.cwiseAbs().dot(cu.cwiseAbs()) + u.cwiseAbs().dot(cv.cwiseAbs());
      skew = std::max(skew, std::abs(v.dot(cu) + u.dot(cv)) / scale);
      const Vector uu = upwind.apply(w.coefficients(), u);
      neg = std::max(neg, -u.dot(uu) / u.cwiseAbs().dot(uu.cwiseAbs()));
    }
  ok &= asym <= 1e-12 && skew <= 1e-11 && neg <= 1e-11;
  d << "a_h asymmetry " << fmt(asym) << " (<= 1e-12); c_h skew defect " << fmt(skew) << ", upwind negativity "
    << fmt(std::max(neg, 0.0)) << " (<= 1e-11, relative); ";

  ScenarioConfig traj = lattice(Method::hdiv, 2, 8);
  traj.T = 0.04;
  traj.diag_every = 1;
  double divmax = 0.0;
  for (const auto& r : must_run(traj).rows) divmax = std::max(divmax, r.fields.div_norm);
  ScenarioConfig g;
  g.scenario = ScenarioKind::gresho;
  g.n = 8;
  g.diagonal = Diagonal::crisscross;
  g.k = 3;
  g.dt = 1e-3;
  g.T = 0.02;
  g.wind = Vec2(1.0 / 3.0, 1.0 / 3.0);
  for (const auto& r : must_run(g).rows) divmax = std::max(divmax, r.fields.div_norm);
  ok &= divmax <= 1e-9;
  d << "hdiv max_K ||div u_h|| " << fmt(divmax) << " (<= 1e-9); ";

  double pmean = 0.0;
  const auto square = std::make_shared<const Mesh>(build_unit_square_mesh(6));
  for (Method m : {Method::hdiv, Method::l2dg}) {
    const Discretization disc = make_discretization(square, m, 3);
    StokesProblem pb;
    pb.forcing = noflow_field(4.0);
    pb.dirichlet = [](const Vec2&) { return Vec2::Zero(); };
    const StokesSolution s = solve_stokes(disc, pb);
    pmean = std::max(pmean, std::abs(pressure_mean_vector(*disc.pressure).dot(s.pressure.coefficients())));
    TransientConfig tc;
    tc.dt = 1e-2;
    tc.initial = lattice_field(0.0, tc.nu);
    TransientSolver ts(make_discretization(periodic, m, 2), tc);
    for (int i = 0; i < 3; ++i) ts.step();
    pmean = std::max(pmean, std::abs(pressure_mean_vector(*ts.pressure().space_ptr()).dot(
                                ts.pressure().coefficients())));
  }
  ok &= pmean <= 1e-12;
  d << "|mean p_h| " << fmt(pmean) << " (<= 1e-12); ";

  ScenarioConfig small = lattice(Method::hdiv, 2, 4);
  small.T = 0.02;
  small.diag_every = 5;
  small.snapshot_every = 100;
  small.material_derivative = true;
  auto render = [&] {
    std::string vtk;
    const RunResult r = run_scenario(small, [&](const Snapshot& s) { vtk += vtk_snapshot(s); });
    return diagnostics_csv(r.rows) + vtk;
  };
  const bool same = render() == render();
  ok &= same;
  d << "re-run byte-identical: " << (same ? "yes" : "no");
  return {ok, d.str()};
}

// 10 --------------------------------------------------------------------------

Outcome decay_rate() {
  ScenarioConfig c = lattice(Method::hdiv, 3, 16);
  c.nu = 1e-2;
  c.dt = 1e-3;
  c.T = 0.5;
  c.diag_every = 10;
  const RunResult r = must_run(c);
  std::vector<double> t, logn;
  for (const auto& row : r.rows) {
    t.push_back(row.t);
    logn.push_back(0.5 * std::log(2.0 * row.fields.kinetic));
  }
  double mt = 0, my = 0;
  for (std::size_t i = 0; i < t.size(); ++i) mt += t[i], my += logn[i];
  mt /= t.size();
  my /= t.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < t.size(); ++i) sxy += (t[i] - mt) * (logn[i] - my), sxx += (t[i] - mt) * (t[i] - mt);
  const double rate = -sxy / sxx;
  const double exact = 8.0 * kPi * kPi * c.nu;
  const double rel = std::abs(rate - exact) / exact;
  return {rel <= 0.02, "fitted rate " + fmt(rate) + " vs 8 pi^2 nu = " + fmt(exact) + ", relative deviation " +
                           fmt(rel) + " (<= 0.02)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "no-flow locking", 4 * 2 * 10.0, noflow_locking},
      {2, "Helmholtz consistency", 60.0, helmholtz_consistency},
      {3, "lattice pressure-robust separation", 15 * 60.0, lattice_separation},
      {4, "order halving", 20 * 60.0, order_halving},
      {5, "upwind benefit", 1e9, upwind_benefit},
      {6, "Stokes lower bound", 1e9, stokes_lower_bound},
      {7, "Gresho structure preservation", 30 * 60.0, gresho_structure},
      {8, "projector difference decays in k", 1e9, projector_difference},
      {9, "structural invariants", 2 * 60.0, structural_invariants},
      {10, "decay rate", 5 * 60.0, decay_rate},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_seconds;
    const bool pass = o.pass && in_budget;
    failures += !pass;
    std::printf("criterion %2d %s  %s: %s; %.1f s%s\n", c.id, pass ? "PASS" : "FAIL", c.title, o.detail.c_str(),
                secs, in_budget ? "" : " (over runtime budget)");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
