#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "spike/io.hpp"

namespace spike::cli {

namespace {

namespace fs = std::filesystem;

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

struct Context {
  std::string command;
  json config;
  fs::path out;
  std::ostream& log;
  std::vector<Check> checks;

  void check(const std::string& name, bool pass, const std::string& detail) {
    checks.push_back({name, pass, detail});
    log << (pass ? "PASS " : "FAIL ") << command << "/" << name << ": " << detail << "\n";
  }
  double num(const char* key) const { return config.at(key).get<double>(); }
  int integer(const char* key) const { return config.at(key).get<int>(); }
  std::vector<double> list(const char* key) const { return config.at(key).get<std::vector<double>>(); }
  json document() const { return json{{"meta", meta_block(command, config)}}; }
};

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

/// Profile for dimension n, or for the configured n when n = 0.
GroundStateProfile profile_of(const Context& c, int n = 0) {
  ShootOptions so;
  so.r_max = c.config.value("r_max", 30.0);
  so.grid_step = c.config.value("grid_step", 1e-3);
  so.shoot_tol = c.config.value("shoot_tol", 1e-6);
  return solve_ground_state({n > 0 ? n : c.integer("n"), c.num("p")}, so);
}

BoundaryManifold manifold_of(const Context& c) { return parse_manifold(c.config.at("manifold")); }

BoundaryPoint xi_of(const Context& c, const BoundaryManifold& m) {
  if (c.config.contains("xi_point")) {
    auto xy = c.config["xi_point"].get<std::vector<double>>();
    return closest_boundary_point(m, Vec3(xy[0], xy[1], 0.0));
  }
  return {c.config.value("xi", 0.0), c.config.value("xi_phi", 0.0)};
}

double rcut_of(const Context& c, const BoundaryManifold& m) {
  double R = c.config.value("R_cut", 0.0);
  return R > 0 ? R : 0.9 * m.chart_radius();
}

/// Deterministic smooth test field number k: 1 + sum of three plane waves.
double test_field(std::uint64_t k, const Vec2& x) {
  auto unit = [](std::uint64_t s) {
    s += 0x9e3779b97f4a7c15ull;
    s = (s ^ (s >> 30)) * 0xbf58476d1ce4e5b9ull;
    s = (s ^ (s >> 27)) * 0x94d049bb133111ebull;
    s ^= s >> 31;
    return static_cast<double>(s >> 11) * 0x1.0p-53;
  };
  double v = 1.0;
  for (std::uint64_t j = 0; j < 3; ++j) {
    std::uint64_t s = 16 * k + 4 * j;
    double kx = 6.0 * unit(s) - 3.0, ky = 6.0 * unit(s + 1) - 3.0;
    double ph = 2.0 * std::numbers::pi * unit(s + 2), amp = unit(s + 3);
    v += amp * std::cos(kx * x.x() + ky * x.y() + ph);
  }
  return v;
}

// ---------------------------------------------------------------------------------------------
// subcommands

void cmd_ground_state(Context& c) {
  GroundStateProfile prof = profile_of(c);
  std::ostringstream csv;
  write_profile_csv(csv, prof);
  write_text(c.out / "profile.csv", csv.str());
  double tail = tail_constant_deviation(prof);
  bool monotone = prof.v.front() > 0;
  for (std::size_t i = 1; i < prof.v.size(); ++i) monotone = monotone && prof.v[i] > 0 && prof.v[i] < prof.v[i - 1];
  json doc = c.document();
  doc["V0"] = prof.v0();
  doc["decay_c"] = prof.decay_c;
  doc["max_residual"] = prof.max_residual;
  doc["r_max"] = prof.r_max;
  doc["grid_step"] = prof.grid_step;
  doc["match_radius"] = prof.match_radius;
  doc["tail_deviation"] = tail;
  c.check("ode-residual", prof.max_residual < c.config.value("shoot_tol", 1e-6), "max residual " + fmt(prof.max_residual));
  c.check("tail-constant", tail < 0.01, "max tail deviation " + fmt(tail));
  c.check("positive-decreasing", monotone, monotone ? "V > 0 and strictly decreasing" : "monotonicity violated");
  const Parameters P = prof.params;
  if (P.n == 1 && (P.p == 3.0 || P.p == 4.0)) {
    double err = 0.0;
    for (std::size_t i = 0; i < prof.r.size(); ++i) {
      double r = prof.r[i];
      double exact = P.p == 4.0 ? std::sqrt(2.0) / std::cosh(r) : 1.5 / std::pow(std::cosh(0.5 * r), 2);
      err = std::max(err, std::abs(prof.v[i] - exact));
    }
    doc["closed_form_error"] = err;
    c.check("closed-form", err < 1e-6, "sup |V - soliton| = " + fmt(err));
  }
  write_json(c.out / "ground_state.json", doc);
}

void cmd_constants(Context& c) {
  GroundStateProfile prof = profile_of(c);
  MomentReport mr = compute_constants(prof);
  json doc = c.document();
  json body = to_json(mr);
  for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
  write_json(c.out / "constants.json", doc);
  c.check("pohozaev", mr.pohozaev_residual < 1e-6, "relative residual " + fmt(mr.pohozaev_residual));
  c.check("moment-identity", mr.moment_identity_residual < 1e-8, "relative error " + fmt(mr.moment_identity_residual));
  c.check("nehari", mr.nehari_residual < 1e-6, "relative residual " + fmt(mr.nehari_residual));
  c.check("positive-constants", mr.C > 0 && mr.alpha > 0, "C = " + fmt(mr.C) + ", alpha = " + fmt(mr.alpha));
}

void cmd_identity_check(Context& c) {
  BoundaryManifold m = manifold_of(c);
  const double eps = c.num("eps"), p = c.num("p");
  const double pc = p / (p - 1.0);
  DiscreteDomain d = DiscreteDomain::discretize(m, c.num("h_mesh"));
  IStar istar(d, eps);
  Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d.size()));
  double fixed = (istar.apply(one) - one).cwiseAbs().maxCoeff();
  double weak = 0.0, energy_excess = -1e300, c_fit = 0.0;
  json fields = json::array();
  const int count = c.integer("count");
  for (int k = 0; k < count; ++k) {
    auto kk = static_cast<std::uint64_t>(k);
    Eigen::VectorXd v = d.sample([&](const Vec2& x) { return test_field(2 * kk, x); });
    Eigen::VectorXd phi = d.sample([&](const Vec2& x) { return test_field(2 * kk + 1, x); });
    Eigen::VectorXd u = istar.apply(v);
    double w = weak_identity_residual(d, eps, u, v, phi);
    double ratio = discrete_norm(d, u, eps) / lebesgue_norm(d, v, pc, eps);
    double excess = discrete_norm(d, u, eps) / lebesgue_norm(d, v, 2.0, eps) - 1.0;
    weak = std::max(weak, w);
    c_fit = std::max(c_fit, ratio);
    energy_excess = std::max(energy_excess, excess);
    fields.push_back({{"weak_residual", w}, {"ratio_pconj", ratio}, {"ratio_l2", excess + 1.0}});
  }
  json doc = c.document();
  doc["nodes"] = d.size();
  doc["constant_fixed_point_error"] = fixed;
  doc["max_weak_residual"] = weak;
  doc["fitted_c"] = c_fit;
  doc["fields"] = fields;
  write_json(c.out / "identity.json", doc);
  c.check("constant-fixed-point", fixed < 1e-12, "max |i*(1) - 1| = " + fmt(fixed));
  c.check("weak-identity", weak < 1e-10, "max relative residual " + fmt(weak) + " over " + std::to_string(count) + " fields");
  c.check("energy-bound", energy_excess <= 1e-12, "max |i*v|_eps / |v|_{2,eps} - 1 = " + fmt(energy_excess));
  c.check("pconj-bound", std::isfinite(c_fit) && c_fit > 0, "fitted c = " + fmt(c_fit));
}

void cmd_geometry_check(Context& c) {
  BoundaryManifold m = manifold_of(c);
  BoundaryPoint xi = xi_of(c, m);
  FermiChart chart(m, xi);
  MetricExpansionReport me = verify_metric_expansion(chart);
  TransitionReport tr = transition_derivatives(m, xi);
  CurvatureReport cr = second_fundamental_form(m, xi);
  json doc = c.document();
  doc["manifold"] = manifold_json(m);
  doc["xi"] = {{"t", xi.t}, {"phi", xi.phi}};
  doc["curvature"] = to_json(cr);
  doc["metric_expansion"] = to_json(me);
  doc["transition"] = to_json(tr);
  bool constant_h = false;
  json crit = json::array();
  try {
    for (const auto& cp : find_critical_points(m, c.integer("resolution"))) crit.push_back(to_json(cp));
  } catch (const DegenerateLandscapeError& e) {
    constant_h = true;
    for (const auto& cp : e.points) crit.push_back(to_json(cp));
  }
  doc["degenerate_landscape"] = constant_h;
  write_json(c.out / "geometry.json", doc);
  write_json(c.out / "critical_points.json", crit);
  if (m.planar()) {
    std::ostringstream csv;
    write_curvature_csv(csv, curvature_profile(m, c.integer("resolution")));
    write_text(c.out / "curvature.csv", csv.str());
  }
  c.check("g-identity", me.identity_error < 1e-10, "|g(0) - I| = " + fmt(me.identity_error));
  c.check("g2", me.g2_max < 1e-6, "max |g^in - delta_in| = " + fmt(me.g2_max));
  if (constant_h && m.planar()) {
    c.check("g1", me.g1_max < 1e-6, "max residual " + fmt(me.g1_max) + " (constant curvature)");
    c.check("g3", me.g3_max < 1e-6, "max residual " + fmt(me.g3_max) + " (constant curvature)");
  } else {
    c.check("g1", me.g1_slope >= 1.9, "residual slope " + fmt(me.g1_slope));
    c.check("g3", me.g3_slope >= 1.9, "residual slope " + fmt(me.g3_slope));
  }
  c.check("G-mixed", me.mixed_error < 1e-4, "|d2 sqrt(g)/dyn dyi + (n-1) dH_i| = " + fmt(me.mixed_error));
  c.check("E-identity", tr.e_identity < 1e-10, "max |E(0,eta) - eta| = " + fmt(tr.e_identity));
  c.check("E-deta", tr.de_deta < 1e-6, "max |dE/deta(0,eta) - I| = " + fmt(tr.de_deta));
  c.check("E-dy", tr.de_dy < 1e-6, "|dE/dy(0,0) + I| = " + fmt(tr.de_dy));
  if (!tr.mixed.empty() && tr.mixed.front() > 1e-9)
    c.check("E-mixed", tr.mixed_slope >= 1.0, "mixed derivative slope " + fmt(tr.mixed_slope));
  else
    c.check("E-mixed", tr.mixed.empty() || tr.mixed.front() <= 1e-9, "mixed derivative vanishes");
  if (m.planar()) {
    double kappa = m.curvature(xi.t);
    c.check("H-oracle", std::abs(cr.H - kappa) < 1e-8, "H = " + fmt(cr.H) + ", closed form " + fmt(kappa));
  }
}

void cmd_landscape(Context& c) {
  BoundaryManifold m = manifold_of(c);
  GroundStateProfile prof = profile_of(c, m.n());
  const double eps = c.num("eps"), R = rcut_of(c, m);
  auto rows = reduced_landscape(m, prof, eps, R, c.integer("samples"));
  std::ostringstream csv;
  write_landscape_csv(csv, rows);
  write_text(c.out / "landscape.csv", csv.str());
  double jmin = rows.front().J, jmax = rows.front().J;
  std::size_t imin = 0, hmax_i = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].J < jmin) {
      jmin = rows[i].J;
      imin = i;
    }
    jmax = std::max(jmax, rows[i].J);
    if (rows[i].H > rows[hmax_i].H) hmax_i = i;
  }
  double spread = (jmax - jmin) / std::abs(jmax);
  bool degenerate = false;
  try {
    find_critical_points(m);
  } catch (const DegenerateLandscapeError&) {
    degenerate = true;
  }
  json doc = c.document();
  doc["R_cut"] = R;
  doc["relative_spread"] = spread;
  doc["degenerate_landscape"] = degenerate;
  write_json(c.out / "landscape.json", doc);
  if (degenerate) {
    c.check("xi-independence", spread < 1e-6, "relative spread " + fmt(spread));
    c.check("degenerate-flag", true, "critical-point search reports DegenerateLandscape");
  } else {
    c.check("ordering", imin == hmax_i,
            "argmin J at t = " + fmt(rows[imin].xi_param) + ", argmax H at t = " + fmt(rows[hmax_i].xi_param));
  }
}

void cmd_expansion(Context& c) {
  BoundaryManifold m = manifold_of(c);
  GroundStateProfile prof = profile_of(c, m.n());
  MomentReport mr = compute_constants(prof);
  const double R = rcut_of(c, m);
  ExpansionFit fit = fit_expansion(m, prof, xi_of(c, m), c.list("eps_list"), R);
  double rel = std::abs(fit.alpha_hat - mr.alpha) / mr.alpha;
  json doc = c.document();
  json body = to_json(fit);
  for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
  doc["alpha"] = mr.alpha;
  doc["C"] = mr.C;
  doc["R_cut"] = R;
  doc["alpha_rel_error"] = rel;
  write_json(c.out / "expansion.json", doc);
  c.check("alpha", rel < 0.05, "alpha_hat = " + fmt(fit.alpha_hat) + " vs alpha = " + fmt(mr.alpha) +
                                   " (" + fmt(100 * rel) + "%)");
  c.check("r2", fit.r2 > 0.999, "R^2 = " + fmt(fit.r2));
  c.check("eps-count", fit.eps.size() >= 5, std::to_string(fit.eps.size()) + " eps values");
  c.check("fit-window", fit.in_window, "eps in [" + fmt(fit.eps_min) + ", " + fmt(fit.eps_max) + "], window [R/200, R/25]");
}

void cmd_gradient_check(Context& c) {
  BoundaryManifold m = manifold_of(c);
  GroundStateProfile prof = profile_of(c, m.n());
  MomentReport mr = compute_constants(prof);
  const double eps = c.num("eps"), R = rcut_of(c, m);
  BoundaryPoint xi = xi_of(c, m);
  GradientCheck g1 = gradient_check(m, prof, eps, xi, R, mr.alpha);
  GradientCheck g2 = gradient_check(m, prof, 0.5 * eps, xi, R, mr.alpha);
  json doc = c.document();
  doc["R_cut"] = R;
  doc["alpha"] = mr.alpha;
  doc["eps"] = json::array({eps, 0.5 * eps});
  doc["checks"] = json::array({to_json(g1), to_json(g2)});
  write_json(c.out / "gradient.json", doc);
  c.check("deviation", g1.rel_deviation < 0.1, "relative deviation " + fmt(g1.rel_deviation) + " at eps = " + fmt(eps));
  c.check("decreasing", g2.rel_deviation < g1.rel_deviation,
          fmt(g1.rel_deviation) + " -> " + fmt(g2.rel_deviation) + " under eps halving");
}

void cmd_spectrum(Context& c) {
  GroundStateProfile prof = profile_of(c);
  HalfBoxGrid grid = HalfBoxGrid::make(c.integer("n"), c.num("L"), c.num("h"));
  LinearizedOperator op = assemble_linearized(prof, grid);
  SpectrumReport rep = kernel_report(op, c.integer("k"));
  double cg = coercivity_gap(op, rep.kernel_vectors);
  json doc = c.document();
  json body = to_json(rep);
  for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
  doc["coercivity_gap"] = cg;
  write_json(c.out / "spectrum.json", doc);
  const int n = grid.n;
  c.check("kernel-dimension", static_cast<int>(rep.kernel_indices.size()) == n - 1,
          std::to_string(rep.kernel_indices.size()) + " eigenvalues with |lambda| < " + fmt(rep.kernel_tol));
  double worst = rep.kernel_overlap.empty() ? 0.0 : *std::min_element(rep.kernel_overlap.begin(), rep.kernel_overlap.end());
  c.check("tangential-overlap", worst > 0.99, "min overlap with dU/dz_i " + fmt(worst));
  c.check("normal-overlap", rep.kernel_overlap_normal < 0.2, "overlap with dU/dz_n " + fmt(rep.kernel_overlap_normal));
  c.check("gap", cg > 0.05, "coercivity gap " + fmt(cg) + " (report gap " + fmt(rep.gap) + ")");
}

void cmd_remainder(Context& c) {
  BoundaryManifold m = manifold_of(c);
  GroundStateProfile prof = profile_of(c, m.n());
  RemainderStudy st = remainder_study(m, prof, xi_of(c, m), c.list("eps_list"), c.num("h_mesh"), rcut_of(c, m));
  std::ostringstream csv;
  write_remainder_csv(csv, st);
  write_text(c.out / "remainder.csv", csv.str());
  json doc = c.document();
  json body = to_json(st);
  for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
  write_json(c.out / "remainder.json", doc);
  double proj = 0.0;
  for (const auto& r : st.rows) proj = std::max(proj, r.projection_residual);
  c.check("slope", std::abs(st.slope - st.predicted) <= 0.15,
          "log-log slope " + fmt(st.slope) + ", predicted " + fmt(st.predicted) + " +- 0.15");
  c.check("projection", proj < 1e-10, "max |<Pi r, Z>_eps| relative " + fmt(proj));
}

void cmd_solve(Context& c) {
  BoundaryManifold m = manifold_of(c);
  GroundStateProfile prof = profile_of(c, m.n());
  const double eps = c.num("eps");
  BoundaryPoint xi = xi_of(c, m);
  DiscreteDomain d = DiscreteDomain::discretize(m, spike_mesh_options(c.num("h_mesh"), eps, xi));
  Eigen::VectorXd u = sample_ansatz(d, prof, eps, xi, rcut_of(c, m));
  NewtonOptions no;
  no.tol = c.num("tol");
  no.max_iter = c.integer("max_iter");
  SolveReport rep = newton_solve(d, eps, prof.params.p, u, no);
  json doc = c.document();
  json body = to_json(rep);
  for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
  doc["seed"] = {{"t", xi.t}};
  write_json(c.out / "solve.json", doc);
  std::ostringstream csv;
  write_solution_csv(csv, d, u);
  write_text(c.out / "solution.csv", csv.str());
  c.check("converged", rep.converged, std::to_string(rep.iterations) + " Newton iterations, residual " + fmt(rep.residual));
  c.check("positive", rep.min_u > 0, "min u = " + fmt(rep.min_u));
}

void cmd_continuation(Context& c) {
  BoundaryManifold m = manifold_of(c);
  GroundStateProfile prof = profile_of(c, m.n());
  ContinuationOptions co;
  co.h_mesh = c.num("h_mesh");
  co.R_cut = c.config.value("R_cut", 0.0);
  co.newton.tol = c.num("tol");
  co.newton.max_iter = c.integer("max_iter");
  const auto eps_list = c.list("eps_list");
  ContinuationResult res = continuation(m, prof, eps_list, xi_of(c, m), co);
  json doc = c.document();
  json body = to_json(res);
  for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
  write_json(c.out / "continuation.json", doc);
  if (res.last_domain) {
    std::ostringstream csv;
    write_solution_csv(csv, *res.last_domain, res.last_solution);
    write_text(c.out / "solution.csv", csv.str());
  }
  c.check("complete", res.complete,
          std::to_string(res.stages.size()) + "/" + std::to_string(eps_list.size()) + " stages" +
              (res.failure.empty() ? "" : " (" + res.failure + ")"));
  bool positive = !res.stages.empty();
  bool monotone = true, gap_down = true;
  std::string dists, gaps;
  for (std::size_t i = 0; i < res.stages.size(); ++i) {
    const auto& s = res.stages[i];
    positive = positive && s.report.min_u > 0;
    dists += (i ? ", " : "") + fmt(s.report.critical_distance);
    gaps += (i ? ", " : "") + fmt(s.energy_gap);
    if (i > 0) {
      monotone = monotone && s.report.critical_distance <= res.stages[i - 1].report.critical_distance;
      gap_down = gap_down && s.energy_gap < res.stages[i - 1].energy_gap;
    }
  }
  double last = res.stages.empty() ? INFINITY : res.stages.back().report.critical_distance;
  c.check("positive", positive, "min u > 0 at every stage");
  c.check("distance-nonincreasing", res.complete && monotone, "peak distance to nearest critical point: " + dists);
  c.check("final-distance", res.complete && last < 0.05, "final distance " + fmt(last));
  c.check("energy-gap-decreasing", res.complete && gap_down, "|J(u) - J(W)|/eps: " + gaps);
}

// ---------------------------------------------------------------------------------------------

struct Command {
  const char* name;
  const char* help;
  std::vector<std::string> fields;
  json defaults;
  std::function<void(Context&)> run;
};

const std::vector<Command>& commands() {
  const double pi = std::numbers::pi;
  static const std::vector<Command> table = {
      {"ground-state", "radial ground state by shooting; writes profile.csv",
       {"n", "p", "r_max", "grid_step", "shoot_tol"},
       {{"n", 2}, {"p", 4.0}, {"r_max", 30.0}, {"grid_step", 1e-3}, {"shoot_tol", 1e-6}},
       cmd_ground_state},
      {"constants", "energy constant C, curvature constant alpha and the identity residuals",
       {"n", "p", "r_max", "grid_step", "shoot_tol"},
       {{"n", 2}, {"p", 4.0}, {"r_max", 30.0}, {"grid_step", 1e-3}, {"shoot_tol", 1e-6}},
       cmd_constants},
      {"identity-check", "fixed point, weak identity and norm bound of the discrete adjoint i*",
       {"manifold", "eps", "p", "h_mesh", "count"},
       {{"manifold", "disk"}, {"eps", 0.1}, {"p", 4.0}, {"h_mesh", 0.025}, {"count", 20}},
       cmd_identity_check},
      {"geometry-check", "Fermi metric expansions, chart transition derivatives and curvature landscape",
       {"manifold", "xi", "xi_phi", "xi_point", "resolution"},
       {{"manifold", "ellipse:2,1"}, {"xi", pi / 6}, {"xi_phi", 0.0}, {"resolution", 720}},
       cmd_geometry_check},
      {"landscape", "reduced energy J(W) around the boundary",
       {"manifold", "p", "eps", "R_cut", "samples"},
       {{"manifold", "disk"}, {"p", 4.0}, {"eps", 0.01}, {"samples", 8}},
       cmd_landscape},
      {"expansion", "fit of J(W) = C - eps alpha H + o(eps)",
       {"manifold", "p", "xi", "xi_phi", "xi_point", "eps_list", "R_cut"},
       {{"manifold", "ellipse:2,1"}, {"p", 4.0}, {"xi", 0.0}, {"xi_phi", 0.0},
        {"eps_list", {0.0025, 0.004, 0.006, 0.008, 0.01}}, {"R_cut", 0.45}},
       cmd_expansion},
      {"gradient-check", "tangential gradient of J(W) against -eps alpha dH",
       {"manifold", "p", "xi", "xi_phi", "xi_point", "eps", "R_cut"},
       {{"manifold", "ellipse:2,1"}, {"p", 4.0}, {"xi", pi / 4}, {"xi_phi", 0.0}, {"eps", 0.02},
        {"R_cut", 0.2}},
       cmd_gradient_check},
      {"spectrum", "kernel and coercivity gap of the linearized half-space operator",
       {"n", "p", "L", "h", "k", "exec"},
       {{"n", 2}, {"p", 4.0}, {"L", 14.0}, {"h", 0.1}, {"k", 4}},
       cmd_spectrum},
      {"remainder", "scaling of the projected remainder |Pi(i*(f(W)) - W)|_eps",
       {"manifold", "p", "xi", "xi_point", "eps_list", "h_mesh", "R_cut"},
       {{"manifold", "ellipse:2,1"}, {"p", 4.0}, {"xi", 0.0}, {"eps_list", {0.08, 0.06, 0.04, 0.03, 0.02}},
        {"h_mesh", 0.01}, {"R_cut", 0.45}},
       cmd_remainder},
      {"solve", "damped Newton from W at one eps",
       {"manifold", "p", "xi", "xi_point", "eps", "h_mesh", "R_cut", "tol", "max_iter"},
       {{"manifold", "ellipse:2,1"}, {"p", 4.0}, {"xi", 0.0}, {"eps", 0.05}, {"h_mesh", 0.0125},
        {"R_cut", 0.45}, {"tol", 1e-9}, {"max_iter", 50}},
       cmd_solve},
      {"continuation", "Newton continuation in eps, tracking the spike",
       {"manifold", "p", "xi", "xi_point", "eps_list", "h_mesh", "R_cut", "tol", "max_iter"},
       {{"manifold", "ellipse:2,1"}, {"p", 4.0}, {"xi_point", {1.9, std::sqrt(1.0 - 0.95 * 0.95)}},
        {"eps_list", {0.08, 0.06, 0.045, 0.034}}, {"h_mesh", 0.0125}, {"R_cut", 0.45}, {"tol", 1e-9},
        {"max_iter", 50}},
       cmd_continuation},
  };
  return table;
}

std::string flag_of(const std::string& field) {
  std::string f = field;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

/// Converts a flag string to the JSON type the schema declares for the field.
json convert(const std::string& field, const std::string& text) {
  const json& prop = run_config_schema()["properties"].at(field);
  std::string type = prop.contains("type") ? prop["type"].get<std::string>() : "string";
  auto number = [&](const std::string& s) -> json {
    std::size_t used = 0;
    double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  };
  if (type == "number") return number(text);
  if (type == "integer") {
    std::size_t used = 0;
    long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  }
  if (type == "array") {
    json a = json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) a.push_back(number(item));
    return a;
  }
  if (prop.contains("enum") && !prop["enum"].empty() && prop["enum"][0].is_number()) return number(text);
  return text;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"spike-cli: studies of boundary spike layers for -eps^2 Lap u + u = u^(p-1) with Neumann data"};
  app.name("spike-cli");
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help message and exit");
  app.set_help_all_flag("--help-all", "list every subcommand and option");

  struct Bound {
    const Command* cmd;
    CLI::App* sub;
    std::map<std::string, std::string> values;
    std::string config_path;
    std::string out_dir;
  };
  std::vector<Bound> bound(commands().size());
  for (std::size_t i = 0; i < commands().size(); ++i) {
    const Command& cmd = commands()[i];
    Bound& b = bound[i];
    b.cmd = &cmd;
    b.sub = app.add_subcommand(cmd.name, cmd.help);
    for (const auto& f : cmd.fields) {
      std::string desc = run_config_schema()["properties"][f].value("description", f);
      if (cmd.defaults.contains(f)) desc += " (default " + cmd.defaults[f].dump() + ")";
      const json& prop = run_config_schema()["properties"][f];
      std::string type = prop.value("type", std::string(prop.contains("oneOf") ? "spec" : "choice"));
      b.sub->add_option(flag_of(f), b.values[f], desc)->type_name(type == "array" ? "LIST" : type == "integer" ? "INT" : type == "number" ? "NUM" : "TEXT");
    }
    b.sub->add_option("--config", b.config_path, "JSON config file; its fields override flags");
    b.sub->add_option("--out", b.out_dir, "output directory (default spike-out/<subcommand>)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return Ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return BadConfig;
  }

  for (Bound& b : bound) {
    if (!b.sub->parsed()) continue;
    const Command& cmd = *b.cmd;
    json user = json::object();
    for (const auto& f : cmd.fields) {
      if (b.sub->count(flag_of(f)) == 0) continue;
      try {
        user[f] = convert(f, b.values[f]);
      } catch (const std::exception&) {
        err << "config error: /" << f << ": cannot parse '" << b.values[f] << "'\n";
        return BadConfig;
      }
    }
    if (!b.out_dir.empty()) user["out"] = b.out_dir;
    if (!b.config_path.empty()) {
      std::ifstream f(b.config_path);
      if (!f) {
        err << "config error: cannot open " << b.config_path << "\n";
        return BadConfig;
      }
      json file;
      try {
        file = json::parse(f);
      } catch (const json::parse_error& e) {
        err << "config error: " << b.config_path << ": " << e.what() << "\n";
        return BadConfig;
      }
      if (!file.is_object()) {
        err << "config error: /: expected an object\n";
        return BadConfig;
      }
      for (auto it = file.begin(); it != file.end(); ++it) {
        if (it.key() != "out" && std::find(cmd.fields.begin(), cmd.fields.end(), it.key()) == cmd.fields.end()) {
          err << "config error: /" << it.key() << ": not a field of " << cmd.name << "\n";
          return BadConfig;
        }
        user[it.key()] = it.value();
      }
    }
    auto issues = validate_schema(run_config_schema(), user);
    if (!issues.empty()) {
      for (const auto& is : issues) err << "config error: " << is.path << ": " << is.message << "\n";
      return BadConfig;
    }
    json config = cmd.defaults;
    for (auto it = user.begin(); it != user.end(); ++it)
      if (it.key() != "out") config[it.key()] = it.value();
    if (config.contains("xi_point")) config.erase("xi");
    if (config.contains("exec")) set_default_exec(config["exec"] == "serial" ? Exec::Serial : Exec::Parallel);

    Context ctx{cmd.name, config, user.value("out", std::string("spike-out/") + cmd.name), out, {}};
    auto t0 = std::chrono::steady_clock::now();
    try {
      fs::create_directories(ctx.out);
      cmd.run(ctx);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      out << "FAIL " << cmd.name << ": " << e.what() << "\n";
      return CheckFailed;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return CheckFailed;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::size_t failed = std::count_if(ctx.checks.begin(), ctx.checks.end(), [](const Check& k) { return !k.pass; });
    out << cmd.name << ": " << ctx.checks.size() - failed << "/" << ctx.checks.size() << " checks passed in "
        << fmt(secs) << " s, outputs in " << ctx.out.string() << "\n";
    return failed == 0 ? Ok : CheckFailed;
  }
  return BadConfig;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("spike-cli");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace spike::cli
