// Acceptance runner: each criterion is one or more spike-cli invocations whose JSON output is
// re-checked here against the acceptance thresholds and runtime budgets.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli.hpp"
#include "spike/io.hpp"

namespace fs = std::filesystem;
using spike::json;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "" : "!") + what);
  }
};

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

class Runner {
 public:
  explicit Runner(fs::path root) : root_(std::move(root)) {}

  /// Runs one subcommand into <root>/<tag> and returns its JSON output `file`.
  json invoke(Verdict& v, const std::string& tag, std::vector<std::string> args, const std::string& file) {
    fs::path dir = root_ / tag;
    fs::remove_all(dir);
    args.push_back("--out");
    args.push_back(dir.string());
    std::ostringstream out, err;
    int code = spike::cli::run(args, out, err);
    std::cerr << out.str() << err.str();
    if (!fs::exists(dir / file)) {
      v.expect(false, tag + " produced no " + file + " (exit " + std::to_string(code) + ")");
      return json();
    }
    std::ifstream f(dir / file);
    return json::parse(f);
  }

 private:
  fs::path root_;
};

double num(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_number()) return NAN;
  return j[key].get<double>();
}

Verdict criterion1(Runner& r) {
  Verdict v;
  for (const char* p : {"3", "4"}) {
    json d = r.invoke(v, std::string("c1-p") + p, {"ground-state", "--n", "1", "--p", p}, "ground_state.json");
    double err = num(d, "closed_form_error");
    v.expect(err < 1e-6, std::string("p=") + p + " sup error " + fmt(err));
  }
  return v;
}

Verdict criterion2(Runner& r) {
  Verdict v;
  for (auto [n, p] : {std::pair{"2", "4"}, std::pair{"2", "3"}, std::pair{"3", "3"}}) {
    std::string tag = std::string("c2-n") + n + "p" + p;
    json d = r.invoke(v, tag, {"constants", "--n", n, "--p", p}, "constants.json");
    double res = num(d, "pohozaev_residual");
    v.expect(res < 1e-6, std::string("(") + n + "," + p + ") Pohozaev residual " + fmt(res));
  }
  return v;
}

Verdict criterion3(Runner& r) {
  Verdict v;
  for (auto [n, p] : {std::pair{"2", "4"}, std::pair{"3", "3"}}) {
    json d = r.invoke(v, std::string("c3-n") + n, {"constants", "--n", n, "--p", p}, "constants.json");
    double res = num(d, "moment_identity_residual");
    v.expect(res < 1e-8, std::string("n=") + n + " moment identity " + fmt(res));
  }
  return v;
}

Verdict criterion4(Runner& r) {
  Verdict v;
  json d = r.invoke(v, "c4", {"geometry-check", "--manifold", "ellipse:2,1"}, "geometry.json");
  json me = d.value("metric_expansion", json::object()), tr = d.value("transition", json::object());
  v.expect(num(me, "g1_slope") >= 1.9, "g1 slope " + fmt(num(me, "g1_slope")));
  v.expect(num(me, "g3_slope") >= 1.9, "g3 slope " + fmt(num(me, "g3_slope")));
  v.expect(num(me, "mixed_error") < 1e-4, "mixed identity " + fmt(num(me, "mixed_error")));
  double e = std::max({num(tr, "e_identity"), num(tr, "de_deta"), num(tr, "de_dy")});
  v.expect(e < 1e-6, "chart-derivative identities " + fmt(e));
  return v;
}

Verdict criterion5(Runner& r) {
  Verdict v;
  double gaps[2];
  const char* steps[2] = {"0.1", "0.07"};
  for (int i = 0; i < 2; ++i) {
    json d = r.invoke(v, std::string("c5-h") + steps[i],
                      {"spectrum", "--n", "2", "--p", "4", "--L", "14", "--h", steps[i], "--k", "4"}, "spectrum.json");
    gaps[i] = num(d, "coercivity_gap");
    if (i > 0) continue;
    json ov = d.value("overlaps", json::object());
    std::size_t kdim = d.value("kernel_indices", json::array()).size();
    double tol = num(d, "kernel_tol");
    v.expect(kdim == 1 && std::abs(tol - 5e-3) < 1e-12, std::to_string(kdim) + " eigenvalue(s) with |lambda| < " + fmt(tol));
    double t = ov.value("kernel_dU_dz_i", json::array({0.0}))[0].get<double>();
    v.expect(t > 0.99, "overlap with dU/dz_1 " + fmt(t));
    v.expect(num(ov, "kernel_dU_dz_n") < 0.2, "overlap with dU/dz_n " + fmt(num(ov, "kernel_dU_dz_n")));
  }
  v.expect(gaps[0] > 0.05 && gaps[1] > 0.05, "gap " + fmt(gaps[0]) + " at h=0.1, " + fmt(gaps[1]) + " at h=0.07");
  v.expect(std::abs(gaps[1] / gaps[0] - 1) < 0.05, "gap change under refinement " + fmt(std::abs(gaps[1] / gaps[0] - 1)));
  return v;
}

Verdict criterion6(Runner& r) {
  Verdict v;
  for (const char* m : {"ellipse:2,1", "disk"}) {
    json d = r.invoke(v, std::string("c6-") + m, {"expansion", "--manifold", m, "--xi", "0"}, "expansion.json");
    double rel = std::abs(num(d, "alpha_hat") / num(d, "alpha") - 1);
    std::size_t count = d.value("eps", json::array()).size();
    v.expect(rel < 0.05, std::string(m) + " alpha_hat/alpha - 1 = " + fmt(rel));
    v.expect(num(d, "r2") > 0.999, std::string(m) + " R^2 " + fmt(num(d, "r2")));
    v.expect(count >= 5, std::string(m) + " " + std::to_string(count) + " eps values");
  }
  return v;
}

Verdict criterion7(Runner& r) {
  Verdict v;
  json d = r.invoke(v, "c7", {"gradient-check", "--manifold", "ellipse:2,1", "--xi", "0.7853981633974483", "--eps", "0.02"},
                    "gradient.json");
  json checks = d.value("checks", json::array());
  if (checks.size() != 2) {
    v.expect(false, "gradient.json lacks the two eps levels");
    return v;
  }
  double d1 = num(checks[0], "rel_deviation"), d2 = num(checks[1], "rel_deviation");
  v.expect(d1 < 0.1, "relative deviation " + fmt(d1) + " at eps=0.02");
  v.expect(d2 < d1, "eps halving: " + fmt(d1) + " -> " + fmt(d2));
  return v;
}

Verdict criterion8(Runner& r) {
  Verdict v;
  for (auto [p, target] : {std::pair{"4", 2.5}, std::pair{"3", 7.0 / 3.0}}) {
    json d = r.invoke(v, std::string("c8-p") + p, {"remainder", "--p", p, "--h-mesh", "0.01"}, "remainder.json");
    double s = num(d, "slope");
    v.expect(std::abs(s - target) <= 0.15, std::string("p=") + p + " slope " + fmt(s) + " vs " + fmt(target));
  }
  return v;
}

Verdict criterion9(Runner& r) {
  Verdict v;
  json d = r.invoke(v, "c9", {"continuation", "--manifold", "ellipse:2,1"}, "continuation.json");
  json stages = d.value("stages", json::array());
  v.expect(d.value("complete", false) && stages.size() == 4, std::to_string(stages.size()) + "/4 stages converged");
  std::vector<double> dist, gap;
  bool positive = !stages.empty();
  for (const auto& s : stages) {
    positive = positive && s.value("converged", false) && num(s, "min_u") > 0;
    const json& x = s["foot"]["x"];
    dist.push_back(std::hypot(x[0].get<double>() - 2.0, x[1].get<double>()));
    gap.push_back(num(s, "energy_gap"));
  }
  v.expect(positive, "min u > 0 at every stage");
  bool mono = true, down = true;
  std::string ds, gs;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    ds += (i ? "," : "") + fmt(dist[i]);
    gs += (i ? "," : "") + fmt(gap[i]);
    if (i > 0) {
      mono = mono && dist[i] <= dist[i - 1];
      down = down && gap[i] < gap[i - 1];
    }
  }
  v.expect(mono, "distance to (2,0) non-increasing: " + ds);
  v.expect(!dist.empty() && dist.back() < 0.05, "final distance " + (dist.empty() ? "n/a" : fmt(dist.back())));
  v.expect(down, "energy gap decreasing: " + gs);
  return v;
}

Verdict criterion10(Runner& r) {
  Verdict v;
  json d = r.invoke(v, "c10", {"landscape", "--manifold", "disk"}, "landscape.json");
  v.expect(num(d, "relative_spread") < 1e-6, "relative spread " + fmt(num(d, "relative_spread")));
  v.expect(d.value("degenerate_landscape", false), "DegenerateLandscape flag");
  return v;
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Verdict(Runner&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "ground-state oracle", 5, criterion1},
      {2, "Pohozaev identity", 30, criterion2},
      {3, "moment identity", 5, criterion3},
      {4, "metric expansions", 60, criterion4},
      {5, "kernel structure", 300, criterion5},
      {6, "energy expansion", 300, criterion6},
      {7, "reduced gradient", 300, criterion7},
      {8, "remainder scaling", 600, criterion8},
      {9, "concentration", 900, criterion9},
      {10, "degenerate landscape", 120, criterion10},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria 1-10; one PASS/FAIL line each"};
  std::vector<int> only;
  std::string out = "acceptance-out";
  app.add_option("--criterion", only, "criterion number(s) to run (default all)")->check(CLI::Range(1, 10));
  app.add_option("--out", out, "scratch directory for subcommand outputs");
  CLI11_PARSE(app, argc, argv);

  Runner runner{fs::path(out)};
  int failed = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run(runner);
    } catch (const std::exception& e) {
      v.expect(false, std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.expect(secs < c.budget_s, "runtime " + fmt(secs) + " s of " + fmt(c.budget_s) + " s");
    std::string notes;
    for (std::size_t i = 0; i < v.notes.size(); ++i) notes += (i ? "; " : "") + v.notes[i];
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title << "): " << notes << std::endl;
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
