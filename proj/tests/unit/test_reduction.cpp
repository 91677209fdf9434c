#include <cmath>
#include <numbers>

#include "doctest.h"
#include "spike/reduction.hpp"

using namespace spike;
using std::numbers::pi;

namespace {

const GroundStateProfile& profile24() {
  static GroundStateProfile prof = solve_ground_state({2, 4.0});
  return prof;
}

}  // namespace

TEST_CASE("cutoff") {
  Cutoff c{0.2};
  CHECK(c.bump(0.0) == 1.0);
  CHECK(c.bump(0.1) == 1.0);
  CHECK(c.bump(0.2) == 0.0);
  CHECK(c.bump(0.3) == 0.0);
  CHECK(c.dbump(0.1) == doctest::Approx(0.0));
  CHECK(c.d2bump(0.2) == doctest::Approx(0.0).scale(1));
  double worst = 0;
  for (int i = 1; i < 400; ++i) {
    double t = 0.2 * i / 400;
    double fd = (c.bump(t + 1e-7) - c.bump(t - 1e-7)) / 2e-7;
    CHECK(c.dbump(t) == doctest::Approx(fd).epsilon(1e-5).scale(1));
    worst = std::max(worst, std::abs(c.dbump(t)));
  }
  CHECK(worst <= c.max_gradient() + 1e-12);
}

TEST_CASE("ansatz peaks at the base point") {
  auto e = BoundaryManifold::ellipse(2, 1);
  PeakAnsatz a(e, profile24(), 0.05, BoundaryPoint{0.0}, 0.4);
  CHECK(eval_ansatz(a, e.point(BoundaryPoint{0.0})) == doctest::Approx(profile24().v0()).epsilon(1e-12));
  CHECK(eval_ansatz(a, Vec3(-2.0, 0.0, 0.0)) == 0.0);
  CHECK(std::abs(basis_function(a, 0, e.point(BoundaryPoint{0.0}))) < 1e-12);
}

TEST_CASE("blocked sums are thread-count independent") {
  auto f = [](std::size_t i) { return std::sin(0.001 * static_cast<double>(i)) / (1.0 + i); };
  double s = blocked_sum(100000, f, Exec::Serial);
  double p = blocked_sum(100000, f, Exec::Parallel);
  CHECK(s == p);
  CHECK(naive_sum(100000, f) == doctest::Approx(s).epsilon(1e-13));
}

TEST_CASE("reduced energy on the disk") {
  auto disk = BoundaryManifold::disk();
  const auto& prof = profile24();
  MomentReport m = compute_constants(prof);
  double eps = 0.02;
  QuadOptions serial;
  serial.exec = Exec::Serial;
  ReducedEnergy a = reduced_energy(disk, prof, eps, BoundaryPoint{0.3}, 0.4);
  ReducedEnergy b = reduced_energy(disk, prof, eps, BoundaryPoint{2.1}, 0.4, serial);
  CHECK(std::abs(a.J - b.J) < 1e-6 * a.J);
  CHECK(a.J == doctest::Approx(m.C - eps * m.alpha).epsilon(2e-3));
  CHECK(a.error_estimate < 1e-6);
  Eigen::VectorXd g = reduced_energy_gradient(disk, prof, eps, BoundaryPoint{1.0}, 0.4);
  CHECK(std::abs(g(0)) < 1e-5);
}

TEST_CASE("serial and parallel quadrature agree bitwise") {
  auto e = BoundaryManifold::ellipse(2, 1);
  QuadOptions s, p;
  s.exec = Exec::Serial;
  p.exec = Exec::Parallel;
  double js = reduced_energy(e, profile24(), 0.03, BoundaryPoint{0.4}, 0.4, s).J;
  double jp = reduced_energy(e, profile24(), 0.03, BoundaryPoint{0.4}, 0.4, p).J;
  CHECK(js == jp);
}

TEST_CASE("gradient follows -eps alpha dH") {
  auto e = BoundaryManifold::ellipse(2, 1);
  const auto& prof = profile24();
  double alpha = compute_constants(prof).alpha;
  GradientCheck g1 = gradient_check(e, prof, 0.02, BoundaryPoint{pi / 4}, 0.2, alpha);
  GradientCheck g2 = gradient_check(e, prof, 0.01, BoundaryPoint{pi / 4}, 0.2, alpha);
  CHECK(g1.rel_deviation < 0.1);
  CHECK(g2.rel_deviation < g1.rel_deviation);
  CHECK(g1.grad(0) * g1.predicted(0) > 0);
}

TEST_CASE("expansion fit on the ellipse maximum") {
  auto e = BoundaryManifold::ellipse(2, 1);
  const auto& prof = profile24();
  double alpha = compute_constants(prof).alpha;
  ExpansionFit f = fit_expansion(e, prof, BoundaryPoint{0.0}, {0.0025, 0.004, 0.00575, 0.0075, 0.01}, 0.45);
  CHECK(f.in_window);
  CHECK(f.r2 > 0.999);
  CHECK(std::abs(f.alpha_hat / alpha - 1) < 0.05);
  CHECK(f.H == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("peak predictions rank the curvature maxima first") {
  MomentReport m = compute_constants(profile24());
  auto peaks = predict_peaks(BoundaryManifold::ellipse(2, 1), 0.05, m);
  REQUIRE(peaks.size() == 4);
  for (const auto& pk : peaks) CHECK(pk.J_pred == doctest::Approx(m.C - 0.05 * m.alpha * pk.point.H));
  CHECK(peaks.front().point.kind == "max");
  CHECK_THROWS_AS(predict_peaks(BoundaryManifold::disk(), 0.05, m), Error);
}

TEST_CASE("argument checks") {
  auto e = BoundaryManifold::ellipse(2, 1);
  CHECK_THROWS_AS(reduced_energy(e, profile24(), -0.1, BoundaryPoint{0.0}, 0.4), Error);
  CHECK_THROWS_AS(reduced_energy(e, profile24(), 0.05, BoundaryPoint{0.0}, -1.0), Error);
  auto prof3 = solve_ground_state({3, 3.0});
  CHECK_THROWS_AS(reduced_energy(e, prof3, 0.05, BoundaryPoint{0.0}, 0.4), Error);
}
