#include <cmath>
#include <numbers>

#include "doctest.h"
#include "spike/pde.hpp"
#include "spike/reduction.hpp"

using namespace spike;
using std::numbers::pi;

namespace {

const GroundStateProfile& profile24() {
  static GroundStateProfile prof = solve_ground_state({2, 4.0});
  return prof;
}

const DiscreteDomain& disk_mesh() {
  static DiscreteDomain d = DiscreteDomain::discretize(BoundaryManifold::disk(), 0.02);
  return d;
}

}  // namespace

TEST_CASE("discrete inner product") {
  const auto& d = disk_mesh();
  Eigen::VectorXd u = d.sample([](const Vec2& x) { return std::exp(x.x()); });
  Eigen::VectorXd v = d.sample([](const Vec2& x) { return x.y() * x.y(); });
  CHECK(discrete_inner(d, u, v, 0.1) == doctest::Approx(discrete_inner(d, v, u, 0.1)).epsilon(1e-14));
  Eigen::VectorXd one = Eigen::VectorXd::Ones(d.size());
  CHECK(discrete_norm(d, one, 0.1) == doctest::Approx(std::sqrt(pi / 0.01)).epsilon(1e-8));
  CHECK(lebesgue_norm(d, one, 4.0, 0.1) == doctest::Approx(std::pow(pi / 0.01, 0.25)).epsilon(1e-8));
}

TEST_CASE("i* inverts -eps^2 Lap + I") {
  const auto& d = disk_mesh();
  Eigen::VectorXd one = Eigen::VectorXd::Ones(d.size());
  CHECK((apply_istar(d, 0.1, one) - one).lpNorm<Eigen::Infinity>() < 1e-10);
  Eigen::VectorXd v = d.sample([](const Vec2& x) { return std::cos(3 * x.x()) + x.y(); });
  IStar is(d, 0.1);
  Eigen::VectorXd u = is.apply(v);
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd phi = d.sample([k](const Vec2& x) { return std::sin((k + 1) * x.x() * x.y()) + k + 1; });
    CHECK(weak_identity_residual(d, 0.1, u, v, phi) < 1e-10);
  }
  CHECK_THROWS_AS(IStar(d, 0.0), Error);
}

TEST_CASE("discrete energy of constants") {
  const auto& d = disk_mesh();
  Eigen::VectorXd one = Eigen::VectorXd::Ones(d.size());
  double eps = 0.1, p = 4;
  CHECK(discrete_energy(d, one, eps, p) == doctest::Approx((0.5 - 1 / p) * pi / (eps * eps)).epsilon(1e-8));
  CHECK(discrete_energy(d, -one, eps, p) == doctest::Approx(0.5 * pi / (eps * eps)).epsilon(1e-8));
}

TEST_CASE("ansatz sampling") {
  const auto& d = disk_mesh();
  Eigen::VectorXd w = sample_ansatz(d, profile24(), 0.1, BoundaryPoint{0.0}, 0.45);
  CHECK(w(0) == doctest::Approx(profile24().v0()).epsilon(1e-12));
  CHECK(w.minCoeff() >= 0.0);
  Eigen::VectorXd z = sample_basis(d, profile24(), 0.1, BoundaryPoint{0.0}, 0.45);
  CHECK(std::abs(z(0)) < 1e-12);
  CHECK(std::abs(discrete_inner(d, w, z, 0.1)) < 1e-3 * discrete_norm(d, w, 0.1) * discrete_norm(d, z, 0.1));
}

TEST_CASE("remainder is orthogonal to the approximate kernel") {
  auto e = BoundaryManifold::ellipse(2, 1);
  double eps = 0.08;
  auto d = DiscreteDomain::discretize(e, spike_mesh_options(0.0125, eps, BoundaryPoint{0.3}));
  RemainderReport r = remainder_norm(d, eps, BoundaryPoint{0.3}, profile24(), 0.45);
  CHECK(r.projection_residual < 1e-8);
  CHECK(r.norm <= r.raw_norm);
  CHECK(r.norm > 0);
  CHECK(r.gram_condition > 0);
}

TEST_CASE("Newton on the disk converges to a positive boundary spike") {
  const auto& d = disk_mesh();
  double eps = 0.1;
  Eigen::VectorXd u = sample_ansatz(d, profile24(), eps, BoundaryPoint{1.0}, 0.45);
  int calls = 0;
  NewtonOptions opt;
  opt.monitor = [&](int, double, double) { ++calls; };
  SolveReport r = newton_solve(d, eps, 4.0, u, opt);
  CHECK(r.converged);
  CHECK(r.residual < 1e-9);
  CHECK(calls == r.iterations);
  CHECK(r.min_u > 0);
  CHECK(r.max_u > 1.5);
  CHECK(d.is_boundary(r.peak_node));
  CHECK(std::isnan(r.critical_distance));
  CHECK(std::abs(r.foot_x.norm() - 1) < 1e-3);
  CHECK(r.energy == doctest::Approx(discrete_energy(d, u, eps, 4.0)));
}

TEST_CASE("Newton failure modes") {
  const auto& d = disk_mesh();
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(d.size());
  CHECK_THROWS_AS(newton_solve(d, 0.1, 4.0, zero), Error);
  try {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(d.size());
    newton_solve(d, 0.1, 4.0, z);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConvergedToTrivial);
  }
  Eigen::VectorXd wrong(3);
  CHECK_THROWS_AS(newton_solve(d, 0.1, 4.0, wrong), Error);
}

TEST_CASE("continuation rejects unordered eps lists") {
  auto e = BoundaryManifold::ellipse(2, 1);
  CHECK_THROWS_AS(continuation(e, profile24(), {0.05, 0.06}, BoundaryPoint{0.0}), Error);
  CHECK_THROWS_AS(continuation(e, profile24(), {}, BoundaryPoint{0.0}), Error);
}

TEST_CASE("discrete energy landscape follows the reduced energy off the mesh centre") {
  auto e = BoundaryManifold::ellipse(2, 1);
  const double eps = 0.045;
  auto d = DiscreteDomain::discretize(e, spike_mesh_options(0.0125, eps, BoundaryPoint{0.003}));
  auto J = [&](double t) { return discrete_energy(d, sample_ansatz(d, profile24(), eps, BoundaryPoint{t}, 0.45), eps, 4.0); };
  auto Q = [&](double t) { return reduced_energy(e, profile24(), eps, BoundaryPoint{t}, 0.45).J; };
  for (double t : {-0.01, 0.02}) {
    double discrete = J(t) - J(0.0), quad = Q(t) - Q(0.0);
    CHECK(quad > 0);
    CHECK(discrete == doctest::Approx(quad).epsilon(0.05));
  }
}
