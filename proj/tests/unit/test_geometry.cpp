#include <cmath>
#include <numbers>

#include "doctest.h"
#include "spike/geometry.hpp"

using namespace spike;
using std::numbers::pi;

namespace {

double ellipse_kappa(double a, double b, double t) {
  double s = std::sin(t), c = std::cos(t);
  return a * b / std::pow(a * a * s * s + b * b * c * c, 1.5);
}

}  // namespace

TEST_CASE("planar curvature") {
  auto disk = BoundaryManifold::disk(2.0);
  CHECK(disk.curvature(0.3) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(BoundaryManifold::disk(2.0, -1).curvature(0.3) == doctest::Approx(-0.5).epsilon(1e-13));
  auto e = BoundaryManifold::ellipse(2, 1);
  for (double t : {0.0, 0.4, pi / 2, 2.5, 4.0}) {
    CHECK(e.curvature(t) == doctest::Approx(ellipse_kappa(2, 1, t)).epsilon(1e-12));
    double fd = (e.curvature(t + 1e-5) - e.curvature(t - 1e-5)) / 2e-5;
    CHECK(e.curvature_dt(t) == doctest::Approx(fd).epsilon(1e-6).scale(1));
  }
  CHECK(e.min_curvature_radius() == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("arc length and advance are inverse") {
  auto e = BoundaryManifold::ellipse(2, 1);
  CHECK(e.perimeter() == doctest::Approx(9.6884482205).epsilon(1e-9));
  CHECK(BoundaryManifold::disk(1.5).perimeter() == doctest::Approx(3 * pi).epsilon(1e-12));
  for (double s : {-1.0, 0.2, 3.7}) {
    double t = e.advance(0.5, s);
    CHECK(e.arc_length(0.5, t) == doctest::Approx(s).epsilon(1e-10));
  }
}

TEST_CASE("boundary exponential on the sphere follows great circles") {
  auto ball = BoundaryManifold::ball(1.0);
  BoundaryPoint q{pi / 3, 0.7};
  Eigen::VectorXd v(2);
  v << 0.3, -0.4;
  ExpResult r = boundary_exponential(ball, q, v);
  CHECK(std::acos(std::clamp(ball.point(q).dot(r.x), -1.0, 1.0)) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(std::abs(r.x.norm() - 1) < 1e-10);
  Eigen::VectorXd back = boundary_logarithm(ball, q, ball.tangent_frame(q), r.q);
  CHECK((back - v).norm() < 1e-7);
  Eigen::MatrixXd gram = r.frame.transpose() * r.frame;
  CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-8);
}

TEST_CASE("planar exponential is arc-length advance") {
  auto e = BoundaryManifold::ellipse(2, 1);
  Eigen::VectorXd v(1);
  v << 0.8;
  ExpResult r = boundary_exponential(e, BoundaryPoint{0.3}, v);
  CHECK(r.q.t == doctest::Approx(e.advance(0.3, 0.8)).epsilon(1e-10));
}

TEST_CASE("Fermi chart round trip and metric") {
  auto e = BoundaryManifold::ellipse(2, 1);
  FermiChart chart(e, BoundaryPoint{pi / 6});
  Eigen::VectorXd y(2);
  y << 0.05, 0.03;
  Vec3 x = chart.map(y);
  CHECK(e.implicit(x) < 0);  // inward normal points inside
  CHECK((chart.inverse(x) - y).norm() < 1e-9);
  MetricSample g0 = metric_in_fermi(chart, Eigen::VectorXd::Zero(2));
  CHECK((g0.g - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-8);
  MetricSample g = metric_in_fermi(chart, y);
  CHECK(std::abs(g.g(0, 1)) < 1e-8);
  CHECK(std::abs(g.g(1, 1) - 1) < 1e-8);
  Eigen::VectorXd far(2);
  far << 0.0, 5.0;
  CHECK_THROWS_AS(chart.inverse(chart.manifold().point(BoundaryPoint{pi}) * 10.0), Error);
}

TEST_CASE("metric expansion orders") {
  for (auto m : {BoundaryManifold::ellipse(2, 1), BoundaryManifold::spheroid(1.5, 1.0)}) {
    BoundaryPoint xi{m.planar() ? pi / 6 : pi / 3, 0.4};
    MetricExpansionReport r = verify_metric_expansion(FermiChart(m, xi));
    CHECK(r.identity_error < 1e-8);
    CHECK(r.g1_slope > 1.9);
    CHECK(r.g3_slope > 1.9);
    CHECK(r.g2_max < 1e-8);
    CHECK(r.mixed_error < 1e-4);
  }
}

TEST_CASE("second fundamental form") {
  CHECK(mean_curvature(BoundaryManifold::ball(2.0), BoundaryPoint{1.0, 2.0}) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(mean_curvature(BoundaryManifold::ball(2.0, -1), BoundaryPoint{1.0, 2.0}) == doctest::Approx(-0.5).epsilon(1e-7));
  auto e = BoundaryManifold::ellipse(2, 1);
  CurvatureReport r = second_fundamental_form(e, BoundaryPoint{0.7});
  CHECK(r.H == doctest::Approx(ellipse_kappa(2, 1, 0.7)).epsilon(1e-7));
  double speed = e.dgamma(0.7).norm();
  CHECK(r.dH(0) == doctest::Approx(e.curvature_dt(0.7) / speed).epsilon(1e-5));
  // spheroid pole: both principal curvatures equal a/c^2... checked against the umbilic value
  auto s = BoundaryManifold::spheroid(2.0, 1.0);
  CurvatureReport pole = second_fundamental_form(s, BoundaryPoint{0.0, 0.0});
  CHECK(pole.h(0, 0) == doctest::Approx(pole.h(1, 1)).epsilon(1e-6));
  CHECK(pole.H == doctest::Approx(1.0 / 4.0).epsilon(1e-6));
}

TEST_CASE("critical points of the ellipse") {
  auto pts = find_critical_points(BoundaryManifold::ellipse(2, 1));
  REQUIRE(pts.size() == 4);
  int maxima = 0, minima = 0;
  for (const auto& c : pts) {
    CHECK(c.stable);
    CHECK(c.dH < 1e-8);
    if (c.kind == "max") {
      ++maxima;
      CHECK(c.H == doctest::Approx(2.0).epsilon(1e-8));
      CHECK(std::abs(std::sin(c.xi.t)) < 1e-7);
    }
    if (c.kind == "min") {
      ++minima;
      CHECK(c.H == doctest::Approx(0.25).epsilon(1e-8));
    }
  }
  CHECK(maxima == 2);
  CHECK(minima == 2);
}

TEST_CASE("degenerate landscapes raise with the scanned points") {
  try {
    find_critical_points(BoundaryManifold::disk());
    FAIL("expected DegenerateLandscape");
  } catch (const DegenerateLandscapeError& e) {
    CHECK(e.kind() == ErrorKind::DegenerateLandscape);
    CHECK(!e.points.empty());
  }
}

TEST_CASE("closest boundary point") {
  auto e = BoundaryManifold::ellipse(2, 1);
  Vec3 x(1.0, 0.2, 0.0);
  BoundaryPoint q = closest_boundary_point(e, x);
  Vec2 d = e.gamma(q.t) - x.head<2>();
  CHECK(std::abs(d.dot(e.dgamma(q.t))) < 1e-9);
}

TEST_CASE("transition map derivatives") {
  TransitionReport r = transition_derivatives(BoundaryManifold::ellipse(2, 1), BoundaryPoint{0.5});
  CHECK(r.e_identity < 1e-8);
  CHECK(r.de_deta < 1e-6);
  CHECK(r.de_dy < 1e-6);
}

TEST_CASE("invalid manifolds") {
  CHECK_THROWS_AS(BoundaryManifold::disk(-1.0), Error);
  CHECK_THROWS_AS(BoundaryManifold::ellipse(1.0, 0.0), Error);
  CHECK_THROWS_AS(BoundaryManifold::disk(1.0, 2), Error);
}
