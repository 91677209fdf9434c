#include <cmath>
#include <numbers>

#include "doctest.h"
#include "spike/mesh.hpp"

using namespace spike;
using std::numbers::pi;

TEST_CASE("disk mesh quality and mass") {
  auto d = DiscreteDomain::discretize(BoundaryManifold::disk(), 0.02);
  CHECK(d.size() > 1000);
  CHECK(d.integrate(Eigen::VectorXd::Ones(d.size())) == doctest::Approx(pi).epsilon(1e-8));
  CHECK(d.min_angle_degrees() > 25.0);
  CHECK(d.max_edge() < 2 * 0.02);
  CHECK(d.max_positive_offdiagonal() < 1e-12);
  for (std::size_t i = 0; i < d.boundary_count(); ++i) CHECK(std::abs(d.nodes()[i].norm() - 1) < 1e-12);
}

TEST_CASE("stiffness rows sum to zero and the weak Laplacian is consistent") {
  auto d = DiscreteDomain::discretize(BoundaryManifold::ellipse(2, 1), 0.0125);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.size());
  CHECK((d.stiffness() * ones).lpNorm<Eigen::Infinity>() < 1e-10);
  // weak form against exact integrals over the ellipse: int grad x^2 . grad |x|^2 = 4 int x^2 = 8 pi
  Eigen::VectorXd q = d.sample([](const Vec2& x) { return x.squaredNorm(); });
  Eigen::VectorXd x2 = d.sample([](const Vec2& x) { return x.x() * x.x(); });
  CHECK(x2.dot(d.stiffness() * q) == doctest::Approx(8 * pi).epsilon(2e-3));
  Eigen::VectorXd x1 = d.sample([](const Vec2& x) { return x.x(); });
  CHECK(x1.dot(d.stiffness() * x1) == doctest::Approx(2 * pi).epsilon(1e-3));
}

TEST_CASE("local refinement") {
  auto m = BoundaryManifold::ellipse(2, 1);
  MeshOptions opt = spike_mesh_options(0.0125, 0.06, BoundaryPoint{0.0});
  CHECK(opt.spots.size() == 1);
  CHECK(opt.spots[0].h_loc == doctest::Approx(0.002));
  auto d = DiscreteDomain::discretize(m, opt);
  CHECK(d.min_edge() < 0.004);
  CHECK(d.integrate(Eigen::VectorXd::Ones(d.size())) == doctest::Approx(2 * pi).epsilon(1e-7));
}

TEST_CASE("interpolation and transfer reproduce linear functions") {
  auto m = BoundaryManifold::disk();
  auto a = DiscreteDomain::discretize(m, 0.025);
  auto b = DiscreteDomain::discretize(m, 0.0175);
  auto lin = [](const Vec2& x) { return 1.0 + 2.0 * x.x() - 0.5 * x.y(); };
  Eigen::VectorXd u = a.sample(lin);
  CHECK(a.interpolate(u, Vec2(0.3, -0.2)) == doctest::Approx(lin(Vec2(0.3, -0.2))).epsilon(1e-12));
  Eigen::VectorXd v = b.transfer(a, u);
  double worst = 0;
  for (std::size_t i = b.boundary_count(); i < b.size(); ++i)
    worst = std::max(worst, std::abs(v(static_cast<Eigen::Index>(i)) - lin(b.nodes()[i])));
  CHECK(worst < 1e-10);
}

TEST_CASE("coarse boundary resolution is rejected") {
  CHECK_THROWS_AS(DiscreteDomain::discretize(BoundaryManifold::ellipse(2, 1), 0.05), Error);
  try {
    DiscreteDomain::discretize(BoundaryManifold::ellipse(2, 1), 0.05);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MeshTooCoarse);
  }
  CHECK_THROWS_AS(DiscreteDomain::discretize(BoundaryManifold::ball(), 0.05), Error);
}
