#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "spike/profile.hpp"

using namespace spike;

namespace {

const GroundStateProfile& cached(int n, double p) {
  static std::map<std::pair<int, double>, GroundStateProfile> cache;
  auto key = std::make_pair(n, p);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, solve_ground_state({n, p})).first;
  return it->second;
}

}  // namespace

TEST_CASE("n = 1 ground states match the closed-form solitons") {
  for (double p : {3.0, 4.0}) {
    const auto& prof = cached(1, p);
    double err = 0.0;
    for (std::size_t i = 0; i < prof.r.size(); ++i) {
      double r = prof.r[i];
      double exact = p == 4.0 ? std::sqrt(2.0) / std::cosh(r) : 1.5 / std::pow(std::cosh(0.5 * r), 2);
      err = std::max(err, std::abs(prof.v[i] - exact));
    }
    CHECK(err < 1e-6);
  }
  CHECK(cached(1, 4.0).v0() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  CHECK(cached(1, 3.0).v0() == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("frozen peak values") {
  CHECK(cached(2, 4.0).v0() == doctest::Approx(2.2062008646).epsilon(1e-9));
  CHECK(cached(2, 3.0).v0() == doctest::Approx(2.3919564032).epsilon(1e-9));
  CHECK(cached(3, 3.0).v0() == doctest::Approx(4.1916829544).epsilon(1e-9));
  double v0 = cached(2, 4.0).v0();
  CHECK(v0 > 2.0);
  CHECK(v0 < 2.4);
}

TEST_CASE("profile invariants") {
  for (auto [n, p] : {std::pair{2, 4.0}, std::pair{2, 3.0}, std::pair{3, 3.0}}) {
    const auto& prof = cached(n, p);
    CHECK(prof.v.front() > 0);
    CHECK(prof.dv.front() == 0.0);
    bool decreasing = true;
    for (std::size_t i = 1; i < prof.v.size(); ++i) decreasing = decreasing && prof.v[i] > 0 && prof.v[i] < prof.v[i - 1];
    CHECK(decreasing);
    CHECK(prof.max_residual < 1e-6);
    CHECK(tail_constant_deviation(prof) < 0.01);
  }
}

TEST_CASE("eval_profile on grid, at the end of the grid and on the tail") {
  const auto& p1 = cached(1, 4.0);
  ProfileValue at0 = eval_profile(p1, 0.0);
  CHECK(at0.v == doctest::Approx(1.41421356).epsilon(1e-8));
  CHECK(std::abs(at0.dv) < 1e-12);
  const auto& prof = cached(2, 4.0);
  ProfileValue in = eval_profile(prof, prof.r_max * (1 - 1e-12));
  ProfileValue out = eval_profile(prof, prof.r_max * (1 + 1e-12));
  CHECK(std::abs(in.v / out.v - 1.0) < 0.01);
  double r = 2.0 * prof.r_max;
  ProfileValue far = eval_profile(prof, r);
  CHECK(far.v == doctest::Approx(prof.decay_c * std::pow(r, -0.5) * std::exp(-r)).epsilon(1e-12));
  // cubic interpolation between nodes
  ProfileValue mid = eval_profile(p1, 1.0005);
  CHECK(mid.v == doctest::Approx(std::sqrt(2.0) / std::cosh(1.0005)).epsilon(1e-6));
}

TEST_CASE("half-sphere angular moments") {
  CHECK(halfspace_angular_moment(2, 0, 1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(halfspace_angular_moment(2, 0, 3) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(halfspace_angular_moment(2, 1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(halfspace_angular_moment(3, 0, 1) == doctest::Approx(std::numbers::pi).epsilon(1e-14));
  for (int n : {2, 3, 4})
    CHECK(halfspace_angular_moment(n, 1, 1) == doctest::Approx(0.5 * halfspace_angular_moment(n, 0, 3)).epsilon(1e-14));
  CHECK_THROWS_AS(halfspace_angular_moment(2, 2, 1), Error);
  CHECK_THROWS_AS(halfspace_angular_moment(2, 0, 2), Error);
}

TEST_CASE("constants and identities") {
  SUBCASE("frozen alpha values") {
    CHECK(compute_constants(cached(2, 4.0)).alpha == doctest::Approx(1.3959959674).epsilon(1e-9));
    CHECK(compute_constants(cached(2, 3.0)).alpha == doctest::Approx(2.8185780791).epsilon(1e-9));
    CHECK(compute_constants(cached(3, 3.0)).alpha == doctest::Approx(27.274337973).epsilon(1e-9));
  }
  SUBCASE("identities for every tested (n, p)") {
    for (auto [n, p] : {std::pair{2, 4.0}, std::pair{2, 3.0}, std::pair{3, 3.0}, std::pair{2, 6.0}}) {
      MomentReport m = compute_constants(cached(n, p));
      CHECK(m.C > 0);
      CHECK(m.alpha > 0);
      CHECK(m.pohozaev_residual < 1e-6);
      CHECK(m.nehari_residual < 1e-6);
      CHECK(m.energy_identity_residual < 1e-6);
      CHECK(m.moment_identity_residual < 1e-8);
    }
  }
  SUBCASE("one-dimensional energy constants are exact") {
    CHECK(compute_constants(cached(1, 3.0)).C == doctest::Approx(0.6).epsilon(1e-8));
    CHECK(compute_constants(cached(1, 4.0)).C == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
  }
  SUBCASE("pohozaev sides agree") {
    PohozaevCheck pc = check_pohozaev_zn(cached(2, 4.0));
    CHECK(pc.lhs == doctest::Approx(pc.rhs).epsilon(1e-6));
  }
}

TEST_CASE("halving the grid step leaves C and alpha unchanged") {
  ShootOptions fine;
  fine.grid_step = 5e-4;
  MomentReport a = compute_constants(cached(2, 4.0));
  MomentReport b = compute_constants(solve_ground_state({2, 4.0}, fine));
  CHECK(std::abs(a.C / b.C - 1) < 1e-7);
  CHECK(std::abs(a.alpha / b.alpha - 1) < 1e-7);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(solve_ground_state({2, 2.0}), Error);
  CHECK_THROWS_AS(solve_ground_state({3, 6.5}), Error);
  CHECK_THROWS_AS(solve_ground_state({0, 3.0}), Error);
  ShootOptions bad;
  bad.r_max = 10;
  CHECK_THROWS_AS(solve_ground_state({2, 4.0}, bad), Error);
}

TEST_CASE("profile CSV round trip") {
  const auto& prof = cached(2, 4.0);
  std::stringstream ss;
  write_profile_csv(ss, prof);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "r,V,dV");
  ss.seekg(0);
  GroundStateProfile back = read_profile_csv(ss, prof.params);
  REQUIRE(back.r.size() == prof.r.size());
  CHECK(back.v[100] == prof.v[100]);
  CHECK(back.dv[100] == prof.dv[100]);
}
