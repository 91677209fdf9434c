#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "spike/error.hpp"

namespace spike {

/// Dimension and exponent of the problem -eps^2 Lap u + u = u^(p-1).
struct Parameters {
  int n = 2;
  double p = 4.0;

  /// Throws InvalidArgument unless n >= 1, p > 2 and p is subcritical.
  void validate() const;
};

/// Radial ground state V of V'' + (n-1)/r V' - V + V^(p-1) = 0 sampled on a uniform grid.
struct GroundStateProfile {
  Parameters params;
  double grid_step = 1e-3;
  double r_max = 30.0;
  std::vector<double> r, v, dv;
  double decay_c = 0.0;       ///< limit of V r^((n-1)/2) e^r
  double max_residual = 0.0;  ///< ODE residual over interior nodes
  double match_radius = 0.0;  ///< where the outward shot hands over to the inward tail solve

  double v0() const { return v.front(); }
};

struct ShootOptions {
  double r_max = 30.0;
  double grid_step = 1e-3;
  double shoot_tol = 1e-6;
};

GroundStateProfile solve_ground_state(const Parameters& params, const ShootOptions& opt = {});

/// max |V r^((n-1)/2) e^r / decay_c - 1| over the last tenth of the grid, [0.9 r_max, r_max].
double tail_constant_deviation(const GroundStateProfile& prof);

struct ProfileValue {
  double v;
  double dv;
};

/// Cubic Hermite interpolation on the grid, asymptotic tail law beyond r_max.
ProfileValue eval_profile(const GroundStateProfile& prof, double r);

/// Integral over the upper half of S^(n-1) of z_1^(2a) z_n^b, for a in {0,1}, b in {1,3}.
double halfspace_angular_moment(int n, int a, int b);

/// Area of the upper half of S^(n-1).
double half_sphere_area(int n);

/// Radial integrals int_0^inf F r^k dr of the profile (grid Simpson + closed-form tail).
struct RadialIntegrals {
  double grad_n = 0;   ///< int V'^2 r^n
  double sq_n = 0;     ///< int V^2 r^n
  double pow_n = 0;    ///< int V^p r^n
  double grad_nm1 = 0; ///< int V'^2 r^(n-1)
  double sq_nm1 = 0;
  double pow_nm1 = 0;
  double z2_grad = 0;  ///< int V'^2 r^(n+1), used by second order terms
  double max_rel_error = 0;  ///< Simpson h vs 2h disagreement
};
RadialIntegrals radial_integrals(const GroundStateProfile& prof);

struct MomentReport {
  int n = 0;
  double p = 0;
  double C = 0;
  double alpha = 0;
  double pohozaev_residual = 0;
  double nehari_residual = 0;
  double energy_identity_residual = 0;
  double moment_identity_residual = 0;
  double quadrature_error = 0;
  std::map<std::string, double> moments;
};

MomentReport compute_constants(const GroundStateProfile& prof, double quad_tol = 1e-8);

struct PohozaevCheck {
  double lhs = 0;  ///< int (dU/dz_n)^2 z_n over the half space
  double rhs = 0;  ///< int (|grad U|^2/2 + U^2/2 - U^p/p) z_n
  double rel_residual = 0;
};
PohozaevCheck check_pohozaev_zn(const GroundStateProfile& prof);

void write_profile_csv(std::ostream& os, const GroundStateProfile& prof);
GroundStateProfile read_profile_csv(std::istream& is, const Parameters& params);

}  // namespace spike
