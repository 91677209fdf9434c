#pragma once

#include <string>
#include <vector>

#include "spike/geometry.hpp"
#include "spike/parallel.hpp"
#include "spike/profile.hpp"

namespace spike {

/// Product cutoff chi(y) = b(|ybar|) b(y_n): equal to 1 on B(0,R/2) x [0,R/2), supported in
/// B(0,R) x [0,R), C^2 (quintic smoothstep transition on [R/2, R]).
struct Cutoff {
  double R = 0.2;

  double bump(double t) const;
  double dbump(double t) const;
  double d2bump(double t) const;
  double value(double ybar_norm, double yn) const { return bump(ybar_norm) * bump(std::abs(yn)); }
  /// Upper bound of |grad chi| (attained where both factors are in transition).
  double max_gradient() const;
};

/// W_{eps,xi}(x) = U(y/eps) chi(y) with y the Fermi coordinates of x around xi.
struct PeakAnsatz {
  PeakAnsatz(const BoundaryManifold& m, const GroundStateProfile& prof, double eps, const BoundaryPoint& xi,
             double R_cut);
  const GroundStateProfile* prof;
  FermiChart chart;
  double eps;
  Cutoff cut;
};

double eval_ansatz(const PeakAnsatz& a, const Vec3& x);
/// Z^i = (U'(|z|)/|z|) z_i chi, i in [0, n-2] (tangential directions of the chart frame).
double basis_function(const PeakAnsatz& a, int i, const Vec3& x);

struct QuadOptions {
  int points_per_panel = 16;
  double tol = 1e-8;  ///< relative tolerance on the refinement estimate
  int angular_points = 32;
  Exec exec = Exec::Parallel;
};

struct ReducedEnergy {
  double J = 0.0;
  double error_estimate = 0.0;
  std::size_t nodes = 0;
};

ReducedEnergy reduced_energy(const BoundaryManifold& m, const GroundStateProfile& prof, double eps,
                             const BoundaryPoint& xi, double R_cut, const QuadOptions& q = {});

/// Tangential gradient of J along boundary geodesics (per unit arc length), step eps/10.
Eigen::VectorXd reduced_energy_gradient(const BoundaryManifold& m, const GroundStateProfile& prof, double eps,
                                        const BoundaryPoint& xi, double R_cut, const QuadOptions& q = {});

struct ExpansionFit {
  double C_hat = 0, slope_hat = 0, alpha_hat = 0, r2 = 0;
  double eps_min = 0, eps_max = 0;
  double H = 0;
  bool in_window = false;  ///< all eps inside [R/200, R/25]
  std::vector<double> eps, J;
};

ExpansionFit fit_expansion(const BoundaryManifold& m, const GroundStateProfile& prof, const BoundaryPoint& xi,
                           const std::vector<double>& eps_list, double R_cut, const QuadOptions& q = {});

struct GradientCheck {
  Eigen::VectorXd grad;       ///< quadrature gradient
  Eigen::VectorXd predicted;  ///< -eps alpha dH
  double rel_deviation = 0;
};

GradientCheck gradient_check(const BoundaryManifold& m, const GroundStateProfile& prof, double eps,
                             const BoundaryPoint& xi, double R_cut, double alpha, const QuadOptions& q = {});

struct PeakPrediction {
  CriticalPoint point;
  double J_pred = 0;  ///< C - eps alpha H
  std::string role;
};

std::vector<PeakPrediction> predict_peaks(const BoundaryManifold& m, double eps, const MomentReport& constants,
                                          int resolution = 720);

struct LandscapeRow {
  double xi_param, eps, J, gradJ, H;
};

std::vector<LandscapeRow> reduced_landscape(const BoundaryManifold& m, const GroundStateProfile& prof, double eps,
                                            double R_cut, int samples, const QuadOptions& q = {});

}  // namespace spike
