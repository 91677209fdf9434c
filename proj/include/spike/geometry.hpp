#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "spike/error.hpp"

namespace spike {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

enum class ManifoldKind { Disk, Ellipse, Ball, Spheroid };

/// A point of the boundary in its native parameters. Planar curves use t in [0, 2pi),
/// surfaces use the polar angle u in [0, pi] (u = 0 is the bottom pole) and the azimuth phi.
struct BoundaryPoint {
  double t = 0.0;
  double phi = 0.0;
};

/// Boundary of a smooth bounded domain in R^2 (closed curve) or R^3 (closed surface of
/// revolution). Ambient vectors are always 3-vectors; planar curves live in z = 0.
class BoundaryManifold {
 public:
  static BoundaryManifold disk(double radius = 1.0, int orientation = 1);
  static BoundaryManifold ellipse(double a, double b, int orientation = 1);
  static BoundaryManifold ball(double radius = 1.0, int orientation = 1);
  /// Surface of revolution of the meridian (a sin u, -c cos u) about the z axis.
  static BoundaryManifold spheroid(double a, double c, int orientation = 1);

  ManifoldKind kind() const { return kind_; }
  std::string kind_name() const;
  int n() const { return planar() ? 2 : 3; }  ///< ambient dimension
  bool planar() const { return kind_ == ManifoldKind::Disk || kind_ == ManifoldKind::Ellipse; }
  double a() const { return a_; }
  double b() const { return b_; }
  int orientation() const { return orientation_; }

  Vec3 point(const BoundaryPoint& q) const;
  Vec3 inward_normal(const BoundaryPoint& q) const;
  /// Orthonormal tangent frame (columns), n-1 columns.
  Eigen::MatrixXd tangent_frame(const BoundaryPoint& q) const;
  BoundaryPoint from_ambient(const Vec3& x) const;  ///< parameters of a point on (or near) the boundary

  // Planar curves, counter-clockwise parametrisation.
  Vec2 gamma(double t) const;
  Vec2 dgamma(double t) const;
  Vec2 d2gamma(double t) const;
  Vec2 d3gamma(double t) const;
  double curvature(double t) const;       ///< signed by orientation
  double curvature_dt(double t) const;    ///< analytic dkappa/dt, used as a test oracle
  double arc_length(double t0, double t1) const;  ///< signed
  double advance(double t0, double s) const;      ///< parameter at signed arc length s from t0
  double perimeter() const;

  // Surfaces: implicit description F = 0, F < 0 inside.
  double implicit(const Vec3& x) const;
  Vec3 implicit_grad(const Vec3& x) const;
  Eigen::Matrix3d implicit_hess(const Vec3& x) const;

  double min_curvature_radius() const;
  double chart_radius() const;  ///< default radius of validity for Fermi charts

 private:
  ManifoldKind kind_ = ManifoldKind::Disk;
  double a_ = 1.0, b_ = 1.0;
  int orientation_ = 1;
};

/// Result of the boundary exponential map: end point and the parallel transported frame.
struct ExpResult {
  BoundaryPoint q;
  Vec3 x;
  Eigen::MatrixXd frame;  ///< transported tangent frame at the end point
};

/// exp_q(v) on the boundary, v given in the tangent frame at q (length n-1).
ExpResult boundary_exponential(const BoundaryManifold& m, const BoundaryPoint& q, const Eigen::VectorXd& v);
/// Same, starting from an explicit tangent frame at q.
ExpResult boundary_exponential(const BoundaryManifold& m, const BoundaryPoint& q, const Eigen::MatrixXd& frame,
                               const Eigen::VectorXd& v);
/// Inverse of the exponential map near q: tangent coordinates of `target` in `frame`.
Eigen::VectorXd boundary_logarithm(const BoundaryManifold& m, const BoundaryPoint& q, const Eigen::MatrixXd& frame,
                                   const BoundaryPoint& target);

/// Boundary point, tangent map of F = exp_xi and of the inward normal along it.
struct TangentJet {
  Vec3 F;
  Vec3 N;
  Eigen::Matrix<double, 3, Eigen::Dynamic> dF;  ///< columns d/dybar_i
  Eigen::Matrix<double, 3, Eigen::Dynamic> dN;
};

struct MetricSample {
  Eigen::MatrixXd g;
  Eigen::MatrixXd g_inv;
  double sqrt_det = 1.0;
};

/// Fermi coordinates y = (ybar, y_n) around xi: x = exp_xi(ybar) + y_n nu(exp_xi(ybar)).
class FermiChart {
 public:
  FermiChart(const BoundaryManifold& m, const BoundaryPoint& xi, double radius = 0.0);

  const BoundaryManifold& manifold() const { return m_; }
  const BoundaryPoint& base() const { return xi_; }
  const Eigen::MatrixXd& frame() const { return frame_; }
  int n() const { return m_.n(); }
  double radius() const { return radius_; }

  Vec3 map(const Eigen::VectorXd& y) const;
  Eigen::VectorXd inverse(const Vec3& x) const;  ///< throws OutOfChart outside the chart
  bool try_inverse(const Vec3& x, Eigen::VectorXd& y) const;
  TangentJet jet(const Eigen::VectorXd& ybar) const;
  MetricSample metric_from_jet(const TangentJet& j, double yn) const;

 private:
  BoundaryManifold m_;
  BoundaryPoint xi_;
  Eigen::MatrixXd frame_;
  double radius_;
};

inline Vec3 fermi_map(const FermiChart& c, const Eigen::VectorXd& y) { return c.map(y); }

/// g_ij in Fermi coordinates from centred, Richardson-extrapolated differences of the chart.
MetricSample metric_in_fermi(const FermiChart& c, const Eigen::VectorXd& y);

struct CurvatureReport {
  Eigen::MatrixXd h;   ///< second fundamental form in an orthonormal tangent frame
  double H = 0.0;      ///< mean curvature, trace(h)/(n-1)
  Eigen::VectorXd dH;  ///< derivatives along the frame directions
};
CurvatureReport second_fundamental_form(const BoundaryManifold& m, const BoundaryPoint& xi);
double mean_curvature(const BoundaryManifold& m, const BoundaryPoint& xi);

struct MetricExpansionReport {
  double g1_slope = 0, g3_slope = 0;        ///< fitted log-log slopes of the residuals
  double g1_max = 0, g3_max = 0;            ///< largest residual over the sampled radii
  double g2_max = 0;                        ///< max |g^{in} - delta_in|
  double mixed_error = 0;                   ///< |d^2 sqrt(g)/dy_n dy_i + (n-1) dH_i| at 0
  double identity_error = 0;                ///< |g(0) - I|
  std::vector<double> radii, g1_res, g3_res;
};
MetricExpansionReport verify_metric_expansion(const FermiChart& c);

struct TransitionReport {
  double e_identity = 0;       ///< max |E(0,eta) - eta|
  double de_deta = 0;          ///< max |dE/deta(0,eta) - I|
  double de_dy = 0;            ///< |dE/dy(0,0) + I|
  std::vector<double> steps;   ///< difference steps for the mixed derivative
  std::vector<double> mixed;   ///< max |d^2E/dy deta(0,0)| at each step
  double mixed_slope = 0;
  double h_normal_dependence = 0;  ///< tangential part of the chart transition vs eta_n
};
TransitionReport transition_derivatives(const BoundaryManifold& m, const BoundaryPoint& xi0);

struct CriticalPoint {
  BoundaryPoint xi;
  Vec3 x;
  double H = 0.0;
  double dH = 0.0;     ///< largest |dH| component at the point
  std::string kind;    ///< "max", "min", "saddle" or "degenerate"
  bool stable = false; ///< C^1-stable (non-degenerate, or a strict extremal set)
  bool isolated = true;
};

/// Raised with the scanned points when H is constant within tolerance.
class DegenerateLandscapeError : public Error {
 public:
  DegenerateLandscapeError(std::vector<CriticalPoint> pts, const std::string& msg)
      : Error(ErrorKind::DegenerateLandscape, msg), points(std::move(pts)) {}
  std::vector<CriticalPoint> points;
};

std::vector<CriticalPoint> find_critical_points(const BoundaryManifold& m, int resolution = 720);

struct CurvatureSample {
  double t, H, dH;
};
std::vector<CurvatureSample> curvature_profile(const BoundaryManifold& m, int samples);

/// Closest boundary point (parameters) to an ambient point.
BoundaryPoint closest_boundary_point(const BoundaryManifold& m, const Vec3& x, const BoundaryPoint* guess = nullptr);

}  // namespace spike
