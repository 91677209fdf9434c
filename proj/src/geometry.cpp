#include "spike/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "spike/quadrature.hpp"

namespace spike {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_pi(double x) { return std::remainder(x, 2.0 * kPi); }

// Least-squares slope of log(res) against log(s) over residuals above the floor.
double loglog_slope(const std::vector<double>& s, const std::vector<double>& r, double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(r[i] > floor)) continue;
    double x = std::log(s[i]), y = std::log(r[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

// ---------------------------------------------------------------- manifold

BoundaryManifold BoundaryManifold::disk(double radius, int orientation) {
  require(radius > 0, "disk radius must be positive");
  require(orientation == 1 || orientation == -1, "orientation must be +1 or -1");
  BoundaryManifold m;
  m.kind_ = ManifoldKind::Disk;
  m.a_ = m.b_ = radius;
  m.orientation_ = orientation;
  return m;
}

BoundaryManifold BoundaryManifold::ellipse(double a, double b, int orientation) {
  require(a > 0 && b > 0, "ellipse semi-axes must be positive");
  require(orientation == 1 || orientation == -1, "orientation must be +1 or -1");
  BoundaryManifold m;
  m.kind_ = ManifoldKind::Ellipse;
  m.a_ = a;
  m.b_ = b;
  m.orientation_ = orientation;
  return m;
}

BoundaryManifold BoundaryManifold::ball(double radius, int orientation) {
  require(radius > 0, "ball radius must be positive");
  require(orientation == 1 || orientation == -1, "orientation must be +1 or -1");
  BoundaryManifold m;
  m.kind_ = ManifoldKind::Ball;
  m.a_ = m.b_ = radius;
  m.orientation_ = orientation;
  return m;
}

BoundaryManifold BoundaryManifold::spheroid(double a, double c, int orientation) {
  require(a > 0 && c > 0, "spheroid semi-axes must be positive");
  require(orientation == 1 || orientation == -1, "orientation must be +1 or -1");
  BoundaryManifold m;
  m.kind_ = ManifoldKind::Spheroid;
  m.a_ = a;
  m.b_ = c;
  m.orientation_ = orientation;
  return m;
}

std::string BoundaryManifold::kind_name() const {
  switch (kind_) {
    case ManifoldKind::Disk: return "disk";
    case ManifoldKind::Ellipse: return "ellipse";
    case ManifoldKind::Ball: return "ball";
    case ManifoldKind::Spheroid: return "spheroid";
  }
  return "unknown";
}

Vec2 BoundaryManifold::gamma(double t) const { return {a_ * std::cos(t), b_ * std::sin(t)}; }
Vec2 BoundaryManifold::dgamma(double t) const { return {-a_ * std::sin(t), b_ * std::cos(t)}; }
Vec2 BoundaryManifold::d2gamma(double t) const { return {-a_ * std::cos(t), -b_ * std::sin(t)}; }
Vec2 BoundaryManifold::d3gamma(double t) const { return {a_ * std::sin(t), -b_ * std::cos(t)}; }

double BoundaryManifold::curvature(double t) const {
  Vec2 d1 = dgamma(t), d2 = d2gamma(t);
  double sp = d1.norm();
  return orientation_ * (d1.x() * d2.y() - d1.y() * d2.x()) / (sp * sp * sp);
}

double BoundaryManifold::curvature_dt(double t) const {
  Vec2 d1 = dgamma(t), d2 = d2gamma(t), d3 = d3gamma(t);
  double num = d1.x() * d2.y() - d1.y() * d2.x();
  double dnum = d1.x() * d3.y() - d1.y() * d3.x();
  double D = d1.squaredNorm(), dD = 2.0 * d1.dot(d2);
  return orientation_ * (dnum / std::pow(D, 1.5) - 1.5 * num * dD / std::pow(D, 2.5));
}

double BoundaryManifold::arc_length(double t0, double t1) const {
  if (t1 < t0) return -arc_length(t1, t0);
  if (kind_ == ManifoldKind::Disk) return a_ * (t1 - t0);
  const GaussRule& g = gauss_legendre(16);
  int panels = std::max(1, static_cast<int>(std::ceil((t1 - t0) / 0.2)));
  double w = (t1 - t0) / panels, s = 0.0;
  for (int k = 0; k < panels; ++k) {
    double mid = t0 + (k + 0.5) * w;
    for (int i = 0; i < 16; ++i) s += 0.5 * w * g.w[i] * dgamma(mid + 0.5 * w * g.x[i]).norm();
  }
  return s;
}

double BoundaryManifold::advance(double t0, double s) const {
  if (kind_ == ManifoldKind::Disk) return t0 + s / a_;
  double t = t0 + s / dgamma(t0).norm();
  for (int it = 0; it < 60; ++it) {
    double f = arc_length(t0, t) - s;
    double dt = f / dgamma(t).norm();
    t -= dt;
    if (std::abs(dt) < 1e-15 * (1.0 + std::abs(t))) break;
  }
  return t;
}

double BoundaryManifold::perimeter() const { return arc_length(0.0, 2.0 * kPi); }

double BoundaryManifold::implicit(const Vec3& x) const {
  return (x.x() * x.x() + x.y() * x.y()) / (a_ * a_) + x.z() * x.z() / (b_ * b_) - 1.0;
}
Vec3 BoundaryManifold::implicit_grad(const Vec3& x) const {
  return {2 * x.x() / (a_ * a_), 2 * x.y() / (a_ * a_), 2 * x.z() / (b_ * b_)};
}
Eigen::Matrix3d BoundaryManifold::implicit_hess(const Vec3&) const {
  return Vec3(2 / (a_ * a_), 2 / (a_ * a_), 2 / (b_ * b_)).asDiagonal();
}

Vec3 BoundaryManifold::point(const BoundaryPoint& q) const {
  if (planar()) {
    Vec2 g = gamma(q.t);
    return {g.x(), g.y(), 0.0};
  }
  double su = std::sin(q.t);
  return {a_ * su * std::cos(q.phi), a_ * su * std::sin(q.phi), -b_ * std::cos(q.t)};
}

Vec3 BoundaryManifold::inward_normal(const BoundaryPoint& q) const {
  if (planar()) {
    Vec2 d = dgamma(q.t).normalized();
    return Vec3(-d.y(), d.x(), 0.0) * orientation_;
  }
  return -orientation_ * implicit_grad(point(q)).normalized();
}

Eigen::MatrixXd BoundaryManifold::tangent_frame(const BoundaryPoint& q) const {
  if (planar()) {
    Vec2 d = dgamma(q.t).normalized();
    Eigen::MatrixXd f(3, 1);
    f << d.x(), d.y(), 0.0;
    return f;
  }
  Eigen::MatrixXd f(3, 2);
  double su = std::sin(q.t), cu = std::cos(q.t);
  if (su > 1e-9) {
    Vec3 xu(a_ * cu * std::cos(q.phi), a_ * cu * std::sin(q.phi), b_ * su);
    Vec3 xp(-std::sin(q.phi), std::cos(q.phi), 0.0);
    f.col(0) = xu.normalized();
    f.col(1) = xp;
  } else {
    f.col(0) = Vec3(1, 0, 0);
    f.col(1) = Vec3(0, 1, 0);
  }
  return f;
}

BoundaryPoint BoundaryManifold::from_ambient(const Vec3& x) const {
  BoundaryPoint q;
  if (planar()) {
    q.t = std::atan2(x.y() / b_, x.x() / a_);
    return q;
  }
  double rho = std::hypot(x.x(), x.y());
  q.t = std::atan2(rho / a_, -x.z() / b_);
  q.phi = rho > 0 ? std::atan2(x.y(), x.x()) : 0.0;
  return q;
}

double BoundaryManifold::min_curvature_radius() const {
  switch (kind_) {
    case ManifoldKind::Disk:
    case ManifoldKind::Ball: return a_;
    case ManifoldKind::Ellipse: return std::min(b_ * b_ / a_, a_ * a_ / b_);
    case ManifoldKind::Spheroid: return std::min(b_ * b_ / a_, a_ * a_ / b_);
  }
  return a_;
}

double BoundaryManifold::chart_radius() const {
  double reach = min_curvature_radius();
  double inj = planar() ? 0.5 * perimeter() : kPi * reach;
  return std::min(reach, inj);
}

// ---------------------------------------------------------------- exp / log

namespace {

struct GeoState {
  Vec3 x, w;
  Eigen::Matrix<double, 3, Eigen::Dynamic> E;
};

GeoState geo_rhs(const BoundaryManifold& m, const GeoState& s) {
  Vec3 g = m.implicit_grad(s.x);
  Eigen::Matrix3d Hs = m.implicit_hess(s.x);
  double gg = g.squaredNorm(), gn = std::sqrt(gg);
  Vec3 nh = g / gn;
  Vec3 dn = (Hs * s.w - nh * nh.dot(Hs * s.w)) / gn;
  GeoState d;
  d.x = s.w;
  d.w = -(s.w.dot(Hs * s.w) / gg) * g;
  d.E.resize(3, s.E.cols());
  for (int k = 0; k < s.E.cols(); ++k) d.E.col(k) = -(s.E.col(k).dot(dn)) * nh;
  return d;
}

GeoState axpy(const GeoState& s, double h, const GeoState& d) {
  GeoState r;
  r.x = s.x + h * d.x;
  r.w = s.w + h * d.w;
  r.E = s.E + h * d.E;
  return r;
}

}  // namespace

ExpResult boundary_exponential(const BoundaryManifold& m, const BoundaryPoint& q, const Eigen::MatrixXd& frame,
                               const Eigen::VectorXd& v) {
  if (v.size() != m.n() - 1 || frame.cols() != m.n() - 1)
    fail(ErrorKind::DimensionMismatch, "tangent vector has the wrong length");
  ExpResult out;
  if (m.planar()) {
    Vec2 T = m.dgamma(q.t).normalized();
    double sgn = (frame(0, 0) * T.x() + frame(1, 0) * T.y()) >= 0 ? 1.0 : -1.0;
    out.q.t = m.advance(q.t, sgn * v(0));
    out.x = m.point(out.q);
    out.frame = m.tangent_frame(out.q) * sgn;
    return out;
  }
  GeoState s;
  s.x = m.point(q);
  s.w = frame * v;
  s.E = frame;
  double len = s.w.norm();
  int steps = std::max(8, static_cast<int>(std::ceil(len / (2e-3 * m.min_curvature_radius()))));
  double h = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    GeoState k1 = geo_rhs(m, s);
    GeoState k2 = geo_rhs(m, axpy(s, 0.5 * h, k1));
    GeoState k3 = geo_rhs(m, axpy(s, 0.5 * h, k2));
    GeoState k4 = geo_rhs(m, axpy(s, h, k3));
    s.x += h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    s.w += h / 6 * (k1.w + 2 * k2.w + 2 * k3.w + k4.w);
    s.E += h / 6 * (k1.E + 2 * k2.E + 2 * k3.E + k4.E);
  }
  out.q = m.from_ambient(s.x);
  out.x = m.point(out.q);
  Vec3 nh = m.implicit_grad(out.x).normalized();
  out.frame = s.E;
  for (int k = 0; k < s.E.cols(); ++k) out.frame.col(k) -= nh * nh.dot(s.E.col(k));
  return out;
}

ExpResult boundary_exponential(const BoundaryManifold& m, const BoundaryPoint& q, const Eigen::VectorXd& v) {
  return boundary_exponential(m, q, m.tangent_frame(q), v);
}

Eigen::VectorXd boundary_logarithm(const BoundaryManifold& m, const BoundaryPoint& q, const Eigen::MatrixXd& frame,
                                   const BoundaryPoint& target) {
  if (m.planar()) {
    Vec2 T = m.dgamma(q.t).normalized();
    double sgn = (frame(0, 0) * T.x() + frame(1, 0) * T.y()) >= 0 ? 1.0 : -1.0;
    Eigen::VectorXd v(1);
    v(0) = sgn * m.arc_length(q.t, q.t + wrap_pi(target.t - q.t));
    return v;
  }
  Vec3 xt = m.point(target), x0 = m.point(q);
  Eigen::VectorXd v = frame.transpose() * (xt - x0);
  const double scale = m.min_curvature_radius();
  for (int it = 0; it < 40; ++it) {
    Vec3 r = boundary_exponential(m, q, frame, v).x - xt;
    if (r.norm() < 1e-14 * scale) return v;
    Eigen::Matrix<double, 3, 2> J;
    double d = 1e-6 * scale;
    for (int j = 0; j < 2; ++j) {
      Eigen::VectorXd vp = v, vm = v;
      vp(j) += d;
      vm(j) -= d;
      J.col(j) = (boundary_exponential(m, q, frame, vp).x - boundary_exponential(m, q, frame, vm).x) / (2 * d);
    }
    Eigen::Vector2d dv = J.colPivHouseholderQr().solve(r);
    v -= dv;
    if (dv.norm() < 1e-15 * scale) return v;
  }
  fail(ErrorKind::OutOfChart, "boundary logarithm did not converge");
}

// ---------------------------------------------------------------- closest point

BoundaryPoint closest_boundary_point(const BoundaryManifold& m, const Vec3& x, const BoundaryPoint* guess) {
  // Planar curves, and the meridian of a surface of revolution, are both ellipses (A cos t, B sin t)
  // in a plane; find the closest parameter there.
  auto solve_ellipse = [](double A, double B, double px, double py, const double* t_guess) {
    auto g = [&](double t) {
      double cx = A * std::cos(t) - px, cy = B * std::sin(t) - py;
      return cx * (-A * std::sin(t)) + cy * (B * std::cos(t));
    };
    auto dg = [&](double t) {
      double cx = A * std::cos(t) - px, cy = B * std::sin(t) - py;
      double dx = -A * std::sin(t), dy = B * std::cos(t);
      return dx * dx + dy * dy + cx * (-A * std::cos(t)) + cy * (-B * std::sin(t));
    };
    auto dist2 = [&](double t) { return std::pow(A * std::cos(t) - px, 2) + std::pow(B * std::sin(t) - py, 2); };
    double best = 0.0, bd = std::numeric_limits<double>::infinity();
    const int S = 256;
    double lo = t_guess ? *t_guess - kPi / 2 : -kPi, span = t_guess ? kPi : 2 * kPi;
    for (int k = 0; k <= S; ++k) {
      double t = lo + span * k / S, d = dist2(t);
      if (d < bd) {
        bd = d;
        best = t;
      }
    }
    double t = best, step = span / S;
    for (int it = 0; it < 60; ++it) {
      double d2 = dg(t);
      double dt = d2 > 0 ? g(t) / d2 : 0.0;
      if (d2 <= 0 || std::abs(dt) > step) break;
      t -= dt;
      if (std::abs(dt) < 1e-16 * (1 + std::abs(t))) break;
    }
    return t;
  };
  BoundaryPoint q;
  if (m.planar()) {
    const double* tg = guess ? &guess->t : nullptr;
    q.t = solve_ellipse(m.a(), m.b(), x.x(), x.y(), tg);
    return q;
  }
  double rho = std::hypot(x.x(), x.y());
  q.phi = rho > 0 ? std::atan2(x.y(), x.x()) : (guess ? guess->phi : 0.0);
  // meridian: (a sin u, -c cos u) = (c cos(u - pi/2) ... ) use t = u - pi/2: (a cos t, c sin t)
  double tg_val = guess ? guess->t - kPi / 2 : 0.0;
  double t = solve_ellipse(m.a(), m.b(), rho, x.z(), guess ? &tg_val : nullptr);
  q.t = t + kPi / 2;
  if (q.t < 0) {
    q.t = -q.t;
    q.phi += kPi;
  }
  return q;
}

// ---------------------------------------------------------------- Fermi chart

FermiChart::FermiChart(const BoundaryManifold& m, const BoundaryPoint& xi, double radius)
    : m_(m), xi_(xi), frame_(m.tangent_frame(xi)) {
  double lim = m.chart_radius();
  if (radius <= 0) radius = 0.9 * lim;
  if (radius > lim) fail(ErrorKind::ChartOverflow, "chart radius exceeds the validity radius of the boundary");
  radius_ = radius;
}

Vec3 FermiChart::map(const Eigen::VectorXd& y) const {
  if (y.size() != n()) fail(ErrorKind::DimensionMismatch, "Fermi coordinates have the wrong length");
  if (!(y.norm() < radius_)) fail(ErrorKind::OutOfChart, "point outside the Fermi chart");
  ExpResult e = boundary_exponential(m_, xi_, frame_, y.head(n() - 1));
  return e.x + y(n() - 1) * m_.inward_normal(e.q);
}

bool FermiChart::try_inverse(const Vec3& x, Eigen::VectorXd& y) const {
  BoundaryPoint foot = closest_boundary_point(m_, x, &xi_);
  y.resize(n());
  Vec3 fx = m_.point(foot);
  y(n() - 1) = (x - fx).dot(m_.inward_normal(foot));
  if (std::abs(y(n() - 1)) >= radius_) return false;
  if (m_.planar()) {
    y.head(1) = boundary_logarithm(m_, xi_, frame_, foot);
  } else {
    if ((fx - m_.point(xi_)).norm() >= radius_) return false;
    y.head(2) = boundary_logarithm(m_, xi_, frame_, foot);
  }
  return y.norm() < radius_;
}

Eigen::VectorXd FermiChart::inverse(const Vec3& x) const {
  Eigen::VectorXd y;
  if (!try_inverse(x, y)) fail(ErrorKind::OutOfChart, "point outside the Fermi chart");
  return y;
}

TangentJet FermiChart::jet(const Eigen::VectorXd& ybar) const {
  const int k = n() - 1;
  TangentJet j;
  j.dF.resize(3, k);
  j.dN.resize(3, k);
  if (m_.planar()) {
    ExpResult e = boundary_exponential(m_, xi_, frame_, ybar);
    Vec3 T = e.frame.col(0);
    j.F = e.x;
    j.N = m_.inward_normal(e.q);
    j.dF.col(0) = T;
    j.dN.col(0) = -m_.curvature(e.q.t) * T;
    return j;
  }
  ExpResult e = boundary_exponential(m_, xi_, frame_, ybar);
  j.F = e.x;
  j.N = m_.inward_normal(e.q);
  const double d = 1e-3 * m_.min_curvature_radius();
  for (int i = 0; i < k; ++i) {
    auto diff = [&](double step, Vec3& dF, Vec3& dN) {
      Eigen::VectorXd vp = ybar, vm = ybar;
      vp(i) += step;
      vm(i) -= step;
      ExpResult ep = boundary_exponential(m_, xi_, frame_, vp), em = boundary_exponential(m_, xi_, frame_, vm);
      dF = (ep.x - em.x) / (2 * step);
      dN = (m_.inward_normal(ep.q) - m_.inward_normal(em.q)) / (2 * step);
    };
    Vec3 f1, n1, f2, n2;
    diff(d, f1, n1);
    diff(0.5 * d, f2, n2);
    j.dF.col(i) = (4 * f2 - f1) / 3;
    j.dN.col(i) = (4 * n2 - n1) / 3;
  }
  return j;
}

MetricSample FermiChart::metric_from_jet(const TangentJet& j, double yn) const {
  const int nn = n();
  Eigen::MatrixXd J(3, nn);
  for (int i = 0; i < nn - 1; ++i) J.col(i) = j.dF.col(i) + yn * j.dN.col(i);
  J.col(nn - 1) = j.N;
  if (m_.planar()) J.conservativeResize(2, nn);
  MetricSample s;
  s.g = J.transpose() * J;
  double det = s.g.determinant();
  if (!(det > 0)) fail(ErrorKind::SingularMetric, "Fermi metric is singular");
  s.sqrt_det = std::sqrt(det);
  s.g_inv = s.g.inverse();
  return s;
}

MetricSample metric_in_fermi(const FermiChart& c, const Eigen::VectorXd& y) {
  const int nn = c.n();
  if (y.size() != nn) fail(ErrorKind::DimensionMismatch, "Fermi coordinates have the wrong length");
  const double scale = std::min(1.0, c.manifold().min_curvature_radius());
  const double d = 1e-3 * scale;
  if (!(y.norm() + d < c.radius())) fail(ErrorKind::OutOfChart, "metric requested outside the chart");
  Eigen::MatrixXd J(3, nn);
  for (int i = 0; i < nn; ++i) {
    auto cd = [&](double step) {
      Eigen::VectorXd yp = y, ym = y;
      yp(i) += step;
      ym(i) -= step;
      return Vec3((c.map(yp) - c.map(ym)) / (2 * step));
    };
    J.col(i) = (4 * cd(0.5 * d) - cd(d)) / 3;
  }
  if (c.manifold().planar()) J.conservativeResize(2, nn);
  MetricSample s;
  s.g = J.transpose() * J;
  double det = s.g.determinant();
  if (!(det > 0)) fail(ErrorKind::SingularMetric, "Fermi metric is singular");
  s.sqrt_det = std::sqrt(det);
  s.g_inv = s.g.inverse();
  return s;
}

// ---------------------------------------------------------------- curvature

namespace {

Eigen::MatrixXd sff_matrix(const BoundaryManifold& m, const BoundaryPoint& q) {
  if (m.planar()) {
    Eigen::MatrixXd h(1, 1);
    h(0, 0) = m.curvature(q.t);
    return h;
  }
  Eigen::MatrixXd h(2, 2);
  Vec3 N = m.inward_normal(q);
  double su = std::sin(q.t), cu = std::cos(q.t), sp = std::sin(q.phi), cp = std::cos(q.phi);
  double a = m.a(), c = m.b();
  if (su > 1e-6) {
    Vec3 xu(a * cu * cp, a * cu * sp, c * su), xp(-a * su * sp, a * su * cp, 0.0);
    Vec3 xuu(-a * su * cp, -a * su * sp, c * cu), xpp(-a * su * cp, -a * su * sp, 0.0), xup(-a * cu * sp, a * cu * cp, 0.0);
    h(0, 0) = xuu.dot(N) / xu.squaredNorm();
    h(1, 1) = xpp.dot(N) / xp.squaredNorm();
    h(0, 1) = h(1, 0) = xup.dot(N) / (xu.norm() * xp.norm());
    return h;
  }
  Vec3 x = m.point(q);
  Eigen::MatrixXd f = m.tangent_frame(q);
  h = m.orientation() * f.transpose() * m.implicit_hess(x) * f / m.implicit_grad(x).norm();
  return h;
}

}  // namespace

double mean_curvature(const BoundaryManifold& m, const BoundaryPoint& xi) {
  Eigen::MatrixXd h = sff_matrix(m, xi);
  return h.trace() / (m.n() - 1);
}

CurvatureReport second_fundamental_form(const BoundaryManifold& m, const BoundaryPoint& xi) {
  CurvatureReport r;
  r.h = sff_matrix(m, xi);
  r.H = r.h.trace() / (m.n() - 1);
  const int k = m.n() - 1;
  Eigen::MatrixXd frame = m.tangent_frame(xi);
  r.dH.resize(k);
  const double d = 1e-3 * std::min(1.0, m.min_curvature_radius());
  for (int i = 0; i < k; ++i) {
    auto cd = [&](double step) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
      v(i) = step;
      double hp = mean_curvature(m, boundary_exponential(m, xi, frame, v).q);
      v(i) = -step;
      double hm = mean_curvature(m, boundary_exponential(m, xi, frame, v).q);
      return (hp - hm) / (2 * step);
    };
    r.dH(i) = (4 * cd(0.5 * d) - cd(d)) / 3;
  }
  return r;
}

std::vector<CurvatureSample> curvature_profile(const BoundaryManifold& m, int samples) {
  require(m.planar(), "curvature profile is defined for planar boundaries");
  require(samples >= 4, "need at least 4 samples");
  std::vector<CurvatureSample> out;
  for (int k = 0; k < samples; ++k) {
    BoundaryPoint q{2 * kPi * k / samples, 0.0};
    CurvatureReport r = second_fundamental_form(m, q);
    out.push_back({q.t, r.H, r.dH(0)});
  }
  return out;
}

// ---------------------------------------------------------------- expansion checks

MetricExpansionReport verify_metric_expansion(const FermiChart& c) {
  const BoundaryManifold& m = c.manifold();
  const int nn = c.n();
  MetricExpansionReport rep;
  CurvatureReport cr = second_fundamental_form(m, c.base());
  // The chart frame and the curvature frame coincide (both tangent_frame(xi)).
  MetricSample g0 = metric_in_fermi(c, Eigen::VectorXd::Zero(nn));
  rep.identity_error = (g0.g - Eigen::MatrixXd::Identity(nn, nn)).cwiseAbs().maxCoeff();

  std::vector<Eigen::VectorXd> dirs;
  for (auto [a, b] : {std::pair{0.6, 0.8}, std::pair{-0.8, 0.6}, std::pair{0.28, 0.96}}) {
    Eigen::VectorXd d(nn);
    if (nn == 2)
      d << a, b;
    else
      d << a * 0.8, a * 0.6, b;
    dirs.push_back(d);
  }
  const double s0 = 0.2 * c.radius();
  for (int k = 0; k < 5; ++k) {
    double s = s0 / std::pow(2.0, k);
    double r1 = 0.0, r3 = 0.0;
    for (const auto& dir : dirs) {
      Eigen::VectorXd y = s * dir;
      MetricSample g = metric_in_fermi(c, y);
      double yn = y(nn - 1);
      for (int i = 0; i < nn - 1; ++i)
        for (int j = 0; j < nn - 1; ++j)
          r1 = std::max(r1, std::abs(g.g_inv(i, j) - ((i == j ? 1.0 : 0.0) + 2.0 * cr.h(i, j) * yn)));
      r3 = std::max(r3, std::abs(g.sqrt_det - (1.0 - (nn - 1) * cr.H * yn)));
      for (int i = 0; i < nn; ++i)
        rep.g2_max = std::max(rep.g2_max, std::abs(g.g_inv(i, nn - 1) - (i == nn - 1 ? 1.0 : 0.0)));
    }
    rep.radii.push_back(s);
    rep.g1_res.push_back(r1);
    rep.g3_res.push_back(r3);
    rep.g1_max = std::max(rep.g1_max, r1);
    rep.g3_max = std::max(rep.g3_max, r3);
  }
  rep.g1_slope = loglog_slope(rep.radii, rep.g1_res, 1e-9);
  rep.g3_slope = loglog_slope(rep.radii, rep.g3_res, 1e-9);

  // mixed derivative of sqrt(g) at the origin
  const double d = 0.02 * c.radius();
  for (int i = 0; i < nn - 1; ++i) {
    auto mixed = [&](double st) {
      auto sg = [&](double a, double b) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(nn);
        y(i) = a;
        y(nn - 1) = b;
        return metric_in_fermi(c, y).sqrt_det;
      };
      return (sg(st, st) - sg(st, -st) - sg(-st, st) + sg(-st, -st)) / (4 * st * st);
    };
    double v = (4 * mixed(0.5 * d) - mixed(d)) / 3;
    rep.mixed_error = std::max(rep.mixed_error, std::abs(v + (nn - 1) * cr.dH(i)));
  }
  return rep;
}

TransitionReport transition_derivatives(const BoundaryManifold& m, const BoundaryPoint& xi0) {
  const int k = m.n() - 1;
  const Eigen::MatrixXd frame0 = m.tangent_frame(xi0);
  const double R = m.chart_radius();
  // E(y, eta): normal coordinates at xi(y) = exp_xi0(y) of the point exp_xi0(eta); frames at xi(y)
  // are transported along the geodesic from xi0.
  auto E = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
    ExpResult base = boundary_exponential(m, xi0, frame0, y);
    ExpResult pt = boundary_exponential(m, xi0, frame0, eta);
    return Eigen::VectorXd(boundary_logarithm(m, base.q, base.frame, pt.q));
  };
  TransitionReport rep;
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(k);
  std::vector<Eigen::VectorXd> etas;
  for (int s = 0; s < 4; ++s) {
    Eigen::VectorXd eta(k);
    for (int i = 0; i < k; ++i) eta(i) = 0.05 * R * (s + 1) * (i == 0 ? 1.0 : -0.6);
    etas.push_back(eta);
  }
  const double d = 1e-3 * R;
  for (const auto& eta : etas) {
    rep.e_identity = std::max(rep.e_identity, (E(zero, eta) - eta).cwiseAbs().maxCoeff());
    for (int j = 0; j < k; ++j) {
      Eigen::VectorXd ep = eta, em = eta;
      ep(j) += d;
      em(j) -= d;
      Eigen::VectorXd col = (E(zero, ep) - E(zero, em)) / (2 * d);
      col(j) -= 1.0;
      rep.de_deta = std::max(rep.de_deta, col.cwiseAbs().maxCoeff());
    }
  }
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd yp = zero, ym = zero;
    yp(j) = d;
    ym(j) = -d;
    Eigen::VectorXd col = (E(yp, zero) - E(ym, zero)) / (2 * d);
    col(j) += 1.0;
    rep.de_dy = std::max(rep.de_dy, col.cwiseAbs().maxCoeff());
  }
  for (double st : {0.08 * R, 0.04 * R, 0.02 * R}) {
    double mx = 0.0;
    for (int j = 0; j < k; ++j)
      for (int h = 0; h < k; ++h) {
        Eigen::VectorXd y = zero, e = zero;
        auto val = [&](double a, double b) {
          y.setZero();
          e.setZero();
          y(j) = a;
          e(h) = b;
          return E(y, e);
        };
        Eigen::VectorXd v = (val(st, st) - val(st, -st) - val(-st, st) + val(-st, -st)) / (4 * st * st);
        mx = std::max(mx, v.cwiseAbs().maxCoeff());
      }
    rep.steps.push_back(st);
    rep.mixed.push_back(mx);
  }
  rep.mixed_slope = loglog_slope(rep.steps, rep.mixed, 1e-8);

  // Tangential part of psi_{xi(y)}^{-1} o psi_{xi0} must not depend on eta_n.
  Eigen::VectorXd y(k), eb(k);
  for (int i = 0; i < k; ++i) {
    y(i) = 0.05 * R * (i == 0 ? 1.0 : 0.5);
    eb(i) = 0.1 * R * (i == 0 ? -1.0 : 0.7);
  }
  FermiChart c0(m, xi0, 0.9 * R);
  ExpResult base = boundary_exponential(m, xi0, frame0, y);
  FermiChart c1(m, base.q, 0.9 * R);
  Eigen::VectorXd ref;
  for (double en : {0.0, 0.1 * R, 0.2 * R}) {
    Eigen::VectorXd eta(k + 1);
    eta.head(k) = eb;
    eta(k) = en;
    Eigen::VectorXd z = c1.inverse(c0.map(eta));
    // express in the transported frame at xi(y)
    Eigen::VectorXd tang = base.frame.transpose() * (c1.frame() * z.head(k));
    if (ref.size() == 0)
      ref = tang;
    else
      rep.h_normal_dependence = std::max(rep.h_normal_dependence, (tang - ref).cwiseAbs().maxCoeff());
  }
  return rep;
}

// ---------------------------------------------------------------- critical points

std::vector<CriticalPoint> find_critical_points(const BoundaryManifold& m, int resolution) {
  require(resolution >= 16, "resolution must be >= 16");
  if (m.planar()) {
    const int N = resolution;
    std::vector<double> t(N), H(N), dH(N);
    for (int k = 0; k < N; ++k) {
      t[k] = 2 * kPi * k / N;
      CurvatureReport r = second_fundamental_form(m, {t[k], 0.0});
      H[k] = r.H;
      dH[k] = r.dH(0);
    }
    double hmax = *std::max_element(H.begin(), H.end()), hmin = *std::min_element(H.begin(), H.end());
    if (hmax - hmin <= 1e-9 * (1.0 + std::max(std::abs(hmax), std::abs(hmin)))) {
      std::vector<CriticalPoint> pts;
      for (int k = 0; k < N; k += N / 8) {
        CriticalPoint c;
        c.xi = {t[k], 0.0};
        c.x = m.point(c.xi);
        c.H = H[k];
        c.dH = std::abs(dH[k]);
        c.kind = "degenerate";
        c.isolated = false;
        pts.push_back(c);
      }
      throw DegenerateLandscapeError(pts, "mean curvature is constant along the boundary");
    }
    const double tol = 1e-8 * (hmax - hmin + 1.0);
    auto dHat = [&](double tt) { return second_fundamental_form(m, {tt, 0.0}).dH(0); };
    auto sgn = [&](double v) { return std::abs(v) < tol ? 0 : (v > 0 ? 1 : -1); };
    std::vector<double> roots;
    for (int k = 0; k < N; ++k) {
      int s0 = sgn(dH[k]), s1 = sgn(dH[(k + 1) % N]);
      if (s0 == 0) {
        int sp = sgn(dH[(k + N - 1) % N]);
        if (sp != 0 || k == 0) roots.push_back(t[k]);
        continue;
      }
      if (s1 == 0 || s0 * s1 > 0) continue;
      double lo = t[k], hi = t[k] + 2 * kPi / N, flo = dH[k];
      for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        double mid = 0.5 * (lo + hi), fm = dHat(mid);
        if (sgn(fm) == 0) {
          lo = hi = mid;
          break;
        }
        if ((fm > 0) == (flo > 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    std::vector<CriticalPoint> out;
    const double ds = 1e-2 * m.min_curvature_radius();
    for (double r : roots) {
      double tr = std::fmod(r + 2 * kPi, 2 * kPi);
      bool dup = false;
      for (const auto& c : out)
        if (std::abs(wrap_pi(c.xi.t - tr)) < 1e-7) dup = true;
      if (dup) continue;
      CriticalPoint c;
      c.xi = {tr, 0.0};
      c.x = m.point(c.xi);
      c.H = m.curvature(tr);
      c.dH = std::abs(dHat(tr));
      double d2 = m.curvature(m.advance(tr, ds)) - 2 * c.H + m.curvature(m.advance(tr, -ds));
      double thr = 1e-10 * (hmax - hmin + 1.0);
      c.kind = d2 < -thr ? "max" : (d2 > thr ? "min" : "degenerate");
      c.stable = c.kind != "degenerate";
      c.isolated = true;
      out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.xi.t < b.xi.t; });
    return out;
  }

  // Surfaces of revolution: H depends on the polar angle only.
  if (std::abs(m.a() - m.b()) <= 1e-12 * m.a()) {
    std::vector<CriticalPoint> pts;
    for (double u : {0.0, kPi / 2, kPi}) {
      CriticalPoint c;
      c.xi = {u, 0.0};
      c.x = m.point(c.xi);
      c.H = mean_curvature(m, c.xi);
      c.kind = "degenerate";
      c.isolated = false;
      pts.push_back(c);
    }
    throw DegenerateLandscapeError(pts, "mean curvature is constant on the sphere");
  }
  const int N = resolution;
  auto Hu = [&](double u) { return mean_curvature(m, {u, 0.0}); };
  const double du = 1e-4;
  auto dHu = [&](double u) { return (Hu(u + du) - Hu(u - du)) / (2 * du); };
  std::vector<double> roots{0.0, kPi};
  double prev = dHu(kPi / N);
  for (int k = 1; k < N - 1; ++k) {
    double u0 = kPi * k / N, u1 = kPi * (k + 1) / N, f1 = dHu(u1);
    if (prev == 0.0) roots.push_back(u0);
    if (prev * f1 < 0) {
      double lo = u0, hi = u1, flo = prev;
      for (int it = 0; it < 100 && hi - lo > 1e-13; ++it) {
        double mid = 0.5 * (lo + hi), fm = dHu(mid);
        if ((fm > 0) == (flo > 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev = f1;
  }
  std::vector<CriticalPoint> out;
  for (double u : roots) {
    CriticalPoint c;
    c.xi = {u, 0.0};
    c.x = m.point(c.xi);
    c.H = Hu(u);
    double e = 1e-2;
    double d2 = (u == 0.0 || u == kPi) ? 2 * (Hu(u == 0.0 ? e : kPi - e) - c.H) : Hu(u + e) - 2 * c.H + Hu(u - e);
    c.kind = d2 < 0 ? "max" : "min";
    c.isolated = (u == 0.0 || u == kPi);
    c.stable = std::abs(d2) > 1e-12;
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.xi.t < b.xi.t; });
  return out;
}

}  // namespace spike
