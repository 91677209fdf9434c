#include "spike/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spike/quadrature.hpp"

namespace spike {

double Cutoff::bump(double t) const {
  double h = 0.5 * R;
  if (t <= h) return 1.0;
  if (t >= R) return 0.0;
  double s = (t - h) / h;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double Cutoff::dbump(double t) const {
  double h = 0.5 * R;
  if (t <= h || t >= R) return 0.0;
  double s = (t - h) / h;
  return -30.0 * s * s * (1.0 - s) * (1.0 - s) / h;
}

double Cutoff::d2bump(double t) const {
  double h = 0.5 * R;
  if (t <= h || t >= R) return 0.0;
  double s = (t - h) / h;
  return -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (h * h);
}

double Cutoff::max_gradient() const { return std::sqrt(2.0) * 1.875 / (0.5 * R); }

PeakAnsatz::PeakAnsatz(const BoundaryManifold& m, const GroundStateProfile& p, double e, const BoundaryPoint& xi,
                       double R_cut)
    : prof(&p), chart(m, xi), eps(e), cut{R_cut} {
  require(e > 0, "eps must be positive");
  if (R_cut > chart.radius()) fail(ErrorKind::ChartOverflow, "R_cut exceeds the chart validity radius");
  if (p.params.n != m.n()) fail(ErrorKind::DimensionMismatch, "profile dimension differs from the domain dimension");
}

namespace {

bool ansatz_coords(const PeakAnsatz& a, const Vec3& x, Eigen::VectorXd& y) {
  const Vec3 base = a.chart.manifold().point(a.chart.base());
  if ((x - base).norm() >= 2.0 * a.cut.R) return false;
  if (!a.chart.try_inverse(x, y)) return false;
  const int n = a.chart.n();
  return y.head(n - 1).norm() < a.cut.R && std::abs(y(n - 1)) < a.cut.R;
}

}  // namespace

double eval_ansatz(const PeakAnsatz& a, const Vec3& x) {
  Eigen::VectorXd y;
  if (!ansatz_coords(a, x, y)) return 0.0;
  const int n = a.chart.n();
  double chi = a.cut.value(y.head(n - 1).norm(), y(n - 1));
  return chi == 0.0 ? 0.0 : eval_profile(*a.prof, y.norm() / a.eps).v * chi;
}

double basis_function(const PeakAnsatz& a, int i, const Vec3& x) {
  const int n = a.chart.n();
  require(i >= 0 && i < n - 1, "basis index out of range");
  Eigen::VectorXd y;
  if (!ansatz_coords(a, x, y)) return 0.0;
  double chi = a.cut.value(y.head(n - 1).norm(), y(n - 1));
  if (chi == 0.0) return 0.0;
  double r = std::max(y.norm() / a.eps, 1e-8);
  return eval_profile(*a.prof, r).dv / r * (y(i) / a.eps) * chi;
}

namespace {

struct Metric {
  Eigen::Matrix3d ginv;
  double sqrt_det;
};

inline Metric metric_at(const TangentJet& j, double yn, int n) {
  Metric m;
  if (n == 2) {
    Vec3 J1 = j.dF.col(0) + yn * j.dN.col(0);
    double g11 = J1.squaredNorm(), g12 = J1.dot(j.N), g22 = 1.0;
    double det = g11 * g22 - g12 * g12;
    if (!(det > 0)) fail(ErrorKind::SingularMetric, "Fermi metric is singular");
    m.ginv.setZero();
    m.ginv(0, 0) = g22 / det;
    m.ginv(0, 1) = m.ginv(1, 0) = -g12 / det;
    m.ginv(1, 1) = g11 / det;
    m.sqrt_det = std::sqrt(det);
    return m;
  }
  Eigen::Matrix3d J;
  J.col(0) = j.dF.col(0) + yn * j.dN.col(0);
  J.col(1) = j.dF.col(1) + yn * j.dN.col(1);
  J.col(2) = j.N;
  Eigen::Matrix3d g = J.transpose() * J;
  double det = g.determinant();
  if (!(det > 0)) fail(ErrorKind::SingularMetric, "Fermi metric is singular");
  m.ginv = g.inverse();
  m.sqrt_det = std::sqrt(det);
  return m;
}

double energy_sum(const FermiChart& chart, const GroundStateProfile& prof, double eps, const Cutoff& cut, int ppp,
                  int ntheta, Exec exec, std::size_t& nodes) {
  const int n = chart.n();
  const double p = prof.params.p;
  const double Z = cut.R / eps;
  const Panel1D rad = panel_rule(geometric_breaks(Z, {0.5 * Z}), ppp);
  struct TNode {
    double z1, z2, w;
  };
  std::vector<TNode> tn;
  for (std::size_t k = 0; k < rad.x.size(); ++k) {
    double rho = rad.x[k];
    if (n == 2) {
      tn.push_back({rho, 0.0, rad.w[k]});
      tn.push_back({-rho, 0.0, rad.w[k]});
    } else {
      for (int a = 0; a < ntheta; ++a) {
        double th = 2.0 * std::numbers::pi * a / ntheta;
        tn.push_back({rho * std::cos(th), rho * std::sin(th), rad.w[k] * rho * 2.0 * std::numbers::pi / ntheta});
      }
    }
  }
  nodes = tn.size() * rad.x.size();
  std::vector<double> rows(tn.size(), 0.0);
  for_each_index(
      tn.size(),
      [&](std::size_t k) {
        const TNode& t = tn[k];
        Eigen::VectorXd ybar(n - 1);
        ybar(0) = eps * t.z1;
        if (n == 3) ybar(1) = eps * t.z2;
        TangentJet jet = chart.jet(ybar);
        double rho = std::hypot(t.z1, t.z2);
        double bt = cut.bump(eps * rho), dbt = cut.dbump(eps * rho);
        double s = 0.0;
        for (std::size_t l = 0; l < rad.x.size(); ++l) {
          double zn = rad.x[l], yn = eps * zn;
          double bn = cut.bump(yn), dbn = cut.dbump(yn);
          double chi = bt * bn;
          if (chi == 0.0) continue;
          Metric g = metric_at(jet, yn, n);
          double r = std::sqrt(rho * rho + zn * zn);
          ProfileValue u = eval_profile(prof, r);
          double W = u.v * chi;
          double gz[3] = {0, 0, 0};
          double ur = u.dv / r;
          gz[0] = ur * t.z1 * chi + u.v * eps * dbt * (t.z1 / rho) * bn;
          if (n == 3) gz[1] = ur * t.z2 * chi + u.v * eps * dbt * (t.z2 / rho) * bn;
          gz[n - 1] = ur * zn * chi + u.v * eps * bt * dbn;
          double q = 0.0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) q += g.ginv(i, j) * gz[i] * gz[j];
          double dens = 0.5 * q + 0.5 * W * W - std::pow(std::max(W, 0.0), p) / p;
          s += rad.w[l] * dens * g.sqrt_det;
        }
        rows[k] = t.w * s;
      },
      exec);
  double J = 0.0;
  for (double r : rows) J += r;
  return J;
}

}  // namespace

ReducedEnergy reduced_energy(const BoundaryManifold& m, const GroundStateProfile& prof, double eps,
                             const BoundaryPoint& xi, double R_cut, const QuadOptions& q) {
  require(eps > 0, "eps must be positive");
  require(eps <= R_cut / 10.0 * (1 + 1e-12), "eps must not exceed R_cut/10");
  if (prof.params.n != m.n()) fail(ErrorKind::DimensionMismatch, "profile dimension differs from the domain dimension");
  FermiChart chart(m, xi);
  if (R_cut > chart.radius()) fail(ErrorKind::ChartOverflow, "R_cut exceeds the chart validity radius");
  Cutoff cut{R_cut};
  std::size_t n1 = 0, n2 = 0;
  double J1 = energy_sum(chart, prof, eps, cut, q.points_per_panel, q.angular_points, q.exec, n1);
  double J2 = energy_sum(chart, prof, eps, cut, q.points_per_panel + 8, q.angular_points + 16, q.exec, n2);
  ReducedEnergy r;
  r.J = J2;
  r.error_estimate = std::abs(J2 - J1);
  r.nodes = n2;
  if (r.error_estimate > q.tol * std::max(1.0, std::abs(J2)))
    fail(ErrorKind::QuadratureUnstable, "reduced energy refinement differs by " + std::to_string(r.error_estimate));
  return r;
}

Eigen::VectorXd reduced_energy_gradient(const BoundaryManifold& m, const GroundStateProfile& prof, double eps,
                                        const BoundaryPoint& xi, double R_cut, const QuadOptions& q) {
  const int k = m.n() - 1;
  const double d = eps / 10.0;
  Eigen::MatrixXd frame = m.tangent_frame(xi);
  Eigen::VectorXd g(k);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
    v(i) = d;
    double jp = reduced_energy(m, prof, eps, boundary_exponential(m, xi, frame, v).q, R_cut, q).J;
    v(i) = -d;
    double jm = reduced_energy(m, prof, eps, boundary_exponential(m, xi, frame, v).q, R_cut, q).J;
    g(i) = (jp - jm) / (2 * d);
  }
  return g;
}

ExpansionFit fit_expansion(const BoundaryManifold& m, const GroundStateProfile& prof, const BoundaryPoint& xi,
                           const std::vector<double>& eps_list, double R_cut, const QuadOptions& q) {
  require(eps_list.size() >= 4, "need at least 4 eps values");
  ExpansionFit f;
  f.eps = eps_list;
  f.eps_min = *std::min_element(eps_list.begin(), eps_list.end());
  f.eps_max = *std::max_element(eps_list.begin(), eps_list.end());
  require(f.eps_max >= 4.0 * f.eps_min * (1 - 1e-12), "eps values must span a factor of at least 4");
  f.H = mean_curvature(m, xi);
  if (std::abs(f.H) < 1e-8) fail(ErrorKind::DegenerateH, "mean curvature vanishes at xi");
  f.in_window = f.eps_min >= R_cut / 200.0 * (1 - 1e-12) && f.eps_max <= R_cut / 25.0 * (1 + 1e-12);
  for (double e : eps_list) f.J.push_back(reduced_energy(m, prof, e, xi, R_cut, q).J);
  const double N = static_cast<double>(eps_list.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    sx += f.eps[i];
    sy += f.J[i];
    sxx += f.eps[i] * f.eps[i];
    sxy += f.eps[i] * f.J[i];
  }
  f.slope_hat = (N * sxy - sx * sy) / (N * sxx - sx * sx);
  f.C_hat = (sy - f.slope_hat * sx) / N;
  double ybar = sy / N, ss_tot = 0, ss_res = 0;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    double e = f.J[i] - (f.C_hat + f.slope_hat * f.eps[i]);
    ss_res += e * e;
    ss_tot += (f.J[i] - ybar) * (f.J[i] - ybar);
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  f.alpha_hat = -f.slope_hat / f.H;
  return f;
}

GradientCheck gradient_check(const BoundaryManifold& m, const GroundStateProfile& prof, double eps,
                             const BoundaryPoint& xi, double R_cut, double alpha, const QuadOptions& q) {
  CurvatureReport cr = second_fundamental_form(m, xi);
  require(cr.dH.norm() > 1e-8, "gradient check needs a non-critical point of H");
  GradientCheck g;
  g.grad = reduced_energy_gradient(m, prof, eps, xi, R_cut, q);
  g.predicted = -eps * alpha * cr.dH;
  g.rel_deviation = (g.grad - g.predicted).norm() / g.predicted.norm();
  return g;
}

std::vector<PeakPrediction> predict_peaks(const BoundaryManifold& m, double eps, const MomentReport& constants,
                                          int resolution) {
  std::vector<CriticalPoint> cps = find_critical_points(m, resolution);
  double hmax = -1e300;
  for (const auto& c : cps) hmax = std::max(hmax, c.H);
  std::vector<PeakPrediction> out;
  for (const auto& c : cps) {
    if (!c.stable) continue;
    PeakPrediction pp;
    pp.point = c;
    pp.J_pred = constants.C - eps * constants.alpha * c.H;
    if (c.kind == "max" && c.H >= hmax - 1e-12)
      pp.role = "least-energy";
    else
      pp.role = "local-" + c.kind;
    out.push_back(pp);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.J_pred < b.J_pred; });
  return out;
}

std::vector<LandscapeRow> reduced_landscape(const BoundaryManifold& m, const GroundStateProfile& prof, double eps,
                                            double R_cut, int samples, const QuadOptions& q) {
  require(samples >= 2, "need at least 2 samples");
  std::vector<LandscapeRow> rows;
  for (int k = 0; k < samples; ++k) {
    BoundaryPoint xi;
    if (m.planar())
      xi.t = 2.0 * std::numbers::pi * k / samples;
    else
      xi.t = std::numbers::pi * (k + 0.5) / samples;
    LandscapeRow r;
    r.xi_param = xi.t;
    r.eps = eps;
    r.J = reduced_energy(m, prof, eps, xi, R_cut, q).J;
    r.gradJ = reduced_energy_gradient(m, prof, eps, xi, R_cut, q)(0);
    r.H = mean_curvature(m, xi);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace spike
