#include "spike/profile.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "spike/error.hpp"
#include "spike/quadrature.hpp"

namespace spike {

void Parameters::validate() const {
  require(n >= 1, "n must be >= 1");
  require(std::isfinite(p) && p > 2.0, "p must be > 2");
  if (n >= 3) require(p < 2.0 * n / (n - 2.0), "p must be below the critical Sobolev exponent 2n/(n-2)");
}

namespace {

inline double spow(double v, double e) { return v >= 0 ? std::pow(v, e) : -std::pow(-v, e); }

struct Rhs {
  int n;
  double p;
  void operator()(double r, double v, double w, double& dv, double& dw) const {
    dv = w;
    dw = -(n - 1) / r * w + v - spow(v, p - 1.0);
  }
};

inline void rk4(const Rhs& f, double r, double h, double& v, double& w) {
  double k1v, k1w, k2v, k2w, k3v, k3w, k4v, k4w;
  f(r, v, w, k1v, k1w);
  f(r + 0.5 * h, v + 0.5 * h * k1v, w + 0.5 * h * k1w, k2v, k2w);
  f(r + 0.5 * h, v + 0.5 * h * k2v, w + 0.5 * h * k2w, k3v, k3w);
  f(r + h, v + h * k3v, w + h * k3w, k4v, k4w);
  v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  w += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
}

enum class Shot { Over, Under, Open };

struct Trajectory {
  std::vector<double> v, w;
  Shot kind = Shot::Open;
};

Trajectory shoot(const Parameters& P, double V0, double h, std::size_t N) {
  Rhs f{P.n, P.p};
  Trajectory t;
  t.v.reserve(N + 1);
  t.w.reserve(N + 1);
  t.v.push_back(V0);
  t.w.push_back(0.0);
  // V = V0 + a r^2 + b r^4 near the origin
  double a = (V0 - std::pow(V0, P.p - 1.0)) / (2.0 * P.n);
  double b = (1.0 - (P.p - 1.0) * std::pow(V0, P.p - 2.0)) * a / (4.0 * (P.n + 2));
  double v = V0 + a * h * h + b * h * h * h * h, w = 2 * a * h + 4 * b * h * h * h;
  t.v.push_back(v);
  t.w.push_back(w);
  for (std::size_t k = 1; k < N; ++k) {
    rk4(f, k * h, h, v, w);
    if (!std::isfinite(v) || v < 0.0) {
      t.kind = Shot::Over;
      return t;
    }
    if (w > 0.0) {
      t.kind = Shot::Under;
      return t;
    }
    t.v.push_back(v);
    t.w.push_back(w);
  }
  return t;
}

// r^(1-n/2) K_(n/2-1)(r): decaying solution of the linearised radial equation, and its derivative.
void bessel_tail(int n, double r, double& phi, double& dphi) {
  double nu = 0.5 * n - 1.0;
  double s = std::pow(r, -nu);
  phi = s * std::cyl_bessel_k(std::abs(nu), r);
  dphi = -s * std::cyl_bessel_k(std::abs(nu + 1.0), r);
}

// Upper incomplete gamma for large x by its asymptotic series.
double upper_gamma_large(double a, double x) {
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    double next = term * (a - k) / x;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return std::pow(x, a - 1.0) * std::exp(-x) * sum;
}

// int_R^inf r^s e^(-k r) dr
double tail_moment(double s, double k, double R) {
  return std::pow(k, -(s + 1.0)) * upper_gamma_large(s + 1.0, k * R);
}

double fit_decay(int n, double r, double v) {
  double phi, dphi;
  bessel_tail(n, r, phi, dphi);
  return v / phi * std::sqrt(std::numbers::pi / 2.0);
}

}  // namespace

GroundStateProfile solve_ground_state(const Parameters& params, const ShootOptions& opt) {
  params.validate();
  require(opt.grid_step > 0 && opt.grid_step <= 0.01, "grid_step must lie in (0, 0.01]");
  require(opt.r_max >= 20.0, "r_max must be >= 20");
  require(opt.shoot_tol > 0, "shoot_tol must be positive");
  const double h = opt.grid_step;
  std::size_t N = static_cast<std::size_t>(std::ceil(opt.r_max / h - 1e-9));
  N += (4 - N % 4) % 4;

  double lo = 1.0, hi = 2.0;
  while (shoot(params, hi, h, N).kind != Shot::Over) {
    hi *= 2.0;
    if (hi > 1e6) fail(ErrorKind::NoBracket, "no overshooting initial value below 1e6");
  }
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (shoot(params, mid, h, N).kind == Shot::Over)
      hi = mid;
    else
      lo = mid;
  }
  Trajectory a = shoot(params, lo, h, N), b = shoot(params, hi, h, N);

  // The shot is trusted while the two bracketing trajectories agree.
  std::size_t km = 1;
  std::size_t lim = std::min(a.v.size(), b.v.size());
  while (km + 1 < lim && std::abs(a.v[km + 1] - b.v[km + 1]) <= 1e-9 * std::abs(a.v[km + 1])) ++km;
  km = std::min(km, N - static_cast<std::size_t>(std::ceil(2.0 / h)));
  if (km * h < 2.0) fail(ErrorKind::NotConverged, "shooting bracket diverges too early");

  GroundStateProfile prof;
  prof.params = params;
  prof.grid_step = h;
  prof.r_max = N * h;
  prof.r.resize(N + 1);
  prof.v.resize(N + 1);
  prof.dv.resize(N + 1);
  for (std::size_t k = 0; k <= N; ++k) prof.r[k] = k * h;
  for (std::size_t k = 0; k <= km; ++k) {
    prof.v[k] = a.v[k];
    prof.dv[k] = a.w[k];
  }

  // Inward integration of the full equation from the Bessel tail, amplitude matched at r_km.
  Rhs f{params.n, params.p};
  auto tail = [&](double A) {
    double phi, dphi;
    bessel_tail(params.n, prof.r[N], phi, dphi);
    double v = A * phi, w = A * dphi;
    prof.v[N] = v;
    prof.dv[N] = w;
    for (std::size_t k = N; k > km; --k) {
      rk4(f, prof.r[k], -h, v, w);
      if (k - 1 > km) {
        prof.v[k - 1] = v;
        prof.dv[k - 1] = w;
      }
    }
    return std::pair{v, w};
  };
  double phi_m, dphi_m;
  bessel_tail(params.n, prof.r[km], phi_m, dphi_m);
  double A = a.v[km] / phi_m;
  for (int it = 0; it < 60; ++it) {
    double vt = tail(A).first;
    if (std::abs(vt - a.v[km]) <= 1e-15 * a.v[km]) break;
    A *= a.v[km] / vt;
  }
  tail(A);
  prof.match_radius = prof.r[km];
  prof.decay_c = A * std::sqrt(std::numbers::pi / 2.0);

  double res = 0.0;
  for (std::size_t k = 2; k + 2 <= N; ++k) {
    double d2 = (-prof.dv[k + 2] + 8 * prof.dv[k + 1] - 8 * prof.dv[k - 1] + prof.dv[k - 2]) / (12 * h);
    double rr = d2 + (params.n - 1) / prof.r[k] * prof.dv[k] - prof.v[k] + spow(prof.v[k], params.p - 1);
    res = std::max(res, std::abs(rr));
  }
  prof.max_residual = res;
  if (!(res <= opt.shoot_tol))
    fail(ErrorKind::NotConverged, "profile residual " + std::to_string(res) + " above shoot_tol");
  return prof;
}

double tail_constant_deviation(const GroundStateProfile& prof) {
  double worst = 0.0;
  const double half = 0.5 * (prof.params.n - 1);
  for (std::size_t i = 0; i < prof.r.size(); ++i) {
    double r = prof.r[i];
    if (r < 0.9 * prof.r_max) continue;
    worst = std::max(worst, std::abs(prof.v[i] * std::pow(r, half) * std::exp(r) / prof.decay_c - 1.0));
  }
  return worst;
}

ProfileValue eval_profile(const GroundStateProfile& prof, double r) {
  r = std::abs(r);
  const int n = prof.params.n;
  if (r >= prof.r_max) {
    double a = 0.5 * (n - 1);
    double v = prof.decay_c * std::pow(r, -a) * std::exp(-r);
    return {v, -v * (1.0 + a / r)};
  }
  const double h = prof.grid_step;
  std::size_t k = static_cast<std::size_t>(r / h);
  if (k + 1 >= prof.r.size()) k = prof.r.size() - 2;
  double t = (r - prof.r[k]) / h;
  double v0 = prof.v[k], v1 = prof.v[k + 1], d0 = prof.dv[k] * h, d1 = prof.dv[k + 1] * h;
  double t2 = t * t, t3 = t2 * t;
  double v = (2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * v1 + (t3 - t2) * d1;
  double dv = ((6 * t2 - 6 * t) * v0 + (3 * t2 - 4 * t + 1) * d0 + (-6 * t2 + 6 * t) * v1 + (3 * t2 - 2 * t) * d1) / h;
  return {v, dv};
}

double halfspace_angular_moment(int n, int a, int b) {
  require(n >= 1, "n must be >= 1");
  if ((a != 0 && a != 1) || (b != 1 && b != 3))
    fail(ErrorKind::UnsupportedMoment, "moment (" + std::to_string(a) + "," + std::to_string(b) + ") not supported");
  if (n == 1) {
    if (a != 0) fail(ErrorKind::UnsupportedMoment, "n = 1 has no tangential direction");
    return 1.0;
  }
  // prod Gamma(beta_i) / Gamma(sum beta_i), beta_i = (exponent_i + 1) / 2
  double b1 = a + 0.5, bn = 0.5 * (b + 1), rest = 0.5 * (n - 2);
  double lg = std::lgamma(b1) + std::lgamma(bn) + (n - 2) * std::lgamma(0.5) - std::lgamma(b1 + bn + rest);
  return std::exp(lg);
}

double half_sphere_area(int n) { return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n); }

RadialIntegrals radial_integrals(const GroundStateProfile& prof) {
  const int n = prof.params.n;
  const double p = prof.params.p;
  const std::size_t M = prof.r.size();
  const double h = prof.grid_step, R = prof.r_max, c = prof.decay_c, a = 0.5 * (n - 1);
  RadialIntegrals out;
  std::vector<double> f(M);
  auto integrate = [&](auto&& g, double tail) {
    for (std::size_t k = 0; k < M; ++k) f[k] = g(k);
    double s1 = simpson(f, h, 1), s2 = simpson(f, h, 2);
    double est = std::abs(s1 - s2) / 15.0;
    double total = s1 + tail;
    if (total != 0.0) out.max_rel_error = std::max(out.max_rel_error, est / std::abs(total));
    return total;
  };
  auto rp = [&](std::size_t k, int m) { return m == 0 ? 1.0 : std::pow(prof.r[k], m); };
  auto sq_tail = [&](int m) { return c * c * tail_moment(m - 2 * a, 2.0, R); };
  auto grad_tail = [&](int m) {
    double s = m - 2 * a;
    return c * c * (tail_moment(s, 2.0, R) + 2 * a * tail_moment(s - 1, 2.0, R) + a * a * tail_moment(s - 2, 2.0, R));
  };
  auto pow_tail = [&](int m) { return std::pow(c, p) * tail_moment(m - p * a, p, R); };
  auto vp = [&](std::size_t k) { return std::pow(std::max(prof.v[k], 0.0), p); };

  out.grad_n = integrate([&](std::size_t k) { return prof.dv[k] * prof.dv[k] * rp(k, n); }, grad_tail(n));
  out.sq_n = integrate([&](std::size_t k) { return prof.v[k] * prof.v[k] * rp(k, n); }, sq_tail(n));
  out.pow_n = integrate([&](std::size_t k) { return vp(k) * rp(k, n); }, pow_tail(n));
  out.grad_nm1 = integrate([&](std::size_t k) { return prof.dv[k] * prof.dv[k] * rp(k, n - 1); }, grad_tail(n - 1));
  out.sq_nm1 = integrate([&](std::size_t k) { return prof.v[k] * prof.v[k] * rp(k, n - 1); }, sq_tail(n - 1));
  out.pow_nm1 = integrate([&](std::size_t k) { return vp(k) * rp(k, n - 1); }, pow_tail(n - 1));
  out.z2_grad = integrate([&](std::size_t k) { return prof.dv[k] * prof.dv[k] * rp(k, n + 1); }, grad_tail(n + 1));
  return out;
}

PohozaevCheck check_pohozaev_zn(const GroundStateProfile& prof) {
  const int n = prof.params.n;
  RadialIntegrals I = radial_integrals(prof);
  double A1 = halfspace_angular_moment(n, 0, 1), A3 = halfspace_angular_moment(n, 0, 3);
  PohozaevCheck c;
  c.lhs = A3 * I.grad_n;
  c.rhs = A1 * (0.5 * I.grad_n + 0.5 * I.sq_n - I.pow_n / prof.params.p);
  c.rel_residual = std::abs(c.lhs - c.rhs) / std::abs(c.lhs);
  return c;
}

MomentReport compute_constants(const GroundStateProfile& prof, double quad_tol) {
  const int n = prof.params.n;
  const double p = prof.params.p;
  RadialIntegrals I = radial_integrals(prof);
  if (I.max_rel_error > quad_tol)
    fail(ErrorKind::QuadratureUnstable, "radial Simpson refinement disagrees by " + std::to_string(I.max_rel_error));
  MomentReport m;
  m.n = n;
  m.p = p;
  m.quadrature_error = I.max_rel_error;
  double half = half_sphere_area(n);
  double A1 = halfspace_angular_moment(n, 0, 1), A3 = halfspace_angular_moment(n, 0, 3);
  m.moments["grad_zn"] = A1 * I.grad_n;
  m.moments["sq_zn"] = A1 * I.sq_n;
  m.moments["pow_zn"] = A1 * I.pow_n;
  m.moments["dzn_sq_zn"] = A3 * I.grad_n;
  m.moments["radial_zn3"] = A3 * I.grad_n;
  if (n >= 2) {
    double A11 = halfspace_angular_moment(n, 1, 1);
    m.moments["radial_z1sq_zn"] = A11 * I.grad_n;
    m.moment_identity_residual = std::abs(A11 * I.grad_n - 0.5 * A3 * I.grad_n) / (A3 * I.grad_n);
  }
  m.moments["A_0_1"] = A1;
  m.moments["A_0_3"] = A3;
  m.C = half * (0.5 * I.grad_nm1 + 0.5 * I.sq_nm1 - I.pow_nm1 / p);
  m.alpha = 0.5 * (n - 1) * A3 * I.grad_n;
  m.nehari_residual = std::abs(I.grad_nm1 + I.sq_nm1 - I.pow_nm1) / I.pow_nm1;
  double c_alt = (0.5 - 1.0 / p) * half * I.pow_nm1;
  m.energy_identity_residual = std::abs(m.C - c_alt) / std::abs(c_alt);
  m.pohozaev_residual = check_pohozaev_zn(prof).rel_residual;
  return m;
}

void write_profile_csv(std::ostream& os, const GroundStateProfile& prof) {
  os << "r,V,dV\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < prof.r.size(); ++k) os << prof.r[k] << ',' << prof.v[k] << ',' << prof.dv[k] << '\n';
}

GroundStateProfile read_profile_csv(std::istream& is, const Parameters& params) {
  params.validate();
  std::string line;
  if (!std::getline(is, line) || line.rfind("r,V,dV", 0) != 0) fail(ErrorKind::InvalidArgument, "profile csv: bad header");
  GroundStateProfile prof;
  prof.params = params;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    double r, v, dv;
    char c1, c2;
    if (!(ls >> r >> c1 >> v >> c2 >> dv) || c1 != ',' || c2 != ',') fail(ErrorKind::InvalidArgument, "profile csv: bad row");
    prof.r.push_back(r);
    prof.v.push_back(v);
    prof.dv.push_back(dv);
  }
  require(prof.r.size() >= 5, "profile csv: too few rows");
  prof.grid_step = prof.r[1] - prof.r[0];
  prof.r_max = prof.r.back();
  prof.match_radius = prof.r_max;
  prof.decay_c = fit_decay(params.n, prof.r_max, prof.v.back());
  return prof;
}

}  // namespace spike
