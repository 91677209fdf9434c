#include "spike/pde.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "spike/error.hpp"
#include "spike/parallel.hpp"
#include "spike/reduction.hpp"

namespace spike {

namespace {

void check_field(const DiscreteDomain& d, const Eigen::VectorXd& u) {
  require(static_cast<std::size_t>(u.size()) == d.size(), "field length differs from the node count");
}

Eigen::VectorXd positive_power(const Eigen::VectorXd& u, double q) {
  return u.unaryExpr([q](double x) { return x > 0 ? std::pow(x, q) : 0.0; });
}

}  // namespace

double discrete_inner(const DiscreteDomain& d, const Eigen::VectorXd& u, const Eigen::VectorXd& v, double eps) {
  check_field(d, u);
  check_field(d, v);
  require(eps > 0, "eps must be positive");
  double grad = v.dot(d.stiffness() * u);
  double l2 = (d.weights().array() * u.array() * v.array()).sum();
  return (eps * eps * grad + l2) / (eps * eps);
}

double discrete_norm(const DiscreteDomain& d, const Eigen::VectorXd& u, double eps) {
  return std::sqrt(std::max(0.0, discrete_inner(d, u, u, eps)));
}

double lebesgue_norm(const DiscreteDomain& d, const Eigen::VectorXd& v, double q, double eps) {
  check_field(d, v);
  double s = (d.weights().array() * v.array().abs().pow(q)).sum();
  return std::pow(s / (eps * eps), 1.0 / q);
}

IStar::IStar(const DiscreteDomain& d, double eps) : d_(&d), eps_(eps) {
  require(eps > 0, "eps must be positive");
  Eigen::SparseMatrix<double> A = eps * eps * d.stiffness();
  for (Eigen::Index i = 0; i < A.rows(); ++i) A.coeffRef(i, i) += d.weights()(i);
  llt_ = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>(A);
  if (llt_->info() != Eigen::Success) fail(ErrorKind::LinearSolveFailed, "Cholesky factorisation of eps^2 K + M failed");
}

Eigen::VectorXd IStar::apply(const Eigen::VectorXd& v) const {
  check_field(*d_, v);
  Eigen::VectorXd u = llt_->solve(d_->weights().cwiseProduct(v));
  if (llt_->info() != Eigen::Success) fail(ErrorKind::LinearSolveFailed, "i* solve failed");
  return u;
}

Eigen::VectorXd apply_istar(const DiscreteDomain& d, double eps, const Eigen::VectorXd& v) {
  return IStar(d, eps).apply(v);
}

double weak_identity_residual(const DiscreteDomain& d, double eps, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                              const Eigen::VectorXd& phi) {
  double lhs = discrete_inner(d, u, phi, eps);
  double rhs = (d.weights().array() * v.array() * phi.array()).sum() / (eps * eps);
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
}

Eigen::VectorXd sample_ansatz(const DiscreteDomain& d, const GroundStateProfile& prof, double eps,
                              const BoundaryPoint& xi, double R_cut) {
  PeakAnsatz a(d.manifold(), prof, eps, xi, R_cut);
  Eigen::VectorXd w(static_cast<Eigen::Index>(d.size()));
  for_each_index(
      d.size(),
      [&](std::size_t i) {
        const Vec2& x = d.nodes()[i];
        w(static_cast<Eigen::Index>(i)) = eval_ansatz(a, Vec3(x.x(), x.y(), 0.0));
      },
      default_exec());
  return w;
}

Eigen::VectorXd sample_basis(const DiscreteDomain& d, const GroundStateProfile& prof, double eps,
                             const BoundaryPoint& xi, double R_cut) {
  PeakAnsatz a(d.manifold(), prof, eps, xi, R_cut);
  Eigen::VectorXd z(static_cast<Eigen::Index>(d.size()));
  for_each_index(
      d.size(),
      [&](std::size_t i) {
        const Vec2& x = d.nodes()[i];
        z(static_cast<Eigen::Index>(i)) = basis_function(a, 0, Vec3(x.x(), x.y(), 0.0));
      },
      default_exec());
  return z;
}

RemainderReport remainder_norm(const DiscreteDomain& d, double eps, const BoundaryPoint& xi,
                               const GroundStateProfile& prof, double R_cut) {
  require(prof.params.n == 2, "the remainder study runs on planar domains (n = 2)");
  const double p = prof.params.p;
  Eigen::VectorXd W = sample_ansatz(d, prof, eps, xi, R_cut);
  Eigen::VectorXd r = IStar(d, eps).apply(positive_power(W, p - 1.0)) - W;
  std::vector<Eigen::VectorXd> Z{sample_basis(d, prof, eps, xi, R_cut)};
  const int k = static_cast<int>(Z.size());
  Eigen::MatrixXd G(k, k);
  Eigen::VectorXd b(k);
  for (int i = 0; i < k; ++i) {
    b(i) = discrete_inner(d, Z[i], r, eps);
    for (int j = 0; j < k; ++j) G(i, j) = discrete_inner(d, Z[i], Z[j], eps);
  }
  Eigen::VectorXd s = G.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd Gn = s.asDiagonal() * G * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gn);
  RemainderReport rep;
  rep.eps = eps;
  rep.nodes = d.size();
  rep.gram_condition = es.eigenvalues().minCoeff() / es.eigenvalues().maxCoeff();
  if (rep.gram_condition <= 1e-3) fail(ErrorKind::SingularMetric, "Gram matrix of the Z^i is ill conditioned");
  Eigen::VectorXd c = G.ldlt().solve(b);
  Eigen::VectorXd q = r;
  for (int i = 0; i < k; ++i) q -= c(i) * Z[i];
  rep.raw_norm = discrete_norm(d, r, eps);
  rep.norm = discrete_norm(d, q, eps);
  for (int i = 0; i < k; ++i)
    rep.projection_residual = std::max(rep.projection_residual, std::abs(discrete_inner(d, q, Z[i], eps)) /
                                                                    (rep.raw_norm * std::sqrt(G(i, i))));
  return rep;
}

RemainderStudy remainder_study(const BoundaryManifold& m, const GroundStateProfile& prof, const BoundaryPoint& xi,
                               const std::vector<double>& eps_list, double h_mesh, double R_cut) {
  require(eps_list.size() >= 2, "need at least two eps values");
  RemainderStudy st;
  for (double e : eps_list) {
    DiscreteDomain d = DiscreteDomain::discretize(m, spike_mesh_options(h_mesh, e, xi));
    st.rows.push_back(remainder_norm(d, e, xi, prof, R_cut));
  }
  const double N = static_cast<double>(eps_list.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : st.rows) {
    double x = std::log(r.eps), y = std::log(r.norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  st.slope = (N * sxy - sx * sy) / (N * sxx - sx * sx);
  const double p = prof.params.p, pc = p / (p - 1.0);
  st.predicted = 1.0 + 2.0 / pc;
  return st;
}

double discrete_energy(const DiscreteDomain& d, const Eigen::VectorXd& u, double eps, double p) {
  check_field(d, u);
  double grad = u.dot(d.stiffness() * u);
  double l2 = (d.weights().array() * u.array().square()).sum();
  double pw = d.weights().dot(positive_power(u, p));
  return (0.5 * eps * eps * grad + 0.5 * l2 - pw / p) / (eps * eps);
}

namespace {

Eigen::VectorXd strong_residual(const DiscreteDomain& d, double eps, double p, const Eigen::VectorXd& u) {
  Eigen::VectorXd F = eps * eps * (d.stiffness() * u);
  F.array() /= d.weights().array();
  F += u - positive_power(u, p - 1.0);
  return F;
}

double merit(const DiscreteDomain& d, const Eigen::VectorXd& r) {
  return std::sqrt((d.weights().array() * r.array().square()).sum());
}

void fill_peak(const DiscreteDomain& d, const Eigen::VectorXd& u, SolveReport& rep) {
  Eigen::Index imax = 0;
  rep.max_u = u.maxCoeff(&imax);
  rep.min_u = u.minCoeff();
  rep.peak_node = static_cast<std::size_t>(imax);
  rep.peak_x = d.nodes()[rep.peak_node];
  const BoundaryManifold& m = d.manifold();
  rep.foot = closest_boundary_point(m, Vec3(rep.peak_x.x(), rep.peak_x.y(), 0.0));
  if (d.is_boundary(rep.peak_node)) {
    // vertex of the parabola through the peak and its two boundary neighbours
    const auto& bt = d.boundary_params();
    const std::size_t nb = bt.size(), i = rep.peak_node;
    const std::size_t il = (i + nb - 1) % nb, ir = (i + 1) % nb;
    const double two_pi = 2.0 * std::numbers::pi;
    double tm = bt[i], tl = bt[il], tr = bt[ir];
    if (tl > tm) tl -= two_pi;
    if (tr < tm) tr += two_pi;
    double fl = u(static_cast<Eigen::Index>(il)), fm = u(imax), fr = u(static_cast<Eigen::Index>(ir));
    double d1 = (fm - fl) / (tm - tl), d2 = (fr - fm) / (tr - tm);
    double curv = (d2 - d1) / (tr - tl);
    if (curv < 0) {
      double t = 0.5 * (tl + tm) - d1 / (2.0 * curv);
      t = std::clamp(t, tl, tr);
      t = std::fmod(t + two_pi, two_pi);
      rep.foot = {t, 0.0};
    }
  }
  rep.foot_x = m.gamma(rep.foot.t);
  rep.critical_distance = std::numeric_limits<double>::quiet_NaN();
  try {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : find_critical_points(m)) {
      double dist = (m.gamma(c.xi.t) - rep.foot_x).norm();
      if (dist < best) {
        best = dist;
        rep.nearest_critical = c.xi;
      }
    }
    rep.critical_distance = best;
  } catch (const DegenerateLandscapeError&) {
  }
}

}  // namespace

SolveReport newton_solve(const DiscreteDomain& d, double eps, double p, Eigen::VectorXd& u, const NewtonOptions& opt) {
  check_field(d, u);
  require(eps > 0 && p > 2, "need eps > 0 and p > 2");
  SolveReport rep;
  rep.eps = eps;
  rep.nodes = d.size();
  const Eigen::SparseMatrix<double> A = eps * eps * d.stiffness();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analysed = false;
  Eigen::VectorXd r = strong_residual(d, eps, p, u);
  double phi = merit(d, r);
  for (int it = 0;; ++it) {
    rep.iterations = it;
    rep.residual = r.cwiseAbs().maxCoeff();
    if (rep.residual < opt.tol) {
      rep.converged = true;
      break;
    }
    if (it == opt.max_iter) break;
    Eigen::SparseMatrix<double> J = A;
    for (Eigen::Index i = 0; i < J.rows(); ++i) {
      double ui = std::max(u(i), 0.0);
      J.coeffRef(i, i) += d.weights()(i) * (1.0 - (p - 1.0) * std::pow(ui, p - 2.0));
    }
    J.makeCompressed();
    if (!analysed) {
      lu.analyzePattern(J);
      analysed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) fail(ErrorKind::LinearSolveFailed, "Newton Jacobian factorisation failed");
    Eigen::VectorXd delta = lu.solve(-d.weights().cwiseProduct(r));
    if (lu.info() != Eigen::Success) fail(ErrorKind::LinearSolveFailed, "Newton step solve failed");
    double lambda = 1.0;
    while (true) {
      Eigen::VectorXd trial = u + lambda * delta;
      Eigen::VectorXd rt = strong_residual(d, eps, p, trial);
      double pt = merit(d, rt);
      if (pt <= (1.0 - 1e-4 * lambda) * phi) {
        u = trial;
        r = rt;
        phi = pt;
        if (opt.monitor) opt.monitor(it + 1, r.cwiseAbs().maxCoeff(), lambda);
        break;
      }
      lambda *= 0.5;
      if (lambda < 1e-6) fail(ErrorKind::Diverged, "line search exhausted at Newton iteration " + std::to_string(it));
    }
  }
  if (rep.converged && u.cwiseAbs().maxCoeff() < 1e-6)
    fail(ErrorKind::ConvergedToTrivial, "Newton converged to the zero solution");
  if (!rep.converged) fail(ErrorKind::Diverged, "Newton did not converge in " + std::to_string(opt.max_iter) + " iterations");
  fill_peak(d, u, rep);
  rep.energy = discrete_energy(d, u, eps, p);
  return rep;
}

namespace {

/// Bordered Newton at fixed xi. Returns c.
double bordered_solve(const DiscreteDomain& d, double eps, double p, const Eigen::VectorXd& W,
                      const Eigen::VectorXd& Z, Eigen::VectorXd& u, const NewtonOptions& opt) {
  const Eigen::Index N = static_cast<Eigen::Index>(d.size());
  const Eigen::VectorXd MZ = d.weights().cwiseProduct(Z);
  const Eigen::VectorXd g = (eps * eps * (d.stiffness() * Z) + MZ) / (eps * eps);
  const double zscale = discrete_norm(d, Z, eps);
  const Eigen::SparseMatrix<double> A = eps * eps * d.stiffness();
  double c = 0.0;
  auto residual = [&](const Eigen::VectorXd& v, double cc, Eigen::VectorXd& G, double& h) {
    G = eps * eps * (d.stiffness() * v) + d.weights().cwiseProduct(v - positive_power(v, p - 1.0)) - cc * MZ;
    h = g.dot(v - W);
  };
  auto merit_of = [&](const Eigen::VectorXd& G, double h) {
    return std::sqrt((G.array().square() / d.weights().array()).sum()) + std::abs(h) / zscale;
  };
  Eigen::VectorXd G;
  double h;
  residual(u, c, G, h);
  double phi = merit_of(G, h);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analysed = false;
  for (int it = 0; it <= opt.max_iter; ++it) {
    double res = (G.array() / d.weights().array()).abs().maxCoeff();
    if (res < opt.tol && std::abs(h) < opt.tol * zscale) return c;
    if (it == opt.max_iter) break;
    Eigen::SparseMatrix<double> J = A;
    for (Eigen::Index i = 0; i < N; ++i) {
      double ui = std::max(u(i), 0.0);
      J.coeffRef(i, i) += d.weights()(i) * (1.0 - (p - 1.0) * std::pow(ui, p - 2.0));
    }
    J.makeCompressed();
    if (!analysed) {
      lu.analyzePattern(J);
      analysed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) fail(ErrorKind::LinearSolveFailed, "bordered factorisation failed");
    // block elimination of [J, -MZ; g^T, 0] with one refinement sweep
    const Eigen::VectorXd a = lu.solve(MZ);
    const double ga = g.dot(a);
    if (!(std::abs(ga) > 0.0)) fail(ErrorKind::LinearSolveFailed, "singular bordered system");
    auto block_solve = [&](const Eigen::VectorXd& r1, double r2, Eigen::VectorXd& du, double& dc) {
      Eigen::VectorXd b = lu.solve(r1);
      dc = (r2 - g.dot(b)) / ga;
      du = b + dc * a;
    };
    Eigen::VectorXd du;
    double dc;
    block_solve(-G, -h, du, dc);
    Eigen::VectorXd e1 = -G - (J * du - dc * MZ);
    double e2 = -h - g.dot(du);
    Eigen::VectorXd cu;
    double cc;
    block_solve(e1, e2, cu, cc);
    du += cu;
    dc += cc;
    Eigen::VectorXd step(N + 1);
    step.head(N) = du;
    step(N) = dc;
    double lambda = 1.0;
    while (true) {
      Eigen::VectorXd ut = u + lambda * step.head(N);
      double ct = c + lambda * step(N);
      Eigen::VectorXd Gt;
      double ht;
      residual(ut, ct, Gt, ht);
      double pt = merit_of(Gt, ht);
      if (pt <= (1.0 - 1e-4 * lambda) * phi) {
        u = ut;
        c = ct;
        G = Gt;
        h = ht;
        phi = pt;
        if (opt.monitor) opt.monitor(it + 1, (G.array() / d.weights().array()).abs().maxCoeff(), lambda);
        break;
      }
      lambda *= 0.5;
      if (lambda < 1e-6) fail(ErrorKind::Diverged, "bordered Newton line search exhausted");
    }
  }
  fail(ErrorKind::Diverged, "bordered Newton did not converge");
}

}  // namespace

LocalizeReport localize_spike(const DiscreteDomain& d, const GroundStateProfile& prof, double eps,
                              const BoundaryPoint& xi0, double R_cut, Eigen::VectorXd& u, const NewtonOptions& opt) {
  const BoundaryManifold& m = d.manifold();
  require(m.planar(), "localisation runs on planar domains");
  const double p = prof.params.p;
  LocalizeReport rep;
  struct Sample {
    double t, c, J;
    Eigen::VectorXd u;
  };
  auto eval = [&](double t) {
    BoundaryPoint xi{t, 0.0};
    Sample s{t, 0.0, 0.0, sample_ansatz(d, prof, eps, xi, R_cut)};
    Eigen::VectorXd Z = sample_basis(d, prof, eps, xi, R_cut);
    s.c = bordered_solve(d, eps, p, s.u, Z, s.u, opt) / discrete_norm(d, Z, eps);
    s.J = discrete_energy(d, s.u, eps, p);
    rep.t_history.push_back(t);
    rep.c_history.push_back(s.c);
    ++rep.evaluations;
    return s;
  };
  auto opposite = [](const Sample& x, const Sample& y) { return (x.c < 0) != (y.c < 0); };
  // parameter step worth 2 eps of arc length
  auto step_at = [&](double t) { return 2.0 * eps / m.dgamma(t).norm(); };

  // march downhill in the constrained energy until c changes sign
  Sample lo = eval(xi0.t);
  Sample hi = eval(xi0.t + step_at(xi0.t));
  if (!opposite(lo, hi)) {
    double dir = 1.0;
    if (hi.J > lo.J) {
      std::swap(lo, hi);
      dir = -1.0;
    }
    for (int k = 0; k < 64 && !opposite(lo, hi); ++k) {
      Sample next = eval(hi.t + dir * step_at(hi.t));
      if (next.J > hi.J && !opposite(hi, next)) fail(ErrorKind::Diverged, "reduced energy rose without a sign change");
      lo = std::move(hi);
      hi = std::move(next);
    }
    if (!opposite(lo, hi)) fail(ErrorKind::Diverged, "no zero of the reduced equation along the boundary");
  }
  // Illinois regula falsi on c
  const double t_tol = 0.02 * eps / m.dgamma(lo.t).norm();
  const double c_tol = 1e-3 * std::max(std::abs(rep.c_history.front()), std::abs(lo.c) + std::abs(hi.c));
  int last = 0;
  double fl = lo.c, fh = hi.c;
  Sample* best = std::abs(lo.c) < std::abs(hi.c) ? &lo : &hi;
  for (int k = 0; k < 40 && std::abs(hi.t - lo.t) > t_tol && std::abs(best->c) > c_tol; ++k) {
    Sample mid = eval((lo.t * fh - hi.t * fl) / (fh - fl));
    if (opposite(lo, mid)) {
      hi = std::move(mid);
      fh = hi.c;
      if (last == 1) fl *= 0.5;
      last = 1;
    } else {
      lo = std::move(mid);
      fl = lo.c;
      if (last == -1) fh *= 0.5;
      last = -1;
    }
    best = std::abs(lo.c) < std::abs(hi.c) ? &lo : &hi;
  }
  u = best->u;
  double t = std::remainder(best->t, 2.0 * std::numbers::pi);
  rep.xi = {t < 0 ? t + 2.0 * std::numbers::pi : t, 0.0};
  rep.c = best->c;
  return rep;
}

ContinuationResult continuation(const BoundaryManifold& m, const GroundStateProfile& prof,
                                const std::vector<double>& eps_list, const BoundaryPoint& xi,
                                const ContinuationOptions& opt) {
  require(!eps_list.empty(), "empty eps list");
  for (std::size_t i = 1; i < eps_list.size(); ++i) require(eps_list[i] < eps_list[i - 1], "eps list must descend");
  const double R = opt.R_cut > 0 ? opt.R_cut : 0.9 * m.chart_radius();
  const double p = prof.params.p;
  ContinuationResult res;
  BoundaryPoint centre = xi;
  std::shared_ptr<DiscreteDomain> prev;
  Eigen::VectorXd u, good;
  bool degenerate = false;
  try {
    find_critical_points(m);
  } catch (const DegenerateLandscapeError&) {
    degenerate = true;
  }
  for (std::size_t s = 0; s < eps_list.size(); ++s) {
    const double e = eps_list[s];
    try {
      auto d = std::make_shared<DiscreteDomain>(DiscreteDomain::discretize(m, spike_mesh_options(opt.h_mesh, e, centre)));
      if (degenerate)
        u = sample_ansatz(*d, prof, e, centre, R);
      else
        localize_spike(*d, prof, e, centre, R, u, opt.newton);
      ContinuationStage st;
      st.report = newton_solve(*d, e, p, u, opt.newton);
      Eigen::VectorXd W = sample_ansatz(*d, prof, e, st.report.foot, R);
      st.energy_ansatz = discrete_energy(*d, W, e, p);
      st.energy_gap = std::abs(st.report.energy - st.energy_ansatz) / e;
      res.stages.push_back(st);
      centre = st.report.foot;
      prev = d;
      good = u;
    } catch (const Error& err) {
      res.failure = err.what();
      res.last_domain = prev;
      if (!res.stages.empty()) res.last_solution = good;
      return res;
    }
  }
  res.complete = true;
  res.last_domain = prev;
  res.last_solution = good;
  return res;
}

}  // namespace spike
