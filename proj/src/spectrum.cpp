#include "spike/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "spike/error.hpp"

namespace spike {

HalfBoxGrid HalfBoxGrid::make(int n, double L, double h) {
  require(n == 2 || n == 3, "half box grids exist for n = 2 and n = 3");
  require(L >= 12.0, "half box needs L >= 12");
  require(h > 0 && h <= L / 60.0 * (1 + 1e-12), "half box needs h <= L/60");
  HalfBoxGrid g;
  g.n = n;
  g.L = L;
  g.h = h;
  int M = static_cast<int>(std::lround(L / h));
  g.nt = 2 * M - 1;
  g.nn = M;
  return g;
}

std::size_t HalfBoxGrid::size() const {
  std::size_t s = static_cast<std::size_t>(nt) * nn;
  return n == 3 ? s * nt : s;
}

void HalfBoxGrid::coords(std::size_t idx, double z[3]) const {
  int j = static_cast<int>(idx % nn);
  std::size_t rest = idx / nn;
  z[2] = 0.0;
  if (n == 2) {
    z[0] = tangential(static_cast<int>(rest));
    z[1] = normal(j);
  } else {
    z[1] = tangential(static_cast<int>(rest % nt));
    z[0] = tangential(static_cast<int>(rest / nt));
    z[2] = normal(j);
  }
}

namespace {

constexpr double kStencil[3] = {30.0 / 12.0, -16.0 / 12.0, 1.0 / 12.0};

Eigen::MatrixXd axis_matrix(int N, bool neumann) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i)
    for (int o = -2; o <= 2; ++o) {
      int j = i + o;
      if (neumann && j < 0) j = -j;
      if (j >= 0 && j < N) A(i, j) += kStencil[std::abs(o)];
    }
  return A;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

LinearizedOperator::LinearizedOperator(const GroundStateProfile& prof, const HalfBoxGrid& grid)
    : prof_(&prof), grid_(grid) {
  if (prof.params.n != grid.n) fail(ErrorKind::DimensionMismatch, "profile dimension differs from the grid dimension");
  const double h2 = grid.h * grid.h;
  const double p = prof.params.p;
  const std::size_t N = grid.size();
  pot_.resize(static_cast<Eigen::Index>(N));
  sqrt_w_.resize(static_cast<Eigen::Index>(N));
  for (std::size_t k = 0; k < N; ++k) {
    double z[3];
    grid.coords(k, z);
    double r = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
    pot_(k) = 1.0 - (p - 1.0) * std::pow(eval_profile(prof, r).v, p - 2.0);
    sqrt_w_(k) = (k % grid.nn == 0) ? std::sqrt(0.5) : 1.0;
  }

  // Symmetrised normal axis: S_jk = (w_j A_jk) / sqrt(w_j w_k), exactly symmetric.
  Eigen::MatrixXd An = axis_matrix(grid.nn, true);
  Eigen::MatrixXd Sn = Eigen::MatrixXd::Zero(grid.nn, grid.nn);
  normal_rows_.resize(grid.nn);
  for (int j = 0; j < grid.nn; ++j) {
    double wj = j == 0 ? 0.5 : 1.0;
    Row& row = normal_rows_[j];
    for (int k = std::max(0, j - 2); k <= std::min(grid.nn - 1, j + 2); ++k) {
      if (An(j, k) == 0.0) continue;
      double wk = k == 0 ? 0.5 : 1.0;
      double s = (wj * An(j, k)) / std::sqrt(wj * wk) / h2;
      row.col[row.count] = k;
      row.coef[row.count++] = s;
      Sn(j, k) = s;
    }
  }
  Eigen::MatrixXd St = axis_matrix(grid.nt, false) / h2;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> et(St), en(Sn);
  qt_ = et.eigenvectors();
  lt_ = et.eigenvalues();
  qn_ = en.eigenvectors();
  ln_ = en.eigenvalues();
}

double LinearizedOperator::tangential_coef(int offset) const {
  return kStencil[std::abs(offset)] / (grid_.h * grid_.h);
}

void LinearizedOperator::apply(const double* x, double* y, Exec exec) const {
  const int nt = grid_.nt, nn = grid_.nn;
  const double c0 = tangential_coef(0), c1 = tangential_coef(1), c2 = tangential_coef(2);
  const std::size_t lines = grid_.n == 2 ? static_cast<std::size_t>(nt) : static_cast<std::size_t>(nt) * nt;
  for_each_index(
      lines,
      [&](std::size_t line) {
        int i1 = grid_.n == 2 ? static_cast<int>(line) : static_cast<int>(line / nt);
        int i2 = grid_.n == 2 ? 0 : static_cast<int>(line % nt);
        const std::size_t base = line * nn;
        for (int j = 0; j < nn; ++j) {
          const std::size_t k = base + j;
          double s = pot_(k) * x[k];
          const Row& row = normal_rows_[j];
          for (int q = 0; q < row.count; ++q) s += row.coef[q] * x[base + row.col[q]];
          // first tangential axis, stride nn (n = 2) or nt*nn (n = 3)
          const std::size_t s1 = grid_.n == 2 ? nn : static_cast<std::size_t>(nt) * nn;
          s += c0 * x[k];
          if (i1 >= 1) s += c1 * x[k - s1];
          if (i1 + 1 < nt) s += c1 * x[k + s1];
          if (i1 >= 2) s += c2 * x[k - 2 * s1];
          if (i1 + 2 < nt) s += c2 * x[k + 2 * s1];
          if (grid_.n == 3) {
            s += c0 * x[k];
            const std::size_t s2 = nn;
            if (i2 >= 1) s += c1 * x[k - s2];
            if (i2 + 1 < nt) s += c1 * x[k + s2];
            if (i2 >= 2) s += c2 * x[k - 2 * s2];
            if (i2 + 2 < nt) s += c2 * x[k + 2 * s2];
          }
          y[k] = s;
        }
      },
      exec);
}

Eigen::MatrixXd LinearizedOperator::apply(const Eigen::MatrixXd& X, Exec exec) const {
  Eigen::MatrixXd Y(X.rows(), X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) apply(X.col(c).data(), Y.col(c).data(), exec);
  return Y;
}

Eigen::VectorXd LinearizedOperator::apply_unsymmetrized(const Eigen::VectorXd& u, Exec exec) const {
  require(static_cast<std::size_t>(u.size()) == size(), "field length differs from the grid");
  Eigen::VectorXd v = to_symmetric(u), y(u.size());
  apply(v.data(), y.data(), exec);
  return from_symmetric(y);
}

Eigen::SparseMatrix<double> LinearizedOperator::to_sparse() const {
  const int nt = grid_.nt, nn = grid_.nn;
  const std::size_t N = size();
  const std::size_t s1 = grid_.n == 2 ? nn : static_cast<std::size_t>(nt) * nn;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(N * (grid_.n == 2 ? 9 : 13));
  for (std::size_t k = 0; k < N; ++k) {
    int j = static_cast<int>(k % nn);
    std::size_t line = k / nn;
    int i1 = grid_.n == 2 ? static_cast<int>(line) : static_cast<int>(line / nt);
    int i2 = grid_.n == 2 ? 0 : static_cast<int>(line % nt);
    const auto r = static_cast<Eigen::Index>(k);
    trip.emplace_back(r, r, pot_(k) + (grid_.n - 1) * tangential_coef(0));
    const Row& row = normal_rows_[j];
    for (int q = 0; q < row.count; ++q)
      trip.emplace_back(r, static_cast<Eigen::Index>(line * nn + row.col[q]), row.coef[q]);
    for (int o = -2; o <= 2; ++o) {
      if (o == 0) continue;
      if (i1 + o >= 0 && i1 + o < nt)
        trip.emplace_back(r, static_cast<Eigen::Index>(static_cast<std::ptrdiff_t>(k) + o * static_cast<std::ptrdiff_t>(s1)),
                          tangential_coef(o));
      if (grid_.n == 3 && i2 + o >= 0 && i2 + o < nt)
        trip.emplace_back(r, static_cast<Eigen::Index>(static_cast<std::ptrdiff_t>(k) + o * nn), tangential_coef(o));
    }
  }
  Eigen::SparseMatrix<double> S(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

double LinearizedOperator::symmetry_defect() const {
  Eigen::SparseMatrix<double> S = to_sparse();
  Eigen::SparseMatrix<double> T = S.transpose();
  Eigen::SparseMatrix<double> D = S - T;
  double m = 0.0;
  for (int k = 0; k < D.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(D, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

Eigen::VectorXd LinearizedOperator::to_symmetric(const Eigen::VectorXd& u) const { return sqrt_w_.cwiseProduct(u); }

Eigen::VectorXd LinearizedOperator::from_symmetric(const Eigen::VectorXd& v) const {
  return v.cwiseQuotient(sqrt_w_);
}

Eigen::MatrixXd LinearizedOperator::precondition(const Eigen::MatrixXd& R, Exec exec) const {
  const int nt = grid_.nt, nn = grid_.nn;
  Eigen::MatrixXd W(R.rows(), R.cols());
  for_each_index(
      static_cast<std::size_t>(R.cols()),
      [&](std::size_t c) {
        if (grid_.n == 2) {
          Eigen::Map<const Eigen::MatrixXd> X(R.col(c).data(), nn, nt);
          Eigen::MatrixXd Y = qn_.transpose() * X * qt_;
          for (int i = 0; i < nt; ++i)
            for (int j = 0; j < nn; ++j) Y(j, i) /= ln_(j) + lt_(i) + 1.0;
          Eigen::Map<Eigen::MatrixXd>(W.col(c).data(), nn, nt) = qn_ * Y * qt_.transpose();
          return;
        }
        Eigen::MatrixXd Y = qn_.transpose() * Eigen::Map<const Eigen::MatrixXd>(R.col(c).data(), nn, nt * nt);
        for (int i1 = 0; i1 < nt; ++i1) Y.middleCols(i1 * nt, nt) = Y.middleCols(i1 * nt, nt) * qt_;
        Eigen::Map<Eigen::MatrixXd> Y3(Y.data(), nn * nt, nt);
        Y3 = Y3 * qt_;
        for (int i1 = 0; i1 < nt; ++i1)
          for (int i2 = 0; i2 < nt; ++i2)
            for (int j = 0; j < nn; ++j) Y3(j + nn * i2, i1) /= ln_(j) + lt_(i2) + lt_(i1) + 1.0;
        Y3 = Y3 * qt_.transpose();
        for (int i1 = 0; i1 < nt; ++i1) Y.middleCols(i1 * nt, nt) = Y.middleCols(i1 * nt, nt) * qt_.transpose();
        Eigen::Map<Eigen::MatrixXd>(W.col(c).data(), nn, nt * nt) = qn_ * Y;
      },
      exec);
  return W;
}

Eigen::VectorXd LinearizedOperator::sample_derivative(int i) const {
  require(i >= 0 && i < grid_.n, "derivative index out of range");
  Eigen::VectorXd d(static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k < size(); ++k) {
    double z[3];
    grid_.coords(k, z);
    double r = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
    d(k) = r > 0 ? eval_profile(*prof_, r).dv * z[i] / r : 0.0;
  }
  return d;
}

LinearizedOperator assemble_linearized(const GroundStateProfile& prof, const HalfBoxGrid& grid) {
  return LinearizedOperator(prof, grid);
}

namespace {

void project_out(Eigen::MatrixXd& Z, const Eigen::MatrixXd& B) {
  if (B.cols() > 0 && Z.cols() > 0) Z -= B * (B.transpose() * Z);
}

/// Orthonormal basis of span(Z) after removing components along C and X, dropping
/// numerically dependent directions.
Eigen::MatrixXd orthonormalize(Eigen::MatrixXd Z, const Eigen::MatrixXd& C, const Eigen::MatrixXd& X) {
  for (int pass = 0; pass < 2; ++pass) {
    project_out(Z, C);
    project_out(Z, X);
    if (Z.cols() == 0) return Z;
    Eigen::MatrixXd G = Z.transpose() * Z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const double top = es.eigenvalues().maxCoeff();
    std::vector<int> keep;
    for (int i = 0; i < G.cols(); ++i)
      if (es.eigenvalues()(i) > std::max(1e-12 * top, 1e-300)) keep.push_back(i);
    Eigen::MatrixXd V(G.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
      V.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) / std::sqrt(es.eigenvalues()(keep[c]));
    Z = Z * V;
  }
  return Z;
}

}  // namespace

EigenResult lowest_eigenpairs(const LinearizedOperator& op, int k, const Eigen::MatrixXd& constraints,
                              const EigenOptions& opt) {
  require(k >= 1, "need at least one eigenpair");
  const auto N = static_cast<Eigen::Index>(op.size());
  const int b = k + opt.guard;
  require(b < N, "block larger than the problem");
  Eigen::MatrixXd C;
  if (constraints.cols() > 0) {
    require(constraints.rows() == N, "constraint length differs from the grid");
    C = orthonormalize(constraints, Eigen::MatrixXd(), Eigen::MatrixXd());
  }

  Eigen::MatrixXd X(N, b);
  for (int c = 0; c < b; ++c)
    for (Eigen::Index i = 0; i < N; ++i) {
      std::uint64_t hsh = splitmix(static_cast<std::uint64_t>(i) * 1315423911ULL + static_cast<std::uint64_t>(c));
      X(i, c) = static_cast<double>(hsh >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }
  X = orthonormalize(X, C, Eigen::MatrixXd());
  require(X.cols() == b, "starting block is rank deficient");

  auto rayleigh_ritz = [&](const Eigen::MatrixXd& Q, const Eigen::MatrixXd& AQ) {
    Eigen::MatrixXd G = Q.transpose() * AQ;
    G = 0.5 * (G + G.transpose());
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G);
  };

  Eigen::MatrixXd AX = op.apply(X, opt.exec);
  auto es0 = rayleigh_ritz(X, AX);
  X = X * es0.eigenvectors();
  AX = AX * es0.eigenvectors();
  Eigen::VectorXd theta = es0.eigenvalues();
  Eigen::MatrixXd P;

  EigenResult res;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::MatrixXd R = AX - X * theta.asDiagonal();
    Eigen::VectorXd rn = R.colwise().norm();
    res.iterations = it;
    if (rn.head(k).maxCoeff() < opt.tol) break;
    if (it == opt.max_iter)
      fail(ErrorKind::EigenNotConverged,
           "eigen-iteration stalled, residual " + std::to_string(rn.head(k).maxCoeff()));

    Eigen::MatrixXd W = op.precondition(R, opt.exec);
    Eigen::MatrixXd Z = W;
    if (P.cols() > 0) {
      Z.conservativeResize(N, W.cols() + P.cols());
      Z.rightCols(P.cols()) = P;
    }
    Z = orthonormalize(Z, C, X);
    Eigen::MatrixXd AZ = op.apply(Z, opt.exec);
    Eigen::MatrixXd Q(N, b + Z.cols()), AQ(N, b + Z.cols());
    Q << X, Z;
    AQ << AX, AZ;
    auto es = rayleigh_ritz(Q, AQ);
    Eigen::MatrixXd Y = es.eigenvectors().leftCols(b);
    X = Q * Y;
    AX = AQ * Y;
    theta = es.eigenvalues().head(b);
    P = Z * Y.bottomRows(Z.cols());
  }
  Eigen::MatrixXd R = AX - X * theta.asDiagonal();
  res.values = theta.head(k);
  res.vectors = X.leftCols(k);
  res.residuals = R.leftCols(k).colwise().norm().transpose();
  return res;
}

double default_kernel_tol(const HalfBoxGrid& g) {
  return 5e-3 * (g.h * g.h + std::exp(-g.L)) / (0.01 + std::exp(-14.0));
}

namespace {

Eigen::VectorXd reflect(const HalfBoxGrid& g, const Eigen::VectorXd& v, int axis) {
  Eigen::VectorXd out(v.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    int j = static_cast<int>(k % g.nn);
    std::size_t line = k / g.nn;
    int i1 = g.n == 2 ? static_cast<int>(line) : static_cast<int>(line / g.nt);
    int i2 = g.n == 2 ? 0 : static_cast<int>(line % g.nt);
    if (axis == 0) i1 = g.nt - 1 - i1;
    else i2 = g.nt - 1 - i2;
    std::size_t m = g.n == 2 ? static_cast<std::size_t>(i1) * g.nn + j
                             : (static_cast<std::size_t>(i1) * g.nt + i2) * g.nn + j;
    out(static_cast<Eigen::Index>(k)) = v(static_cast<Eigen::Index>(m));
  }
  return out;
}

}  // namespace

SpectrumReport kernel_report(const LinearizedOperator& op, int k, double kernel_tol, const EigenOptions& opt) {
  const HalfBoxGrid& g = op.grid();
  require(k >= g.n + 1, "kernel report needs k >= n+1 eigenpairs");
  SpectrumReport rep;
  rep.grid = g;
  rep.kernel_tol = kernel_tol > 0 ? kernel_tol : default_kernel_tol(g);
  EigenResult er = lowest_eigenpairs(op, k, Eigen::MatrixXd(), opt);
  rep.iterations = er.iterations;

  std::vector<Eigen::VectorXd> targets;
  for (int i = 0; i < g.n; ++i) targets.push_back(op.to_symmetric(op.sample_derivative(i)).normalized());

  for (int e = 0; e < k; ++e) {
    rep.eigenvalues.push_back(er.values(e));
    rep.residuals.push_back(er.residuals(e));
    std::vector<double> ov;
    for (int i = 0; i < g.n - 1; ++i) ov.push_back(std::abs(er.vectors.col(e).dot(targets[i])));
    rep.overlap_tangential.push_back(ov);
    rep.overlap_normal.push_back(std::abs(er.vectors.col(e).dot(targets[g.n - 1])));
    if (std::abs(er.values(e)) < rep.kernel_tol)
      rep.kernel_indices.push_back(e);
    else if (rep.gap == 0.0 || std::abs(er.values(e)) < rep.gap)
      rep.gap = std::abs(er.values(e));
  }

  const int c = static_cast<int>(rep.kernel_indices.size());
  Eigen::MatrixXd K(er.vectors.rows(), c);
  for (int i = 0; i < c; ++i) K.col(i) = er.vectors.col(rep.kernel_indices[i]);
  if (c == g.n - 1 && c > 0) {
    Eigen::MatrixXd T(K.rows(), c);
    for (int i = 0; i < c; ++i) T.col(i) = targets[i];
    Eigen::MatrixXd M = K.transpose() * T;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    K = K * (svd.matrixU() * svd.matrixV().transpose());
    for (int i = 0; i < c; ++i) {
      if (K.col(i).dot(T.col(i)) < 0) K.col(i) *= -1.0;
      rep.kernel_overlap.push_back(K.col(i).dot(T.col(i)));
    }
  } else {
    for (int i = 0; i < c; ++i) {
      double best = 0;
      for (int t = 0; t < g.n - 1; ++t) best = std::max(best, std::abs(K.col(i).dot(targets[t])));
      rep.kernel_overlap.push_back(best);
    }
  }
  if (c > 0) rep.kernel_overlap_normal = (K.transpose() * targets[g.n - 1]).norm();
  for (int i = 0; i < c; ++i) {
    std::string s;
    for (int a = 0; a < g.n - 1; ++a) {
      Eigen::VectorXd r = reflect(g, K.col(i), a);
      double odd = (K.col(i) + r).norm(), even = (K.col(i) - r).norm();
      if (!s.empty()) s += ",";
      s += (odd < 0.05 ? "odd-z" : even < 0.05 ? "even-z" : "mixed-z") + std::to_string(a + 1);
    }
    rep.parity.push_back(s);
  }
  rep.kernel_vectors = K;
  return rep;
}

double coercivity_gap(const LinearizedOperator& op, const Eigen::MatrixXd& kernel_vectors, const EigenOptions& opt) {
  for (int m = 2; m <= 64; m *= 2) {
    EigenResult er = lowest_eigenpairs(op, m, kernel_vectors, opt);
    if (er.values(m - 1) > 0.0) return er.values.cwiseAbs().minCoeff();
  }
  fail(ErrorKind::EigenNotConverged, "no positive eigenvalue among the lowest 64");
}

}  // namespace spike
