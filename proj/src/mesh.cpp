#include "spike/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spike/error.hpp"
#include "spike/quadrature.hpp"

namespace spike {

MeshOptions spike_mesh_options(double h_mesh, double eps, const BoundaryPoint& xi) {
  MeshOptions o;
  o.h_mesh = h_mesh;
  o.spots.push_back({xi, eps / 30.0, 5.0 * eps});
  return o;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }
double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); }

struct Sizing {
  const BoundaryManifold& m;
  const MeshOptions& o;
  std::vector<Vec2> centers;

  double at(const Vec2& x) const {
    double h = o.h_mesh;
    for (std::size_t s = 0; s < centers.size(); ++s) {
      double d = (x - centers[s]).norm();
      h = std::min(h, o.spots[s].h_loc + o.grade * std::max(0.0, d - o.spots[s].r_ref));
    }
    return h;
  }
  /// Size along the inward normal through the spots, at depth d.
  double normal(double d) const {
    double h = o.h_mesh;
    for (const auto& s : o.spots) h = std::min(h, s.h_loc + o.grade * std::max(0.0, d - s.r_ref));
    return h;
  }
};

/// Parameters t_0 < ... < t_{N-1} in [t_start, t_start + 2pi) equidistributing |c'(t)| / size(c(t)).
std::vector<double> distribute(const std::function<Vec2(double)>& c, const Sizing& sz, double t_start,
                               int min_nodes) {
  for (int S = 4096;; S *= 2) {
    const double dt = kTwoPi / S;
    std::vector<double> cum(S + 1, 0.0);
    double maxstep = 0.0;
    Vec2 prev = c(t_start);
    double dprev = 1.0 / sz.at(prev);
    for (int k = 1; k <= S; ++k) {
      Vec2 x = c(t_start + k * dt);
      double dk = 1.0 / sz.at(x);
      double inc = 0.5 * (dprev + dk) * (x - prev).norm();
      cum[k] = cum[k - 1] + inc;
      maxstep = std::max(maxstep, inc);
      prev = x;
      dprev = dk;
    }
    if (maxstep > 0.05 && S < (1 << 22)) continue;
    int N = std::max(min_nodes, static_cast<int>(std::ceil(cum[S] - 1e-9)));
    N += N % 2;
    std::vector<double> t(N);
    std::size_t k = 0;
    for (int i = 0; i < N; ++i) {
      double target = cum[S] * i / N;
      while (k + 1 < static_cast<std::size_t>(S) && cum[k + 1] < target) ++k;
      double f = cum[k + 1] > cum[k] ? (target - cum[k]) / (cum[k + 1] - cum[k]) : 0.0;
      t[i] = t_start + (k + f) * dt;
    }
    return t;
  }
}

/// Triangulates the band between an outer and an inner closed ring, both counter-clockwise
/// and parametrised by increasing t (inner values shifted into [outer_t0, outer_t0 + 2pi)).
void zipper(const std::vector<int>& A, const std::vector<double>& ta, const std::vector<int>& B,
            const std::vector<double>& tb, const std::vector<Vec2>& nodes, std::vector<std::array<int, 3>>& tris) {
  const std::size_t m = A.size(), k = B.size();
  std::size_t jbest = 0;
  double best = 1e300;
  for (std::size_t j = 0; j < k; ++j) {
    double d = std::remainder(tb[j] - ta[0], kTwoPi);
    if (std::abs(d) < best) {
      best = std::abs(d);
      jbest = j;
    }
  }
  std::vector<double> vb(k + 1);
  vb[0] = ta[0] + std::remainder(tb[jbest] - ta[0], kTwoPi);
  for (std::size_t s = 1; s <= k; ++s) {
    double step = std::fmod(tb[(jbest + s) % k] - tb[(jbest + s - 1) % k] + 2 * kTwoPi, kTwoPi);
    vb[s] = vb[s - 1] + step;
  }
  auto tA = [&](std::size_t i) { return i < m ? ta[i] : ta[i - m] + kTwoPi; };
  auto tB = [&](std::size_t s) { return vb[s]; };
  std::size_t i = 0, s = 0;
  auto push = [&](int a, int b, int c) {
    if (orient(nodes[a], nodes[b], nodes[c]) < 0) std::swap(b, c);
    tris.push_back({a, b, c});
  };
  while (i < m || s < k) {
    bool advance_a;
    if (i == m) advance_a = false;
    else if (s == k) advance_a = true;
    else advance_a = 0.5 * (tA(i) + tA(i + 1)) <= 0.5 * (tB(s) + tB(s + 1));
    int a = A[i % m], b = B[(jbest + s) % k];
    if (advance_a) {
      push(a, A[(i + 1) % m], b);
      ++i;
    } else {
      push(a, B[(jbest + s + 1) % k], b);
      ++s;
    }
  }
}

struct Adjacency {
  std::vector<std::array<int, 3>> nb;
};

Adjacency build_adjacency(const std::vector<std::array<int, 3>>& tris, std::size_t nnodes) {
  Adjacency adj;
  adj.nb.assign(tris.size(), {-1, -1, -1});
  std::vector<std::vector<std::pair<int, int>>> by_node(nnodes);  // (triangle, local edge) keyed by min vertex
  for (std::size_t t = 0; t < tris.size(); ++t)
    for (int e = 0; e < 3; ++e) {
      int a = tris[t][(e + 1) % 3], b = tris[t][(e + 2) % 3];
      by_node[std::min(a, b)].push_back({static_cast<int>(t), e});
    }
  for (auto& lst : by_node)
    for (std::size_t x = 0; x < lst.size(); ++x)
      for (std::size_t y = x + 1; y < lst.size(); ++y) {
        auto [t1, e1] = lst[x];
        auto [t2, e2] = lst[y];
        int a1 = tris[t1][(e1 + 1) % 3], b1 = tris[t1][(e1 + 2) % 3];
        int a2 = tris[t2][(e2 + 1) % 3], b2 = tris[t2][(e2 + 2) % 3];
        if (std::max(a1, b1) == std::max(a2, b2)) {
          adj.nb[t1][e1] = t2;
          adj.nb[t2][e2] = t1;
        }
      }
  return adj;
}

double cot_at(const Vec2& p, const Vec2& q, const Vec2& r) {
  Vec2 u = q - p, v = r - p;
  return u.dot(v) / std::abs(cross(u, v));
}

void replace_neighbor(Adjacency& adj, int t, int from, int to) {
  if (t < 0) return;
  for (int e = 0; e < 3; ++e)
    if (adj.nb[t][e] == from) {
      adj.nb[t][e] = to;
      return;
    }
}

/// Edge flips towards the Delaunay triangulation; triangles below `frozen` are left alone.
void delaunay_flips(const std::vector<Vec2>& nodes, std::vector<std::array<int, 3>>& tris, int frozen) {
  Adjacency adj = build_adjacency(tris, nodes.size());
  for (int pass = 0; pass < 200; ++pass) {
    std::size_t flips = 0;
    for (std::size_t ti = 0; ti < tris.size(); ++ti)
      for (int e = 0; e < 3; ++e) {
        int t = static_cast<int>(ti);
        int u = adj.nb[t][e];
        if (u < 0 || u < t || t < frozen) continue;
        int p = tris[t][e], q = tris[t][(e + 1) % 3], r = tris[t][(e + 2) % 3];
        int eu = -1;
        for (int f = 0; f < 3; ++f)
          if (tris[u][f] != q && tris[u][f] != r) eu = f;
        int s = tris[u][eu];
        double c = cot_at(nodes[p], nodes[q], nodes[r]) + cot_at(nodes[s], nodes[q], nodes[r]);
        if (c >= -1e-12) continue;
        if (orient(nodes[p], nodes[q], nodes[s]) <= 0 || orient(nodes[p], nodes[s], nodes[r]) <= 0) continue;
        int B = adj.nb[t][(e + 2) % 3];  // across (p,q)
        int A = adj.nb[t][(e + 1) % 3];  // across (r,p)
        int C = -1, D = -1;               // across (q,s) and (s,r) in u
        for (int f = 0; f < 3; ++f) {
          int x = tris[u][(f + 1) % 3], y = tris[u][(f + 2) % 3];
          if ((x == q && y == s) || (x == s && y == q)) C = adj.nb[u][f];
          if ((x == s && y == r) || (x == r && y == s)) D = adj.nb[u][f];
        }
        tris[t] = {p, q, s};
        tris[u] = {p, s, r};
        adj.nb[t] = {C, u, B};
        adj.nb[u] = {D, A, t};
        replace_neighbor(adj, C, u, t);
        replace_neighbor(adj, A, t, u);
        ++flips;
        break;
      }
    if (flips == 0) return;
  }
}

}  // namespace

DiscreteDomain DiscreteDomain::discretize(const BoundaryManifold& m, double h_mesh) {
  MeshOptions o;
  o.h_mesh = h_mesh;
  return discretize(m, o);
}

DiscreteDomain DiscreteDomain::discretize(const BoundaryManifold& m, const MeshOptions& opt) {
  require(m.planar(), "discretization is implemented for planar domains");
  require(opt.h_mesh > 0 && opt.grade > 0, "mesh sizes must be positive");
  for (const auto& s : opt.spots) require(s.h_loc > 0 && s.h_loc <= opt.h_mesh && s.r_ref >= 0, "invalid refinement spot");
  DiscreteDomain d(m);
  d.opt_ = opt;
  Sizing sz{m, opt, {}};
  for (const auto& s : opt.spots) sz.centers.push_back(m.gamma(s.xi.t));

  auto gam = [&](double t) { return m.gamma(t); };
  auto nrm = [&](double t) {
    Vec2 g = m.dgamma(t).normalized();
    return Vec2(-g.y(), g.x());
  };
  for (int k = 0; k < 2048; ++k) {
    double t = kTwoPi * k / 2048;
    double kap = std::abs(m.d2gamma(t).x() * m.dgamma(t).y() - m.d2gamma(t).y() * m.dgamma(t).x()) /
                 std::pow(m.dgamma(t).norm(), 3);
    if (sz.at(m.gamma(t)) * kap > 1.0 / 40.0 + 1e-12)
      fail(ErrorKind::MeshTooCoarse, "boundary spacing exceeds 1/40 of the radius of curvature");
  }

  const double t0 = opt.spots.empty() ? 0.0 : opt.spots.front().xi.t;
  std::vector<double> tb = distribute(gam, sz, t0, 16);
  const int Nb = static_cast<int>(tb.size());

  // normal layers of the boundary strip
  const double rho_min = m.min_curvature_radius();
  const double dmax = 0.5 * std::min({rho_min, m.a(), m.b()});
  std::vector<double> depth{0.0};
  while (true) {
    double d = depth.back();
    double step = sz.normal(d);
    if ((step >= opt.h_mesh && d >= 2.0 * opt.h_mesh) || d + step > dmax) break;
    depth.push_back(d + step);
  }
  if (depth.size() < 2) depth.push_back(std::min(dmax, opt.h_mesh));
  const double D = depth.back();

  auto& nodes = d.nodes_;
  auto& tris = d.tris_;
  std::vector<std::vector<int>> layer(depth.size());
  for (std::size_t l = 0; l < depth.size(); ++l)
    for (int i = 0; i < Nb; ++i) {
      layer[l].push_back(static_cast<int>(nodes.size()));
      nodes.push_back(gam(tb[i]) + depth[l] * nrm(tb[i]));
    }
  d.boundary_t_.resize(Nb);
  for (int i = 0; i < Nb; ++i) d.boundary_t_[i] = std::fmod(tb[i] + 4 * kTwoPi, kTwoPi);
  auto push = [&](int a, int b, int c) {
    if (orient(nodes[a], nodes[b], nodes[c]) < 0) std::swap(b, c);
    tris.push_back({a, b, c});
  };
  // alternating diagonals: the strip is mirror symmetric about every node column
  for (std::size_t l = 0; l + 1 < depth.size(); ++l)
    for (int i = 0; i < Nb; ++i) {
      int i1 = (i + 1) % Nb;
      if ((i + l) % 2 == 0) {
        push(layer[l][i], layer[l][i1], layer[l + 1][i1]);
        push(layer[l][i], layer[l + 1][i1], layer[l + 1][i]);
      } else {
        push(layer[l][i], layer[l][i1], layer[l + 1][i]);
        push(layer[l][i1], layer[l + 1][i1], layer[l + 1][i]);
      }
    }
  const int strip_tris = static_cast<int>(tris.size());

  // core: scaled copies of the inner parallel curve
  auto inner = [&](double t) { return Vec2(gam(t) + D * nrm(t)); };
  double lmin = 1e300, lmax = 0.0;
  for (int k = 0; k < 1024; ++k) {
    double t = kTwoPi * k / 1024;
    double l = -inner(t).dot(nrm(t));
    lmin = std::min(lmin, l);
    lmax = std::max(lmax, l);
  }
  std::vector<int> ring = layer.back();
  std::vector<double> ring_t = tb;
  double sigma = 1.0;
  while (true) {
    double step = sz.normal(D + (1.0 - sigma) * lmin);
    double next = sigma - step / lmax;
    if (next * lmin < 1.5 * step || ring.size() <= 8) break;
    sigma = next;
    auto curve = [&](double t) { return Vec2(sigma * inner(t)); };
    std::vector<double> tr = distribute(curve, sz, ring_t.front(), 6);
    std::vector<int> idx;
    for (double t : tr) {
      idx.push_back(static_cast<int>(nodes.size()));
      nodes.push_back(curve(t));
    }
    zipper(ring, ring_t, idx, tr, nodes, tris);
    ring = idx;
    ring_t = tr;
    if (nodes.size() > opt.max_nodes) fail(ErrorKind::MeshTooCoarse, "mesh exceeds the node budget");
  }
  int center = static_cast<int>(nodes.size());
  nodes.push_back(Vec2::Zero());
  for (std::size_t i = 0; i < ring.size(); ++i) push(center, ring[i], ring[(i + 1) % ring.size()]);

  delaunay_flips(nodes, tris, strip_tris);
  d.assemble();
  d.build_locator();
  return d;
}

void DiscreteDomain::assemble() {
  const std::size_t N = nodes_.size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(tris_.size() * 6);
  std::vector<double> diag(N, 0.0);
  mass_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
  for (const auto& T : tris_) {
    const Vec2 &a = nodes_[T[0]], &b = nodes_[T[1]], &c = nodes_[T[2]];
    double area = 0.5 * orient(a, b, c);
    require(area > 0, "degenerate triangle in mesh");
    for (int k = 0; k < 3; ++k) {
      int i = T[(k + 1) % 3], j = T[(k + 2) % 3];
      double w = 0.5 * cot_at(nodes_[T[k]], nodes_[i], nodes_[j]);
      trip.emplace_back(i, j, -w);
      trip.emplace_back(j, i, -w);
      diag[i] += w;
      diag[j] += w;
      mass_(T[k]) += area / 3.0;
    }
  }
  for (std::size_t i = 0; i < N; ++i) trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag[i]);
  stiff_.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  stiff_.setFromTriplets(trip.begin(), trip.end());

  const std::size_t Nb = boundary_t_.size();
  const auto& g = gauss_legendre(8);
  for (std::size_t i = 0; i < Nb; ++i) {
    double ta = boundary_t_[i], tb = boundary_t_[(i + 1) % Nb];
    if (tb < ta) tb += kTwoPi;
    double sector = 0.0, mid = 0.5 * (ta + tb), hw = 0.5 * (tb - ta);
    for (std::size_t q = 0; q < g.x.size(); ++q) {
      double t = mid + hw * g.x[q];
      Vec2 x = m_.gamma(t), dx = m_.dgamma(t);
      sector += 0.5 * hw * g.w[q] * cross(x, dx);
    }
    double seg = sector - 0.5 * cross(nodes_[i], nodes_[(i + 1) % Nb]);
    mass_(static_cast<Eigen::Index>(i)) += 0.5 * seg;
    mass_(static_cast<Eigen::Index>((i + 1) % Nb)) += 0.5 * seg;
  }
}

void DiscreteDomain::build_locator() {
  lo_ = nodes_[0];
  hi_ = nodes_[0];
  for (const auto& x : nodes_) {
    lo_ = lo_.cwiseMin(x);
    hi_ = hi_.cwiseMax(x);
  }
  Vec2 ext = hi_ - lo_;
  double target = std::sqrt(ext.x() * ext.y() / std::max<double>(1.0, static_cast<double>(tris_.size()) / 4.0));
  cell_ = std::max(target, 1e-9);
  gx_ = std::max(1, static_cast<int>(std::ceil(ext.x() / cell_)));
  gy_ = std::max(1, static_cast<int>(std::ceil(ext.y() / cell_)));
  buckets_.assign(static_cast<std::size_t>(gx_) * gy_, {});
  for (std::size_t t = 0; t < tris_.size(); ++t) {
    Vec2 a = nodes_[tris_[t][0]], b = a;
    for (int k = 1; k < 3; ++k) {
      a = a.cwiseMin(nodes_[tris_[t][k]]);
      b = b.cwiseMax(nodes_[tris_[t][k]]);
    }
    int x0 = std::clamp(static_cast<int>((a.x() - lo_.x()) / cell_), 0, gx_ - 1);
    int x1 = std::clamp(static_cast<int>((b.x() - lo_.x()) / cell_), 0, gx_ - 1);
    int y0 = std::clamp(static_cast<int>((a.y() - lo_.y()) / cell_), 0, gy_ - 1);
    int y1 = std::clamp(static_cast<int>((b.y() - lo_.y()) / cell_), 0, gy_ - 1);
    for (int ix = x0; ix <= x1; ++ix)
      for (int iy = y0; iy <= y1; ++iy) buckets_[static_cast<std::size_t>(ix) * gy_ + iy].push_back(static_cast<int>(t));
  }
}

int DiscreteDomain::locate(const Vec2& x, Eigen::Vector3d& bary) const {
  int ix = std::clamp(static_cast<int>((x.x() - lo_.x()) / cell_), 0, gx_ - 1);
  int iy = std::clamp(static_cast<int>((x.y() - lo_.y()) / cell_), 0, gy_ - 1);
  int best = -1;
  double best_min = -1e300;
  Eigen::Vector3d best_b;
  for (int ring = 0; ring <= std::max(gx_, gy_); ++ring) {
    for (int dx = -ring; dx <= ring; ++dx)
      for (int dy = -ring; dy <= ring; ++dy) {
        if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
        int cx = ix + dx, cy = iy + dy;
        if (cx < 0 || cy < 0 || cx >= gx_ || cy >= gy_) continue;
        for (int t : buckets_[static_cast<std::size_t>(cx) * gy_ + cy]) {
          const Vec2 &a = nodes_[tris_[t][0]], &b = nodes_[tris_[t][1]], &c = nodes_[tris_[t][2]];
          double A = orient(a, b, c);
          Eigen::Vector3d l(orient(x, b, c) / A, orient(a, x, c) / A, orient(a, b, x) / A);
          if (l.minCoeff() > best_min) {
            best_min = l.minCoeff();
            best = t;
            best_b = l;
          }
        }
      }
    if (best >= 0 && (best_min >= -1e-12 || ring >= 1)) break;
  }
  require(best >= 0, "point location failed");
  if (best_min < 0) {
    best_b = best_b.cwiseMax(0.0);
    best_b /= best_b.sum();
  }
  bary = best_b;
  return best;
}

Eigen::VectorXd DiscreteDomain::laplacian(const Eigen::VectorXd& u) const {
  require(static_cast<std::size_t>(u.size()) == size(), "field length differs from the node count");
  return -(stiff_ * u).cwiseQuotient(mass_);
}

Eigen::VectorXd DiscreteDomain::sample(const std::function<double(const Vec2&)>& f) const {
  Eigen::VectorXd u(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) u(static_cast<Eigen::Index>(i)) = f(nodes_[i]);
  return u;
}

double DiscreteDomain::interpolate(const Eigen::VectorXd& u, const Vec2& x) const {
  Eigen::Vector3d b;
  int t = locate(x, b);
  return b(0) * u(tris_[t][0]) + b(1) * u(tris_[t][1]) + b(2) * u(tris_[t][2]);
}

Eigen::VectorXd DiscreteDomain::transfer(const DiscreteDomain& src, const Eigen::VectorXd& u) const {
  require(static_cast<std::size_t>(u.size()) == src.size(), "field length differs from the source mesh");
  Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) v(static_cast<Eigen::Index>(i)) = src.interpolate(u, nodes_[i]);
  return v;
}

double DiscreteDomain::max_positive_offdiagonal() const {
  double m = 0.0;
  for (int k = 0; k < stiff_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(stiff_, k); it; ++it)
      if (it.row() != it.col()) m = std::max(m, it.value());
  return m;
}

double DiscreteDomain::min_angle_degrees() const {
  double m = 180.0;
  for (const auto& T : tris_)
    for (int k = 0; k < 3; ++k) {
      Vec2 u = nodes_[T[(k + 1) % 3]] - nodes_[T[k]], v = nodes_[T[(k + 2) % 3]] - nodes_[T[k]];
      m = std::min(m, std::atan2(std::abs(cross(u, v)), u.dot(v)) * 180.0 / std::numbers::pi);
    }
  return m;
}

double DiscreteDomain::max_edge() const {
  double m = 0.0;
  for (const auto& T : tris_)
    for (int k = 0; k < 3; ++k) m = std::max(m, (nodes_[T[k]] - nodes_[T[(k + 1) % 3]]).norm());
  return m;
}

double DiscreteDomain::min_edge() const {
  double m = 1e300;
  for (const auto& T : tris_)
    for (int k = 0; k < 3; ++k) m = std::min(m, (nodes_[T[k]] - nodes_[T[(k + 1) % 3]]).norm());
  return m;
}

}  // namespace spike
