#include "spike/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "spike/error.hpp"

namespace spike {

namespace {

GaussRule build_rule(int n) {
  GaussRule g;
  g.x.resize(n);
  g.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    g.x[i] = -z;
    g.x[n - 1 - i] = z;
    g.w[i] = g.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return g;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  require(n >= 1 && n <= 256, "gauss_legendre: order out of range");
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

Panel1D panel_rule(const std::vector<double>& breaks, int points_per_panel) {
  const GaussRule& g = gauss_legendre(points_per_panel);
  Panel1D out;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    double a = breaks[k], b = breaks[k + 1];
    if (b <= a) continue;
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < points_per_panel; ++i) {
      out.x.push_back(mid + half * g.x[i]);
      out.w.push_back(half * g.w[i]);
    }
  }
  return out;
}

std::vector<double> geometric_breaks(double end, std::vector<double> extra) {
  std::vector<double> b{0.0};
  for (double x = 0.5; x < end; x *= 2.0) b.push_back(x);
  b.push_back(end);
  for (double e : extra)
    if (e > 0.0 && e < end) b.push_back(e);
  std::sort(b.begin(), b.end());
  std::vector<double> out;
  for (double x : b)
    if (out.empty() || x - out.back() > 1e-12 * std::max(1.0, end)) out.push_back(x);
  return out;
}

double simpson(const std::vector<double>& f, double h, std::size_t stride) {
  std::size_t m = (f.size() - 1) / stride;
  require(m >= 2 && m % 2 == 0 && (f.size() - 1) % stride == 0, "simpson: need an even interval count");
  double s = f[0] + f[m * stride];
  for (std::size_t i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i * stride];
  return s * h * stride / 3.0;
}

}  // namespace spike
