#include "spike/parallel.hpp"

#include <omp.h>

#include <vector>

namespace spike {

namespace {
Exec g_exec = Exec::Parallel;
constexpr std::size_t kBlock = 256;
}  // namespace

Exec default_exec() { return g_exec; }
void set_default_exec(Exec e) { g_exec = e; }
int thread_count() { return omp_get_max_threads(); }

double blocked_sum(std::size_t n, const std::function<double(std::size_t)>& f, Exec exec) {
  const std::size_t nb = (n + kBlock - 1) / kBlock;
  std::vector<double> part(nb, 0.0);
  const long long nbl = static_cast<long long>(nb);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (long long b = 0; b < nbl; ++b) {
    std::size_t lo = static_cast<std::size_t>(b) * kBlock, hi = std::min(n, lo + kBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    part[b] = s;
  }
  double s = 0.0;
  for (double x : part) s += x;
  return s;
}

double naive_sum(std::size_t n, const std::function<double(std::size_t)>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(i);
  return s;
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& f, Exec exec) {
  const long long nl = static_cast<long long>(n);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (long long i = 0; i < nl; ++i) f(static_cast<std::size_t>(i));
}

}  // namespace spike
