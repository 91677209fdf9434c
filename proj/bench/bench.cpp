// Serial reference against the OpenMP kernels. Run with OMP_NUM_THREADS set to compare.
#include <benchmark/benchmark.h>

#include "spike/pde.hpp"
#include "spike/reduction.hpp"
#include "spike/spectrum.hpp"

using namespace spike;

namespace {

const GroundStateProfile& profile24() {
  static GroundStateProfile prof = solve_ground_state({2, 4.0});
  return prof;
}

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_ReducedEnergy(benchmark::State& state) {
  auto e = BoundaryManifold::ellipse(2, 1);
  QuadOptions q;
  q.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(reduced_energy(e, profile24(), 0.02, BoundaryPoint{0.3}, 0.45, q).J);
}
BENCHMARK(BM_ReducedEnergy)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_HalfBoxApply(benchmark::State& state) {
  LinearizedOperator op = assemble_linearized(profile24(), HalfBoxGrid::make(2, 14.0, 0.1));
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(op.size()), 8);
  for (auto _ : state) benchmark::DoNotOptimize(op.apply(X, exec_of(state)).data());
}
BENCHMARK(BM_HalfBoxApply)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LowestEigenpairs(benchmark::State& state) {
  LinearizedOperator op = assemble_linearized(profile24(), HalfBoxGrid::make(2, 12.0, 0.2));
  EigenOptions opt;
  opt.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(lowest_eigenpairs(op, 4, {}, opt).values.data());
}
BENCHMARK(BM_LowestEigenpairs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BlockedSum(benchmark::State& state) {
  auto f = [](std::size_t i) { return 1.0 / (1.0 + static_cast<double>(i)); };
  for (auto _ : state) benchmark::DoNotOptimize(blocked_sum(1 << 22, f, exec_of(state)));
}
BENCHMARK(BM_BlockedSum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Laplacian(benchmark::State& state) {
  auto d = DiscreteDomain::discretize(BoundaryManifold::ellipse(2, 1), 0.01);
  Eigen::VectorXd u = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d.size()));
  for (auto _ : state) benchmark::DoNotOptimize(d.laplacian(u).data());
}
BENCHMARK(BM_Laplacian)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
