#include <benchmark/benchmark.h>

#include "pcev/distances.hpp"
#include "synthetic.hpp"

namespace {

using namespace pcev;

void BM_Chamfer(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = testing::mixed_cloud(n, 1), y = testing::mixed_cloud(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Chamfer)->RangeMultiplier(4)->Range(128, 8192)->Complexity();

void BM_Dcd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = testing::mixed_cloud(n, 1), y = testing::mixed_cloud(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(dcd(x, y, 1000.0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Dcd)->RangeMultiplier(4)->Range(128, 8192)->Complexity();

// Pairwise-table inner loop: trees are built once per cloud.
void BM_DcdPrepared(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PreparedCloud x(testing::mixed_cloud(n, 1), true), y(testing::mixed_cloud(n, 2), true);
  for (auto _ : state) benchmark::DoNotOptimize(dcd(x, y, 1000.0));
}
BENCHMARK(BM_DcdPrepared)->Arg(128)->Arg(256)->Arg(2048);

void BM_Emd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto solver = static_cast<EmdSolver>(state.range(1));
  const auto x = testing::mixed_cloud(n, 1), y = testing::mixed_cloud(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(emd(x, y, solver, 0.005).value);
}
BENCHMARK(BM_Emd)
    ->ArgNames({"n", "solver"})
    ->Args({256, static_cast<int>(EmdSolver::Exact)})
    ->Args({256, static_cast<int>(EmdSolver::Approx)})
    ->Args({1024, static_cast<int>(EmdSolver::Exact)})
    ->Args({1024, static_cast<int>(EmdSolver::Approx)})
    ->Unit(benchmark::kMillisecond);

}  // namespace
