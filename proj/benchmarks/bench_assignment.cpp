#include <benchmark/benchmark.h>

#include "pcev/assignment.hpp"
#include "synthetic.hpp"

namespace {

using namespace pcev;

CostMatrix cloud_costs(std::size_t n) {
  const auto x = testing::mixed_cloud(n, 11), y = testing::mixed_cloud(n, 12);
  CostMatrix c(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) c(i, j) = distance(x[i], y[j]);
  }
  return c;
}

void BM_Hungarian(benchmark::State& state) {
  const auto c = cloud_costs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_hungarian(c).cost);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hungarian)->RangeMultiplier(2)->Range(64, 2048)->Complexity()->Unit(benchmark::kMillisecond);

void BM_Auction(benchmark::State& state) {
  const auto c = cloud_costs(static_cast<std::size_t>(state.range(0)));
  const double gap = static_cast<double>(state.range(1)) * 1e-4;
  double bids = 0.0;
  for (auto _ : state) {
    const auto r = solve_auction(c, gap);
    benchmark::DoNotOptimize(r.cost);
    bids = static_cast<double>(r.bids);
  }
  state.counters["bids"] = bids;
}
BENCHMARK(BM_Auction)
    ->ArgNames({"n", "gap_1e4"})
    ->ArgsProduct({{256, 1024, 2048}, {10, 50, 100}})
    ->Unit(benchmark::kMillisecond);

}  // namespace
