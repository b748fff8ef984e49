#include <benchmark/benchmark.h>

#include "pcev/neighbors.hpp"
#include "synthetic.hpp"

namespace {

using namespace pcev;

void BM_KdBuild(benchmark::State& state) {
  const auto cloud = testing::uniform_cube(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    KdTree tree(cloud);
    benchmark::DoNotOptimize(tree.size());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KdBuild)->RangeMultiplier(4)->Range(256, 65536)->Complexity();

void BM_KdNearest(benchmark::State& state) {
  const auto cloud = testing::uniform_cube(static_cast<std::size_t>(state.range(0)), 3);
  const auto queries = testing::uniform_cube(1024, 4);
  const KdTree tree(cloud);
  for (auto _ : state) {
    for (const auto& q : queries) benchmark::DoNotOptimize(tree.nearest_squared(q));
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_KdNearest)->RangeMultiplier(4)->Range(256, 65536);

void BM_BruteNearest(benchmark::State& state) {
  const auto cloud = testing::uniform_cube(static_cast<std::size_t>(state.range(0)), 3);
  const auto queries = testing::uniform_cube(1024, 4);
  for (auto _ : state) {
    for (const auto& q : queries) benchmark::DoNotOptimize(nearest(q, cloud));
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_BruteNearest)->RangeMultiplier(4)->Range(256, 4096);

void BM_KdKnn20(benchmark::State& state) {
  const auto cloud = testing::uniform_cube(static_cast<std::size_t>(state.range(0)), 3);
  const KdTree tree(cloud);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree.knn(cloud[i], 20, i));
    i = (i + 1) % cloud.size();
  }
}
BENCHMARK(BM_KdKnn20)->Arg(2048)->Arg(16384);

}  // namespace
