#include <benchmark/benchmark.h>

#include "pcev/normals.hpp"
#include "synthetic.hpp"

namespace {

using namespace pcev;

void BM_NormalsKnn(benchmark::State& state) {
  const auto cloud = testing::unit_sphere_fps(2048, 5);
  const auto spec = NeighborhoodSpec::knn(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_normals(cloud, spec).size());
}
BENCHMARK(BM_NormalsKnn)->Arg(10)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_NormalsBall(benchmark::State& state) {
  const auto cloud = testing::unit_sphere_fps(2048, 5);
  const auto spec = NeighborhoodSpec::ball(0.1);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_normals(cloud, spec).size());
}
BENCHMARK(BM_NormalsBall)->Unit(benchmark::kMillisecond);

}  // namespace
