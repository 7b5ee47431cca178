#include "mvgrl/diffusion.hpp"

#include "bench_common.hpp"

#include <benchmark/benchmark.h>

using namespace mvgrl;

static void BM_PprDiffusion(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = patch_isolated_nodes(bench::random_graph(n, 0.01, 7));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ppr_diffusion(a, 0.2));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_PprDiffusion)->Arg(128)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_HeatDiffusion(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = patch_isolated_nodes(bench::random_graph(n, 0.01, 7));
  for (auto _ : state) {
    benchmark::DoNotOptimize(heat_diffusion(a, 5.0));
  }
}
BENCHMARK(BM_HeatDiffusion)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_DistanceView(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = bench::random_graph(n, 0.01, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(distance_view(a));
  }
}
BENCHMARK(BM_DistanceView)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_SparsifyTopk(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix s = ppr_diffusion(patch_isolated_nodes(bench::random_graph(n, 0.01, 7)), 0.2);
  ViewSpec spec;
  spec.sparsify_topk = 32;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sparsify(s, spec));
  }
}
BENCHMARK(BM_SparsifyTopk)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);
