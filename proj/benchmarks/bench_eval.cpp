#include "mvgrl/eval.hpp"

#include "bench_common.hpp"

#include <benchmark/benchmark.h>

using namespace mvgrl;

namespace {

std::vector<int> block_labels(int n, int k) {
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % k;
  return labels;
}

}  // namespace

static void BM_Kmeans(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix points = bench::random_matrix(n, 64, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kmeans(points, 7, 11));
  }
}
BENCHMARK(BM_Kmeans)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

static void BM_LinearSvmCv(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto labels = block_labels(m, 2);
  Matrix emb = bench::random_matrix(m, 128, 5);
  for (int i = 0; i < m; ++i) emb(i, 0) += labels[i] == 0 ? -1.0 : 1.0;
  SvmEvalOptions opts;
  opts.repeats = 1;
  opts.iterations = 500;
  opts.workers = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(svm_cv_graph(emb, labels, opts));
  }
}
BENCHMARK(BM_LinearSvmCv)->Arg(188)->Unit(benchmark::kMillisecond);

static void BM_LogisticProbe(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto labels = block_labels(n, 7);
  Matrix emb = bench::random_matrix(n, 512, 9);
  for (int i = 0; i < n; ++i) emb(i, labels[i]) += 2.0;
  Split split;
  for (int i = 0; i < n; ++i) {
    (i % 4 == 0 ? split.train : (i % 4 == 1 ? split.val : split.test)).push_back(i);
  }
  NodeEvalOptions opts;
  opts.runs = 1;
  opts.workers = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(linear_eval_node(emb, labels, split, opts));
  }
}
BENCHMARK(BM_LogisticProbe)->Arg(1024)->Unit(benchmark::kMillisecond);
