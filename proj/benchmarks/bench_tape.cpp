#include "mvgrl/model.hpp"
#include "mvgrl/objectives.hpp"

#include "bench_common.hpp"

#include <benchmark/benchmark.h>

using namespace mvgrl;

// One transductive training step (forward + backward) at varying width.
static void BM_TrainStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d_h = static_cast<int>(state.range(1));
  const int d_x = 256;
  const auto graph = bench::random_graph(n, 2.0 / n, 11);
  const auto view = std::make_shared<SparseMatrix>(normalize_adjacency(graph));
  const Matrix features = bench::random_matrix(n, d_x, 13);
  ModelParams params = ModelParams::init(2, 1, d_x, d_h, EncoderSharing::kDedicated,
                                         DiscriminatorMode::kDot, 3);
  Rng rng(17);
  for (auto _ : state) {
    ad::Tape tape;
    const ParamIds ids = register_params(tape, params);
    const ad::NodeId x = tape.constant(features);
    const EncodingIds e0 = build_encoding(tape, ids, 0, x, view, Pooling::kSum);
    const EncodingIds e1 = build_encoding(tape, ids, 1, x, view, Pooling::kSum);
    const std::vector<int> perm = rng.permutation(n);
    const EncodingIds c0 =
        build_corrupted_encoding(tape, ids, 0, e0, perm, view, Pooling::kSum, false);
    const EncodingIds c1 =
        build_corrupted_encoding(tape, ids, 1, e1, perm, view, Pooling::kSum, false);
    const ad::NodeId sa =
        build_corruption_scores(tape, e0.h_nodes, c0.h_nodes, e1.h_graph, -1, false, 0.5);
    const ad::NodeId sb =
        build_corruption_scores(tape, e1.h_nodes, c1.h_nodes, e0.h_graph, -1, false, 0.5);
    ScoreMatrix::Mask mask(n, 2);
    mask.setConstant(false);
    mask.col(0).setConstant(true);
    const MiLossIds la = build_mi_loss(tape, sa, mask, {Estimator::kJsd, 0.5});
    const MiLossIds lb = build_mi_loss(tape, sb, mask, {Estimator::kJsd, 0.5});
    const ad::NodeId loss = tape.scale(tape.add(la.loss, lb.loss), 0.5);
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(ids.flat[0]));
  }
}
BENCHMARK(BM_TrainStep)->Args({256, 128})->Args({1024, 256})->Args({2000, 512})
    ->Unit(benchmark::kMillisecond);

static void BM_Spmm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto view = normalize_adjacency(bench::random_graph(n, 4.0 / n, 5));
  const Matrix x = bench::random_matrix(n, 512, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(view.multiply(x));
  }
}
BENCHMARK(BM_Spmm)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);
