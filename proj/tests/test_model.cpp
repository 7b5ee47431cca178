#include "mvgrl/model.hpp"

#include "helpers.hpp"
#include "mvgrl/graph.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace mvgrl;

namespace {

ModelParams tiny_params(int n_views = 2, int layers = 1, int d_x = 2, int d_h = 4,
                        EncoderSharing sharing = EncoderSharing::kDedicated,
                        DiscriminatorMode disc = DiscriminatorMode::kDot,
                        uint64_t seed = 5) {
  return ModelParams::init(n_views, layers, d_x, d_h, sharing, disc, seed);
}

// gcn_layer on concrete values through a throwaway tape.
Matrix run_gcn_layer(const Matrix& x, const SparseMatrix& view, const Matrix& theta,
                     Real slope) {
  ad::Tape tape;
  const auto v = std::make_shared<SparseMatrix>(view);
  const ad::NodeId out = tape.prelu(tape.spmm(v, tape.matmul(tape.input(x), tape.input(theta))),
                                    tape.scalar_input(slope));
  tape.forward();
  return tape.value(out);
}

Matrix run_readout(const std::vector<Matrix>& z_layers, const Matrix& w, Real slope,
                   Pooling pooling) {
  ad::Tape tape;
  std::vector<ad::NodeId> zs;
  for (const auto& z : z_layers) zs.push_back(tape.input(z));
  const ad::NodeId out =
      build_readout(tape, zs, tape.input(w), tape.scalar_input(slope), pooling);
  tape.forward();
  return tape.value(out);
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("gcn_layer: positive branch on a 2-node path") {
  const auto view = normalize_adjacency(test::path_graph(2));
  Matrix theta(1, 1);
  theta << 2.0;
  const Matrix out = run_gcn_layer(Matrix::Ones(2, 1), view, theta, 0.25);
  CHECK(out(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(out(1, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("gcn_layer: negative branch applies the slope") {
  const auto view = normalize_adjacency(test::path_graph(2));
  Matrix theta(1, 1);
  theta << -1.0;
  const Matrix out = run_gcn_layer(Matrix::Ones(2, 1), view, theta, 0.25);
  CHECK(out(0, 0) == doctest::Approx(-0.25).epsilon(1e-15));
}

TEST_CASE("gcn_layer: zero input stays zero") {
  const auto view = normalize_adjacency(test::path_graph(2));
  Matrix theta(1, 1);
  theta << 3.0;
  CHECK(run_gcn_layer(Matrix::Zero(2, 1), view, theta, 0.25) == Matrix::Zero(2, 1));
}

TEST_CASE("readout: column sums through an identity weight") {
  Matrix z(2, 2);
  z << 1, 2, 3, 4;
  const Matrix out = run_readout({z}, Matrix::Identity(2, 2), 0.25, Pooling::kSum);
  CHECK(out(0, 0) == doctest::Approx(4.0));
  CHECK(out(0, 1) == doctest::Approx(6.0));
}

TEST_CASE("readout: zero activations give zero") {
  const Matrix out =
      run_readout({Matrix::Zero(3, 2)}, Matrix::Identity(2, 2), 0.25, Pooling::kSum);
  CHECK(out == Matrix::Zero(1, 2));
}

TEST_CASE("readout: mean pooling divides by the node count") {
  Matrix z(2, 2);
  z << 1, 2, 3, 4;
  const Matrix out = run_readout({z}, Matrix::Identity(2, 2), 0.25, Pooling::kMean);
  CHECK(out(0, 0) == doctest::Approx(2.0));
  CHECK(out(0, 1) == doctest::Approx(3.0));
}

TEST_CASE("readout: two layers concatenate to width 2 d_h") {
  Rng rng(61);
  auto g = test::make_graph(test::path_graph(3), 2, rng);
  const auto params = tiny_params(2, /*layers=*/2);
  const auto view = normalize_adjacency(g.adjacency);
  const Encoding enc = encode(g, view, params, 0, Pooling::kSum);
  CHECK(enc.z_layers.size() == 2);
  CHECK(params.readout_weight.rows() == 2 * 4);
  CHECK(enc.h_graph.cols() == 4);
}

TEST_CASE("encode: L=1 single node is prelu of x theta through the head") {
  Rng rng(67);
  auto g = test::make_graph(SparseMatrix::from_triplets(1, 1, {}), 2, rng);
  const auto params = tiny_params();
  const auto view = normalize_adjacency(g.adjacency);  // [[1]]
  const Encoding enc = encode(g, view, params, 0, Pooling::kSum);
  const Matrix pre = g.features * params.encoders[0][0].theta;
  const Real slope = params.encoders[0][0].prelu_slope(0, 0);
  const Matrix z = (pre.array() > 0.0).select(pre, slope * pre);
  CHECK((enc.z_layers[0] - z).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("encode: shared stacks give identical outputs on identical views") {
  Rng rng(71);
  auto g = test::make_graph(test::random_connected_graph(5, rng), 3, rng);
  const auto params = tiny_params(2, 1, 3, 4, EncoderSharing::kShared);
  const auto view = normalize_adjacency(g.adjacency);
  const Encoding a = encode(g, view, params, 0, Pooling::kSum);
  const Encoding b = encode(g, view, params, 1, Pooling::kSum);
  CHECK(a.h_nodes == b.h_nodes);
  CHECK(a.h_graph == b.h_graph);
}

TEST_CASE("dedicated stacks start with different weights") {
  const auto params = tiny_params(2, 2, 3, 8);
  CHECK(params.encoders.size() == 2);
  CHECK((params.encoders[0][0].theta - params.encoders[1][0].theta).cwiseAbs().maxCoeff() >
        0.0);
}

TEST_CASE("xavier bounds hold for every initial weight") {
  const auto params = tiny_params(2, 2, 7, 16);
  auto check_bounds = [](const Matrix& w) {
    const Real bound = std::sqrt(6.0 / static_cast<Real>(w.rows() + w.cols()));
    CHECK(w.minCoeff() >= -bound);
    CHECK(w.maxCoeff() <= bound);
    CHECK(w.cwiseAbs().maxCoeff() > 0.0);
  };
  check_bounds(params.encoders[0][0].theta);
  check_bounds(params.encoders[1][1].theta);
  check_bounds(params.node_head[0].weight);
  check_bounds(params.graph_head[1].weight);
  check_bounds(params.readout_weight);
  CHECK(params.node_head[0].bias == Matrix::Zero(1, 16));
}

TEST_CASE("discriminate: dot, bilinear identity, and zero vectors") {
  RowVector a(3), b(3);
  a << 1, 0, 2;
  b << 2, 1, 1;
  CHECK(discriminate(a, b, DiscriminatorMode::kDot, std::nullopt) == doctest::Approx(4.0));
  CHECK(discriminate(a, b, DiscriminatorMode::kBilinear, Matrix::Identity(3, 3)) ==
        doctest::Approx(4.0));
  CHECK(discriminate(RowVector::Zero(3), b, DiscriminatorMode::kDot, std::nullopt) == 0.0);
  CHECK_THROWS_AS(discriminate(a, RowVector::Zero(2), DiscriminatorMode::kDot, std::nullopt),
                  ValidationError);
}

TEST_CASE("infer_embeddings sums the views") {
  Encoding e1, e2;
  e1.h_nodes = Matrix::Ones(3, 2);
  e1.h_graph = Matrix::Ones(1, 2);
  e2 = e1;
  const Embeddings twice = infer_embeddings({e1, e2});
  CHECK(twice.nodes == Matrix::Constant(3, 2, 2.0));
  CHECK(twice.graph == RowVector::Constant(2, 2.0));

  e2.h_nodes.setZero();
  e2.h_graph.setZero();
  const Embeddings one_sided = infer_embeddings({e1, e2});
  CHECK(one_sided.nodes == e1.h_nodes);
}

TEST_CASE("encode is permutation-equivariant; readout is invariant") {
  Rng rng(73);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + rng.uniform_int(8);
    auto g = test::make_graph(test::random_connected_graph(n, rng), 3, rng);
    const auto params = tiny_params(2, 1 + rng.uniform_int(2), 3, 4);
    const auto view = normalize_adjacency(g.adjacency);
    const Encoding base = encode(g, view, params, 0, Pooling::kSum);

    const std::vector<int> perm = rng.permutation(n);
    std::vector<int> sorted_nodes(n);
    AttributedGraph pg;
    {
      // symmetric permutation of the adjacency + matching feature rows
      std::vector<SparseMatrix::Triplet> t;
      for (int r = 0; r < n; ++r) {
        for (int k = g.adjacency.row_begin(r); k < g.adjacency.row_end(r); ++k) {
          t.emplace_back(perm[r], perm[g.adjacency.col_indices[k]], 1.0);
        }
      }
      pg.adjacency = SparseMatrix::from_triplets(n, n, std::move(t));
      pg.features.resize(n, 3);
      for (int r = 0; r < n; ++r) pg.features.row(perm[r]) = g.features.row(r);
    }
    const Encoding permuted = encode(pg, normalize_adjacency(pg.adjacency), params, 0,
                                     Pooling::kSum);
    for (int r = 0; r < n; ++r) {
      CHECK((permuted.h_nodes.row(perm[r]) - base.h_nodes.row(r)).cwiseAbs().maxCoeff() <
            1e-9);
    }
    CHECK((permuted.h_graph - base.h_graph).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("corrupted branch reuses the first product and matches a direct encode") {
  Rng rng(83);
  auto g = test::make_graph(test::random_connected_graph(5, rng), 3, rng);
  const auto params = tiny_params(2, 2, 3, 4);
  const auto view = std::make_shared<SparseMatrix>(normalize_adjacency(g.adjacency));
  const std::vector<int> perm{3, 0, 4, 1, 2};

  ad::Tape tape;
  const ParamIds ids = register_params(tape, params);
  const ad::NodeId x = tape.constant(g.features);
  const EncodingIds real = build_encoding(tape, ids, 0, x, view, Pooling::kSum);
  const EncodingIds corr = build_corrupted_encoding(tape, ids, 0, real, perm, view,
                                                    Pooling::kSum, /*with_graph_rep=*/true);
  tape.forward();

  // Direct route: encode the explicitly permuted features.
  AttributedGraph shuffled = g;
  for (int r = 0; r < 5; ++r) shuffled.features.row(r) = g.features.row(perm[r]);
  const Encoding direct = encode(shuffled, *view, params, 0, Pooling::kSum);
  CHECK((tape.value(corr.h_nodes) - direct.h_nodes).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((tape.value(corr.h_graph) - direct.h_graph).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sum readout is exactly permutation-invariant on representable values") {
  // Integer-valued activations make floating-point summation exact in any
  // order, so reordering nodes must reproduce the readout bit for bit.
  Rng rng(79);
  Matrix z(6, 3);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 3; ++c) z(r, c) = static_cast<Real>(rng.uniform_int(41) - 20);
  }
  const Matrix w = test::random_matrix(3, 3, rng);
  const Matrix base = run_readout({z}, w, 0.25, Pooling::kSum);
  const std::vector<int> perm = rng.permutation(6);
  Matrix shuffled(6, 3);
  for (int r = 0; r < 6; ++r) shuffled.row(perm[r]) = z.row(r);
  CHECK(run_readout({shuffled}, w, 0.25, Pooling::kSum) == base);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const auto params = tiny_params(2, 2, 5, 6, EncoderSharing::kDedicated,
                                  DiscriminatorMode::kBilinear, 99);
  const auto file = std::filesystem::temp_directory_path() / "mvgrl_ckpt_test.bin";
  save_checkpoint(file, params);
  const ModelParams loaded = load_checkpoint(file);
  std::filesystem::remove(file);

  CHECK(loaded.sharing == params.sharing);
  REQUIRE(loaded.encoders.size() == params.encoders.size());
  CHECK(loaded.encoders[1][0].theta == params.encoders[1][0].theta);
  CHECK(loaded.encoders[0][1].prelu_slope == params.encoders[0][1].prelu_slope);
  CHECK(loaded.node_head[0].weight == params.node_head[0].weight);
  CHECK(loaded.node_head[1].bias == params.node_head[1].bias);
  CHECK(loaded.graph_head[0].prelu_slope == params.graph_head[0].prelu_slope);
  CHECK(loaded.readout_weight == params.readout_weight);
  REQUIRE(loaded.bilinear.has_value());
  CHECK(*loaded.bilinear == *params.bilinear);
}

TEST_CASE("register_params order matches for_each_param") {
  auto params = tiny_params(2, 2, 3, 4, EncoderSharing::kDedicated,
                            DiscriminatorMode::kBilinear);
  ad::Tape tape;
  const ParamIds ids = register_params(tape, params);
  std::vector<std::string> traversal_names;
  for_each_param(params, [&](const Matrix&, const std::string& name) {
    traversal_names.push_back(name);
  });
  CHECK(ids.names == traversal_names);
  CHECK(ids.flat.size() == traversal_names.size());
}

TEST_SUITE_END();
