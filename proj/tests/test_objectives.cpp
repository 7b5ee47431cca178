#include "mvgrl/objectives.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace mvgrl;

namespace {

Encoding unit_encoding(const RowVector& direction, int nodes) {
  Encoding e;
  e.h_nodes = direction.replicate(nodes, 1);
  e.h_graph = direction;
  e.z_layers = {e.h_nodes};
  return e;
}

ScoreMatrix diag_scores(std::initializer_list<std::initializer_list<Real>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (Real v : row) m(r, c++) = v;
    ++r;
  }
  return ScoreMatrix::diagonal(std::move(m));
}

MiResult tape_mi(const ScoreMatrix& s, const EstimatorKind& est) {
  ad::Tape tape;
  const ad::NodeId scores = tape.input(s.scores, true);
  const MiLossIds ids = build_mi_loss(tape, scores, s.pos_mask, est);
  tape.forward();
  return {tape.scalar_value(ids.loss), tape.scalar_value(ids.mi_estimate)};
}

}  // namespace

TEST_SUITE_BEGIN("objectives");

TEST_CASE("score_batch: identical unit embeddings score uniformly, diagonal mask") {
  RowVector u(3);
  u << 1, 0, 0;
  std::vector<Encoding> alpha{unit_encoding(u, 4), unit_encoding(u, 2)};
  const auto [sa, sb] = score_batch(alpha, alpha, ContrastiveMode::kLocalGlobal, {});
  CHECK(sa.scores.rows() == 2);
  CHECK((sa.scores.array() == sa.scores(0, 0)).all());
  CHECK(sa.positives() == 2);
  CHECK(sa.pos_mask(0, 0));
  CHECK(sa.pos_mask(1, 1));
  CHECK_FALSE(sa.pos_mask(0, 1));
  CHECK(sb.scores == sa.scores);
}

TEST_CASE("score_batch: orthogonal graph reps in global mode give an identity-like matrix") {
  RowVector e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  std::vector<Encoding> alpha{unit_encoding(e1, 3), unit_encoding(e2, 3)};
  const auto [sa, sb] = score_batch(alpha, alpha, ContrastiveMode::kGlobalGlobal, {});
  CHECK(sa.scores(0, 0) == doctest::Approx(1.0));
  CHECK(sa.scores(1, 1) == doctest::Approx(1.0));
  CHECK(sa.scores(0, 1) == doctest::Approx(0.0));
  CHECK(sa.scores(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("score_batch: ensemble with identical views yields equal matrices") {
  Rng rng(5);
  std::vector<Encoding> alpha;
  for (int i = 0; i < 3; ++i) {
    Encoding e;
    e.h_nodes = test::random_matrix(4, 3, rng);
    e.h_graph = test::random_matrix(1, 3, rng);
    alpha.push_back(std::move(e));
  }
  const auto [sa, sb] = score_batch(alpha, alpha, ContrastiveMode::kEnsemble, {});
  CHECK(sa.scores == sb.scores);
}

TEST_CASE("score_batch rejects singleton batches") {
  RowVector u(2);
  u << 1, 0;
  std::vector<Encoding> one{unit_encoding(u, 2)};
  CHECK_THROWS_WITH_AS(score_batch(one, one, ContrastiveMode::kLocalGlobal, {}),
                       doctest::Contains("corruption"), ValidationError);
}

TEST_CASE("corrupt_features preserves the row multiset for every seed") {
  Rng master(11);
  const Matrix x = test::random_matrix(7, 3, master);
  auto key = [](const Matrix& m) {
    std::multiset<std::string> rows;
    for (int r = 0; r < m.rows(); ++r) {
      std::string s;
      for (int c = 0; c < m.cols(); ++c) s += std::to_string(m(r, c)) + ",";
      rows.insert(s);
    }
    return rows;
  };
  for (uint64_t seed = 0; seed < 30; ++seed) {
    const Matrix shuffled = corrupt_features(x, seed);
    CHECK(key(shuffled) == key(x));
    CHECK((shuffled.colwise().sum() - x.colwise().sum()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("corrupt_features on two rows either swaps or keeps") {
  Matrix x(2, 1);
  x << 1.0, 2.0;
  bool saw_swap = false, saw_identity = false;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix y = corrupt_features(x, seed);
    if (y == x) saw_identity = true;
    if (y(0, 0) == 2.0 && y(1, 0) == 1.0) saw_swap = true;
  }
  CHECK(saw_swap);
  CHECK(saw_identity);
}

TEST_CASE("mi_objective closed forms") {
  // jsd, all-zero 2x2 scores -> loss = 2 ln 2
  const auto jsd = mi_objective(diag_scores({{0, 0}, {0, 0}}), {Estimator::kJsd, 0.5});
  CHECK(jsd.loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  // nce: diagonal 0 against three zero negatives -> ln 4
  const auto nce =
      mi_objective(diag_scores({{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}}),
                   {Estimator::kNce, 0.5});
  CHECK(nce.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(nce.mi_estimate == doctest::Approx(0.0).epsilon(1e-12));

  // dv: positives at 1, negatives at 0 -> MI exactly 1
  const auto dv = mi_objective(diag_scores({{1, 0}, {0, 1}}), {Estimator::kDv, 0.5});
  CHECK(dv.mi_estimate == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dv.loss == doctest::Approx(-1.0).epsilon(1e-12));

  // ntxent with tau=1: cosine 1 positive vs one 0 negative -> ln(1 + e^-1)
  Matrix two(1, 2);
  two << 1.0, 0.0;
  const auto ntx = mi_objective(ScoreMatrix::first_column_positive(std::move(two)),
                                {Estimator::kNtxent, 1.0});
  CHECK(ntx.loss == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("tape losses agree with the value-level estimators") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + rng.uniform_int(5);
    const ScoreMatrix s = ScoreMatrix::diagonal(test::random_matrix(n, n, rng));
    for (const auto est : {Estimator::kJsd, Estimator::kNce, Estimator::kDv}) {
      const EstimatorKind kind{est, 0.5};
      const MiResult plain = mi_objective(s, kind);
      const MiResult taped = tape_mi(s, kind);
      CHECK(plain.loss == doctest::Approx(taped.loss).epsilon(1e-10));
      CHECK(plain.mi_estimate == doctest::Approx(taped.mi_estimate).epsilon(1e-10));
    }
  }
}

TEST_CASE("plain score_batch matches the tape score builder") {
  Rng rng(37);
  const int batch = 3, d = 4;
  std::vector<Encoding> alpha, beta;
  for (int i = 0; i < batch; ++i) {
    Encoding a, b;
    const int nodes = 2 + rng.uniform_int(4);
    a.h_nodes = test::random_matrix(nodes, d, rng);
    a.h_graph = test::random_matrix(1, d, rng);
    b.h_nodes = test::random_matrix(nodes, d, rng);
    b.h_graph = test::random_matrix(1, d, rng);
    alpha.push_back(std::move(a));
    beta.push_back(std::move(b));
  }
  for (const auto mode : {ContrastiveMode::kLocalGlobal, ContrastiveMode::kGlobalGlobal,
                          ContrastiveMode::kEnsemble}) {
    const auto [plain_a, plain_b] = score_batch(alpha, beta, mode, {});

    ad::Tape tape;
    std::vector<EncodingIds> ia, ib;
    for (int i = 0; i < batch; ++i) {
      EncodingIds ea, eb;
      ea.h_nodes = tape.input(alpha[i].h_nodes);
      ea.h_graph = tape.input(alpha[i].h_graph);
      ea.num_nodes = static_cast<int>(alpha[i].h_nodes.rows());
      eb.h_nodes = tape.input(beta[i].h_nodes);
      eb.h_graph = tape.input(beta[i].h_graph);
      eb.num_nodes = static_cast<int>(beta[i].h_nodes.rows());
      ia.push_back(ea);
      ib.push_back(eb);
    }
    const ScoreBatchIds ids = build_score_batch(tape, ia, ib, mode, -1, false, 0.5);
    tape.forward();
    CHECK((tape.value(ids.alpha) - plain_a.scores).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((tape.value(ids.beta) - plain_b.scores).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("loss moves the right way under score perturbations") {
  Rng rng(41);
  for (const auto est : {Estimator::kJsd, Estimator::kNce, Estimator::kNtxent, Estimator::kDv}) {
    const EstimatorKind kind{est, 0.5};
    const ScoreMatrix base = ScoreMatrix::diagonal(test::random_matrix(3, 3, rng));
    const Real loss = mi_objective(base, kind).loss;

    ScoreMatrix pos_up = base;
    pos_up.scores(1, 1) += 0.05;
    CHECK(mi_objective(pos_up, kind).loss < loss);

    ScoreMatrix neg_up = base;
    neg_up.scores(0, 2) += 0.05;
    CHECK(mi_objective(neg_up, kind).loss > loss);
  }
}

TEST_CASE("InfoNCE loss is non-negative with MI capped at log N") {
  Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + rng.uniform_int(5);
    const ScoreMatrix s = ScoreMatrix::diagonal(test::random_matrix(n, n, rng) * 3.0);
    const MiResult r = mi_objective(s, {Estimator::kNce, 0.5});
    CHECK(r.loss >= 0.0);
    CHECK(r.mi_estimate <= std::log(static_cast<Real>(n)) + 1e-12);
  }
}

TEST_CASE("JSD ignores rows that are masked out of both sets") {
  Rng rng(47);
  const Matrix block = test::random_matrix(3, 3, rng);
  const Real base = mi_objective(ScoreMatrix::diagonal(block), {Estimator::kJsd, 0.5}).loss;

  // Pad with a row of all-equal scores excluded from both masks.
  ScoreMatrix padded;
  padded.scores = Matrix::Constant(4, 3, 0.77);
  padded.scores.topRows(3) = block;
  padded.pos_mask.setConstant(4, 3, false);
  padded.neg_mask = ScoreMatrix::Mask::Constant(4, 3, false);
  for (int i = 0; i < 3; ++i) {
    padded.pos_mask(i, i) = true;
    for (int j = 0; j < 3; ++j) {
      if (i != j) (*padded.neg_mask)(i, j) = true;
    }
  }
  const Real with_padding = mi_objective(padded, {Estimator::kJsd, 0.5}).loss;
  CHECK(with_padding == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("mi_objective_pair is symmetric under swapping the views") {
  Rng rng(53);
  const ScoreMatrix a = ScoreMatrix::diagonal(test::random_matrix(4, 4, rng));
  const ScoreMatrix b = ScoreMatrix::diagonal(test::random_matrix(4, 4, rng));
  for (const auto est : {Estimator::kJsd, Estimator::kNce, Estimator::kDv}) {
    const EstimatorKind kind{est, 0.5};
    const MiResult ab = mi_objective_pair(a, b, kind);
    const MiResult ba = mi_objective_pair(b, a, kind);
    CHECK(ab.loss == ba.loss);
    CHECK(ab.mi_estimate == ba.mi_estimate);
  }
}

TEST_CASE("NCE gradient cancels a shared shift of positives and negatives exactly") {
  // Shifting every score in a row equally leaves InfoNCE invariant, so the
  // gradients along that direction must sum to exactly zero. This is the
  // mechanism that gives projection-head biases true-zero gradients.
  Rng rng(59);
  ad::Tape tape;
  const ad::NodeId scores = tape.input(test::random_matrix(3, 3, rng), true);
  ScoreMatrix::Mask mask(3, 3);
  mask.setConstant(false);
  mask.diagonal().setConstant(true);
  const MiLossIds ids = build_mi_loss(tape, scores, mask, {Estimator::kNce, 0.5});
  tape.backward(ids.loss);
  const Matrix& g = tape.grad(scores);
  for (int r = 0; r < 3; ++r) {
    CHECK(std::abs(g.row(r).sum()) < 1e-16);
  }
}

TEST_CASE("mi_objective input validation") {
  ScoreMatrix no_neg;
  no_neg.scores = Matrix::Ones(1, 1);
  no_neg.pos_mask.setConstant(1, 1, true);
  CHECK_THROWS_AS(mi_objective(no_neg, {Estimator::kJsd, 0.5}), ValidationError);

  ScoreMatrix nan_score = ScoreMatrix::diagonal(Matrix::Zero(2, 2));
  nan_score.scores(0, 1) = std::nan("");
  CHECK_THROWS_AS(mi_objective(nan_score, {Estimator::kJsd, 0.5}), ValidationError);

  CHECK_THROWS_AS(mi_objective(ScoreMatrix::diagonal(Matrix::Zero(2, 2)),
                               EstimatorKind{Estimator::kNtxent, 0.0}),
                  ValidationError);
}

TEST_SUITE_END();
