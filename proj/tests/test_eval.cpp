#include "mvgrl/eval.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace mvgrl;

namespace {

// Embeddings that one-hot encode the label: perfectly separable.
Matrix onehot_embeddings(const std::vector<int>& labels, int k, Real noise, Rng& rng) {
  Matrix x = Matrix::Zero(labels.size(), k);
  for (size_t i = 0; i < labels.size(); ++i) {
    x(static_cast<int>(i), labels[i]) = 1.0;
    for (int c = 0; c < k; ++c) x(static_cast<int>(i), c) += noise * rng.normal();
  }
  return x;
}

// Blocks of three per class so the mod-3 split below sees every class.
std::vector<int> balanced_labels(int n, int k) {
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = (i / 3) % k;
  return labels;
}

Split even_split(int n) {
  Split s;
  for (int i = 0; i < n; ++i) {
    if (i % 3 == 0) {
      s.train.push_back(i);
    } else if (i % 3 == 1) {
      s.val.push_back(i);
    } else {
      s.test.push_back(i);
    }
  }
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("node probe: one-hot embeddings are perfectly separable") {
  Rng rng(3);
  const auto labels = balanced_labels(60, 3);
  const Matrix emb = onehot_embeddings(labels, 3, 0.0, rng);
  NodeEvalOptions opts;
  opts.runs = 5;
  const EvalReport report = linear_eval_node(emb, labels, even_split(60), opts);
  CHECK(report.mean == doctest::Approx(1.0));
  CHECK(report.std_dev == doctest::Approx(0.0));
  CHECK(report.per_run.size() == 5);
}

TEST_CASE("node probe: permuted labels score near chance") {
  Rng rng(5);
  const int n = 200;
  auto labels = balanced_labels(n, 2);
  const Matrix emb = onehot_embeddings(labels, 2, 0.05, rng);
  // Destroy the relationship, keeping balance.
  Rng shuffler(17);
  shuffler.shuffle(labels);
  NodeEvalOptions opts;
  opts.runs = 3;
  const EvalReport report = linear_eval_node(emb, labels, even_split(n), opts);
  CHECK(report.mean > 0.25);
  CHECK(report.mean < 0.75);
}

TEST_CASE("node probe: single-class train split is an error") {
  Rng rng(7);
  const auto labels = balanced_labels(9, 3);
  const Matrix emb = onehot_embeddings(labels, 3, 0.0, rng);
  Split split;
  split.train = {0, 1, 2};  // all label 0
  split.test = {3, 4};
  CHECK_THROWS_AS(linear_eval_node(emb, labels, split, {}), ValidationError);
}

TEST_CASE("node probe accuracy is invariant under orthogonal rotation") {
  Rng rng(11);
  const int n = 90, d = 6;
  const auto labels = balanced_labels(n, 3);
  Matrix emb = onehot_embeddings(labels, 3, 0.2, rng);
  emb.conservativeResize(n, d);
  emb.rightCols(d - 3) = 0.3 * test::random_matrix(n, d - 3, rng);

  // Random orthogonal matrix from QR of a Gaussian.
  const Matrix gauss = test::random_matrix(d, d, rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(gauss).householderQ();
  NodeEvalOptions opts;
  opts.runs = 50;
  const EvalReport base = linear_eval_node(emb, labels, even_split(n), opts);
  const EvalReport rotated = linear_eval_node(emb * q, labels, even_split(n), opts);
  CHECK(std::abs(base.mean - rotated.mean) <= 0.005 + 1e-12);
}

TEST_CASE("svm: linearly separable two-class embeddings reach accuracy 1") {
  Rng rng(13);
  const auto labels = balanced_labels(40, 2);
  Matrix emb(40, 2);
  for (int i = 0; i < 40; ++i) {
    emb(i, 0) = (labels[i] == 0 ? -2.0 : 2.0) + 0.1 * rng.normal();
    emb(i, 1) = rng.normal();
  }
  SvmEvalOptions opts;
  opts.repeats = 2;
  opts.iterations = 500;
  const EvalReport report = svm_cv_graph(emb, labels, opts);
  CHECK(report.mean == doctest::Approx(1.0));
}

TEST_CASE("svm: identical embeddings with balanced labels score near chance") {
  const auto labels = balanced_labels(40, 2);
  const Matrix emb = Matrix::Ones(40, 3);
  SvmEvalOptions opts;
  opts.repeats = 2;
  opts.iterations = 200;
  const EvalReport report = svm_cv_graph(emb, labels, opts);
  CHECK(report.mean > 0.2);
  CHECK(report.mean < 0.8);
}

TEST_CASE("svm: deterministic for a fixed seed") {
  Rng rng(17);
  const auto labels = balanced_labels(30, 3);
  const Matrix emb = onehot_embeddings(labels, 3, 0.5, rng);
  SvmEvalOptions opts;
  opts.repeats = 2;
  opts.iterations = 300;
  const EvalReport a = svm_cv_graph(emb, labels, opts);
  const EvalReport b = svm_cv_graph(emb, labels, opts);
  CHECK(a.mean == b.mean);
  CHECK(a.per_run == b.per_run);
  CHECK(a.chosen_hyperparameter == b.chosen_hyperparameter);
}

TEST_CASE("svm input validation") {
  const auto labels = balanced_labels(12, 2);
  const Matrix emb = Matrix::Ones(12, 2);
  SvmEvalOptions opts;
  opts.folds = 20;  // more folds than samples
  CHECK_THROWS_AS(svm_cv_graph(emb, labels, opts), ValidationError);

  std::vector<int> lonely = labels;
  for (auto& l : lonely) l = 0;
  lonely[0] = 1;  // class with a single member cannot stratify
  CHECK_THROWS_AS(svm_cv_graph(emb, lonely, {}), ValidationError);
}

TEST_CASE("kmeans: perfect clusters give NMI = ARI = 1") {
  Rng rng(19);
  const auto labels = balanced_labels(30, 3);
  const Matrix emb = 10.0 * onehot_embeddings(labels, 3, 0.001, rng);
  ClusterOptions opts;
  opts.restarts = 10;
  const ClusterResult r = cluster_and_score(emb, labels, 3, opts);
  CHECK(r.nmi == doctest::Approx(1.0));
  CHECK(r.ari == doctest::Approx(1.0));
}

TEST_CASE("degenerate single-cluster assignment scores zero") {
  const std::vector<int> labels = balanced_labels(10, 2);
  const std::vector<int> one_cluster(10, 0);
  CHECK(normalized_mutual_information(labels, one_cluster) == 0.0);
  CHECK(adjusted_rand_index(labels, one_cluster) == 0.0);
}

TEST_CASE("NMI and ARI are symmetric and relabeling-invariant") {
  Rng rng(23);
  std::vector<int> a(40), b(40);
  for (int i = 0; i < 40; ++i) {
    a[i] = rng.uniform_int(3);
    b[i] = rng.uniform_int(4);
  }
  CHECK(normalized_mutual_information(a, b) ==
        doctest::Approx(normalized_mutual_information(b, a)).epsilon(1e-12));
  CHECK(adjusted_rand_index(a, b) ==
        doctest::Approx(adjusted_rand_index(b, a)).epsilon(1e-12));

  // relabel b: 0<->3
  std::vector<int> relabeled = b;
  for (auto& v : relabeled) v = v == 0 ? 3 : v == 3 ? 0 : v;
  CHECK(normalized_mutual_information(a, relabeled) ==
        doctest::Approx(normalized_mutual_information(a, b)).epsilon(1e-12));
  CHECK(adjusted_rand_index(a, relabeled) ==
        doctest::Approx(adjusted_rand_index(a, b)).epsilon(1e-12));
}

TEST_CASE("cluster_and_score validates k") {
  Rng rng(29);
  const auto labels = balanced_labels(10, 2);
  const Matrix emb = onehot_embeddings(labels, 2, 0.1, rng);
  CHECK_THROWS_AS(cluster_and_score(emb, labels, 3, {}), ValidationError);
  CHECK_THROWS_AS(cluster_and_score(Matrix::Ones(10, 2), labels, 2, {}), ValidationError);
}

TEST_SUITE_END();
