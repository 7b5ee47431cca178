#pragma once

#include "mvgrl/common.hpp"
#include "mvgrl/graph.hpp"

#include <string>
#include <vector>

namespace mvgrl {

enum class EvalProtocol { kNodeLinear, kGraphSvmCv, kClustering };
EvalProtocol eval_protocol_from_string(const std::string& s);
std::string to_string(EvalProtocol);

struct EvalReport {
  EvalProtocol protocol = EvalProtocol::kNodeLinear;
  Real mean = 0.0;
  Real std_dev = 0.0;
  std::vector<Real> per_run;
  Real chosen_hyperparameter = 0.0;  // SVM C, or the probe's L2 strength
};

struct NodeEvalOptions {
  int runs = 50;
  Real l2 = 1e-4;
  Real tolerance = 1e-6;  // on the loss decrease
  int max_iterations = 2000;
  uint64_t seed = 7;
  int workers = 0;  // 0 = hardware concurrency
};

/// Frozen-embedding linear evaluation: an L2-regularized multinomial
/// logistic probe trained on the train split, reporting test accuracy over
/// independent runs that differ only by classifier seed.
EvalReport linear_eval_node(const Matrix& embeddings, const std::vector<int>& labels,
                            const Split& split, const NodeEvalOptions& opts = {});

struct SvmEvalOptions {
  int folds = 10;
  int repeats = 5;
  std::vector<Real> c_grid = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  int iterations = 2000;
  uint64_t seed = 7;
  int workers = 0;
};

/// Stratified k-fold cross validation of a linear SVM (L2-regularized hinge
/// loss, deterministic full-batch subgradient descent). Reports the best
/// C's mean fold accuracy, mean +- std across repeats with reshuffled folds.
EvalReport svm_cv_graph(const Matrix& embeddings, const std::vector<int>& labels,
                        const SvmEvalOptions& opts = {});

struct ClusterResult {
  Real nmi = 0.0;
  Real ari = 0.0;
};

struct ClusterOptions {
  int restarts = 50;  // averaged, not best-of
  int max_iterations = 300;
  uint64_t seed = 7;
  int workers = 0;
};

/// Lloyd's K-means with k-means++ seeding; NMI (sqrt normalization) and ARI
/// against the ground-truth labels, averaged over restarts.
ClusterResult cluster_and_score(const Matrix& embeddings, const std::vector<int>& labels,
                                int k, const ClusterOptions& opts = {});

/// One K-means run; returns assignments. Ties break toward the lowest
/// centroid index; stops when assignments stabilize.
std::vector<int> kmeans(const Matrix& points, int k, uint64_t seed, int max_iterations = 300);

Real normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b);
Real adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace mvgrl
