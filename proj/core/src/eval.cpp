#include "mvgrl/eval.hpp"

#include "mvgrl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <thread>

namespace mvgrl {

EvalProtocol eval_protocol_from_string(const std::string& s) {
  if (s == "node_linear") return EvalProtocol::kNodeLinear;
  if (s == "graph_svm_cv" || s == "graph_svm") return EvalProtocol::kGraphSvmCv;
  if (s == "clustering") return EvalProtocol::kClustering;
  throw ValidationError("unknown protocol: " + s);
}
std::string to_string(EvalProtocol p) {
  switch (p) {
    case EvalProtocol::kNodeLinear: return "node_linear";
    case EvalProtocol::kGraphSvmCv: return "graph_svm_cv";
    case EvalProtocol::kClustering: return "clustering";
  }
  return "?";
}

namespace {

// Indexed parallel map with deterministic, order-independent merging: worker
// w handles indices w, w+T, w+2T, ...
template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([=, &fn] {
      for (int i = w; i < count; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

int class_count_of(const std::vector<int>& labels) {
  int k = 0;
  for (int l : labels) {
    check_arg(l >= 0, "labels must be non-negative");
    k = std::max(k, l + 1);
  }
  return k;
}

std::pair<Real, Real> mean_std(const std::vector<Real>& xs) {
  Real mean = 0.0;
  for (Real x : xs) mean += x;
  mean /= static_cast<Real>(xs.size());
  Real var = 0.0;
  for (Real x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<Real>(xs.size());
  return {mean, std::sqrt(var)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Multinomial logistic probe.
// ---------------------------------------------------------------------------

namespace {

struct LogisticModel {
  Matrix w;  // d x k
  RowVector b;
};

Matrix softmax_rows(Matrix logits) {
  for (int r = 0; r < logits.rows(); ++r) {
    const Real m = logits.row(r).maxCoeff();
    logits.row(r) = (logits.row(r).array() - m).exp();
    logits.row(r) /= logits.row(r).sum();
  }
  return logits;
}

LogisticModel fit_logistic(const Matrix& x, const std::vector<int>& y, int k, Real l2,
                           Real tol, int max_iter, uint64_t seed) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  Rng rng = Rng::derived(seed, {0x70726f62u});
  LogisticModel model;
  model.w.resize(d, k);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < k; ++c) model.w(r, c) = 0.01 * rng.normal();
  }
  model.b = RowVector::Zero(k);

  // Full-batch Adam on cross-entropy + l2 * ||W||^2, run to tolerance.
  Matrix mw = Matrix::Zero(d, k), vw = Matrix::Zero(d, k);
  RowVector mb = RowVector::Zero(k), vb = RowVector::Zero(k);
  const Real lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Real prev_loss = std::numeric_limits<Real>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    Matrix probs = softmax_rows((x * model.w).rowwise() + model.b);
    Real loss = 0.0;
    for (int r = 0; r < n; ++r) loss -= std::log(std::max(probs(r, y[r]), 1e-300));
    loss /= static_cast<Real>(n);
    loss += l2 * model.w.squaredNorm();

    for (int r = 0; r < n; ++r) probs(r, y[r]) -= 1.0;
    probs /= static_cast<Real>(n);
    const Matrix gw = x.transpose() * probs + 2.0 * l2 * model.w;
    const RowVector gb = probs.colwise().sum();

    const Real bc1 = 1.0 - std::pow(b1, it);
    const Real bc2 = 1.0 - std::pow(b2, it);
    mw = b1 * mw + (1.0 - b1) * gw;
    vw = b2 * vw + (1.0 - b2) * gw.cwiseProduct(gw);
    mb = b1 * mb + (1.0 - b1) * gb;
    vb = b2 * vb + (1.0 - b2) * gb.cwiseProduct(gb);
    model.w.array() -= lr * (mw / bc1).array() / ((vw / bc2).array().sqrt() + eps);
    model.b.array() -= lr * (mb / bc1).array() / ((vb / bc2).array().sqrt() + eps);

    if (std::abs(prev_loss - loss) < tol) break;
    prev_loss = loss;
  }
  return model;
}

Real accuracy_of(const Matrix& logits, const std::vector<int>& y, const std::vector<int>& ids) {
  int hits = 0;
  for (int id : ids) {
    int arg = 0;
    logits.row(id).maxCoeff(&arg);
    if (arg == y[id]) ++hits;
  }
  return static_cast<Real>(hits) / static_cast<Real>(ids.size());
}

}  // namespace

EvalReport linear_eval_node(const Matrix& embeddings, const std::vector<int>& labels,
                            const Split& split, const NodeEvalOptions& opts) {
  check_arg(static_cast<int>(labels.size()) == embeddings.rows(),
            "linear_eval_node: label count must match embedding rows");
  check_arg(!split.train.empty() && !split.test.empty(),
            "linear_eval_node: train and test splits must be non-empty");
  const int k = class_count_of(labels);
  {
    std::set<int> train_classes;
    for (int id : split.train) train_classes.insert(labels[id]);
    check_arg(train_classes.size() >= 2, "linear_eval_node: train split has a single class");
  }

  Matrix x_train(split.train.size(), embeddings.cols());
  std::vector<int> y_train(split.train.size());
  for (size_t i = 0; i < split.train.size(); ++i) {
    x_train.row(i) = embeddings.row(split.train[i]);
    y_train[i] = labels[split.train[i]];
  }

  EvalReport report;
  report.protocol = EvalProtocol::kNodeLinear;
  report.chosen_hyperparameter = opts.l2;
  report.per_run.resize(opts.runs);
  parallel_for(opts.runs, opts.workers, [&](int run) {
    const LogisticModel model =
        fit_logistic(x_train, y_train, k, opts.l2, opts.tolerance, opts.max_iterations,
                     opts.seed + static_cast<uint64_t>(run));
    const Matrix logits = (embeddings * model.w).rowwise() + model.b;
    report.per_run[run] = accuracy_of(logits, labels, split.test);
  });
  std::tie(report.mean, report.std_dev) = mean_std(report.per_run);
  return report;
}

// ---------------------------------------------------------------------------
// Linear SVM with stratified cross validation.
// ---------------------------------------------------------------------------

namespace {

// Pegasos-style deterministic full-batch subgradient descent on
// lambda/2 ||w||^2 + mean hinge, lambda = 1 / (C m). The bias rides along as
// an augmented, regularized coordinate.
Vector fit_binary_svm(const Matrix& x, const std::vector<Real>& y, Real c, int iterations) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  const Real lambda = 1.0 / (c * static_cast<Real>(n));
  Vector w = Vector::Zero(d + 1);
  for (int t = 1; t <= iterations; ++t) {
    const Real eta = 1.0 / (lambda * static_cast<Real>(t));
    Vector grad = lambda * w;
    for (int i = 0; i < n; ++i) {
      const Real margin = y[i] * (x.row(i).dot(w.head(d)) + w[d]);
      if (margin < 1.0) {
        grad.head(d) -= (y[i] / static_cast<Real>(n)) * x.row(i).transpose();
        grad[d] -= y[i] / static_cast<Real>(n);
      }
    }
    w -= eta * grad;
    // Pegasos projection keeps the iterates bounded.
    const Real norm = w.norm();
    const Real radius = 1.0 / std::sqrt(lambda);
    if (norm > radius) w *= radius / norm;
  }
  return w;
}

struct SvmModel {
  Matrix w;  // (d+1) x k one-vs-rest columns
};

SvmModel fit_svm(const Matrix& x, const std::vector<int>& y, int k, Real c, int iterations) {
  SvmModel model;
  model.w.resize(x.cols() + 1, k);
  for (int cls = 0; cls < k; ++cls) {
    std::vector<Real> signs(y.size());
    for (size_t i = 0; i < y.size(); ++i) signs[i] = y[i] == cls ? 1.0 : -1.0;
    model.w.col(cls) = fit_binary_svm(x, signs, c, iterations);
  }
  return model;
}

int svm_predict(const SvmModel& model, const RowVector& x) {
  const int d = static_cast<int>(x.size());
  int best = 0;
  Real best_score = -std::numeric_limits<Real>::infinity();
  for (int cls = 0; cls < model.w.cols(); ++cls) {
    const Real score = x.dot(model.w.col(cls).head(d)) + model.w(d, cls);
    if (score > best_score) {
      best_score = score;
      best = cls;
    }
  }
  return best;
}

// Stratified fold assignment: per class, shuffle members and deal them out
// round-robin starting from a rotating fold.
std::vector<int> stratified_folds(const std::vector<int>& labels, int k_classes, int folds,
                                  Rng& rng) {
  std::vector<int> assignment(labels.size());
  for (int cls = 0; cls < k_classes; ++cls) {
    std::vector<int> members;
    for (size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(static_cast<int>(i));
    }
    rng.shuffle(members);
    const int start = rng.uniform_int(folds);
    for (size_t j = 0; j < members.size(); ++j) {
      assignment[members[j]] = static_cast<int>((start + j) % folds);
    }
  }
  return assignment;
}

}  // namespace

EvalReport svm_cv_graph(const Matrix& embeddings, const std::vector<int>& labels,
                        const SvmEvalOptions& opts) {
  const int m = static_cast<int>(embeddings.rows());
  check_arg(static_cast<int>(labels.size()) == m, "svm_cv_graph: label count mismatch");
  check_arg(m >= opts.folds, "svm_cv_graph: need at least `folds` samples");
  const int k = class_count_of(labels);
  check_arg(k >= 2, "svm_cv_graph: need at least two classes");
  check_arg(!opts.c_grid.empty(), "svm_cv_graph: empty C grid");
  {
    std::map<int, int> counts;
    for (int l : labels) ++counts[l];
    for (const auto& [cls, count] : counts) {
      // A class that fits in one fold would leave some training side empty.
      check_arg(count >= 2, "svm_cv_graph: class " + std::to_string(cls) +
                                " has fewer than 2 members; stratification impossible");
    }
  }

  // acc[repeat][c_index]
  std::vector<std::vector<Real>> acc(opts.repeats, std::vector<Real>(opts.c_grid.size(), 0.0));
  parallel_for(opts.repeats, opts.workers, [&](int rep) {
    Rng rng = Rng::derived(opts.seed, {0x73766d66u, static_cast<uint64_t>(rep)});
    const std::vector<int> fold_of = stratified_folds(labels, k, opts.folds, rng);
    for (size_t ci = 0; ci < opts.c_grid.size(); ++ci) {
      Real fold_acc_sum = 0.0;
      for (int fold = 0; fold < opts.folds; ++fold) {
        std::vector<int> train_ids, test_ids;
        for (int i = 0; i < m; ++i) {
          (fold_of[i] == fold ? test_ids : train_ids).push_back(i);
        }
        Matrix x_train(train_ids.size(), embeddings.cols());
        std::vector<int> y_train(train_ids.size());
        for (size_t i = 0; i < train_ids.size(); ++i) {
          x_train.row(i) = embeddings.row(train_ids[i]);
          y_train[i] = labels[train_ids[i]];
        }
        const SvmModel model = fit_svm(x_train, y_train, k, opts.c_grid[ci], opts.iterations);
        int hits = 0;
        for (int id : test_ids) {
          if (svm_predict(model, embeddings.row(id)) == labels[id]) ++hits;
        }
        fold_acc_sum += test_ids.empty()
                            ? 0.0
                            : static_cast<Real>(hits) / static_cast<Real>(test_ids.size());
      }
      acc[rep][ci] = fold_acc_sum / static_cast<Real>(opts.folds);
    }
  });

  size_t best_ci = 0;
  Real best_mean = -1.0;
  for (size_t ci = 0; ci < opts.c_grid.size(); ++ci) {
    Real mean = 0.0;
    for (int rep = 0; rep < opts.repeats; ++rep) mean += acc[rep][ci];
    mean /= static_cast<Real>(opts.repeats);
    if (mean > best_mean) {
      best_mean = mean;
      best_ci = ci;
    }
  }

  EvalReport report;
  report.protocol = EvalProtocol::kGraphSvmCv;
  report.chosen_hyperparameter = opts.c_grid[best_ci];
  report.per_run.resize(opts.repeats);
  for (int rep = 0; rep < opts.repeats; ++rep) report.per_run[rep] = acc[rep][best_ci];
  std::tie(report.mean, report.std_dev) = mean_std(report.per_run);
  return report;
}

// ---------------------------------------------------------------------------
// K-means clustering with NMI / ARI scoring.
// ---------------------------------------------------------------------------

std::vector<int> kmeans(const Matrix& points, int k, uint64_t seed, int max_iterations) {
  const int n = static_cast<int>(points.rows());
  check_arg(k >= 1 && k <= n, "kmeans: k must be in [1, n]");
  Rng rng = Rng::derived(seed, {0x6b6d6e73u});

  // k-means++ seeding.
  Matrix centroids(k, points.cols());
  centroids.row(0) = points.row(rng.uniform_int(n));
  Vector d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const Real total = d2.sum();
    int pick = 0;
    if (total > 0.0) {
      Real target = rng.uniform() * total;
      for (; pick < n - 1; ++pick) {
        target -= d2[pick];
        if (target <= 0.0) break;
      }
    } else {
      pick = rng.uniform_int(n);
    }
    centroids.row(c) = points.row(pick);
    d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> assignment(n, -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      Real best_d = (points.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const Real dist = (points.row(i) - centroids.row(c)).squaredNorm();
        if (dist < best_d) {  // ties keep the lowest centroid index
          best_d = dist;
          best = c;
        }
      }
      if (assignment[i] != best) {
        assignment[i] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(assignment[i]) += points.row(i);
      ++counts[assignment[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<Real>(counts[c]);
      } else {
        // Reseed an empty cluster with the point farthest from its centroid.
        int farthest = 0;
        Real far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const Real dist = (points.row(i) - centroids.row(assignment[i])).squaredNorm();
          if (dist > far_d) {
            far_d = dist;
            farthest = i;
          }
        }
        centroids.row(c) = points.row(farthest);
      }
    }
  }
  return assignment;
}

namespace {

struct Contingency {
  std::vector<std::vector<long>> table;
  std::vector<long> row_sums, col_sums;
  long n = 0;
};

Contingency contingency_of(const std::vector<int>& a, const std::vector<int>& b) {
  check_arg(a.size() == b.size() && !a.empty(), "partition sizes differ or empty");
  const int ka = class_count_of(a), kb = class_count_of(b);
  Contingency c;
  c.table.assign(ka, std::vector<long>(kb, 0));
  c.row_sums.assign(ka, 0);
  c.col_sums.assign(kb, 0);
  c.n = static_cast<long>(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    ++c.table[a[i]][b[i]];
    ++c.row_sums[a[i]];
    ++c.col_sums[b[i]];
  }
  return c;
}

Real entropy_of(const std::vector<long>& counts, long n) {
  Real h = 0.0;
  for (long c : counts) {
    if (c > 0) {
      const Real p = static_cast<Real>(c) / static_cast<Real>(n);
      h -= p * std::log(p);
    }
  }
  return h;
}

Real choose2(long x) { return 0.5 * static_cast<Real>(x) * static_cast<Real>(x - 1); }

}  // namespace

Real normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  const Contingency c = contingency_of(a, b);
  Real mi = 0.0;
  for (size_t i = 0; i < c.table.size(); ++i) {
    for (size_t j = 0; j < c.table[i].size(); ++j) {
      const long nij = c.table[i][j];
      if (nij > 0) {
        const Real pij = static_cast<Real>(nij) / static_cast<Real>(c.n);
        mi += pij * std::log(static_cast<Real>(nij) * static_cast<Real>(c.n) /
                             (static_cast<Real>(c.row_sums[i]) * static_cast<Real>(c.col_sums[j])));
      }
    }
  }
  const Real denom = std::sqrt(entropy_of(c.row_sums, c.n) * entropy_of(c.col_sums, c.n));
  return denom > 0.0 ? mi / denom : 0.0;
}

Real adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const Contingency c = contingency_of(a, b);
  Real index = 0.0;
  for (const auto& row : c.table) {
    for (long nij : row) index += choose2(nij);
  }
  Real sum_rows = 0.0, sum_cols = 0.0;
  for (long r : c.row_sums) sum_rows += choose2(r);
  for (long col : c.col_sums) sum_cols += choose2(col);
  const Real expected = sum_rows * sum_cols / choose2(c.n);
  const Real max_index = 0.5 * (sum_rows + sum_cols);
  const Real denom = max_index - expected;
  return denom != 0.0 ? (index - expected) / denom : 0.0;
}

ClusterResult cluster_and_score(const Matrix& embeddings, const std::vector<int>& labels,
                                int k, const ClusterOptions& opts) {
  check_arg(static_cast<int>(labels.size()) == embeddings.rows(),
            "cluster_and_score: label count mismatch");
  check_arg(k == class_count_of(labels),
            "cluster_and_score: k must equal the number of ground-truth classes");
  check_arg(k <= embeddings.rows(), "cluster_and_score: k exceeds the number of points");
  {
    std::vector<int> order(embeddings.rows());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    auto row_less = [&embeddings](int a, int b) {
      for (int c = 0; c < embeddings.cols(); ++c) {
        if (embeddings(a, c) != embeddings(b, c)) return embeddings(a, c) < embeddings(b, c);
      }
      return false;
    };
    std::sort(order.begin(), order.end(), row_less);
    int distinct = 1;
    for (size_t i = 1; i < order.size(); ++i) {
      if (row_less(order[i - 1], order[i])) ++distinct;
    }
    check_arg(k <= distinct, "cluster_and_score: k exceeds the number of distinct points");
  }

  std::vector<Real> nmis(opts.restarts), aris(opts.restarts);
  parallel_for(opts.restarts, opts.workers, [&](int run) {
    const std::vector<int> assignment =
        kmeans(embeddings, k, opts.seed + static_cast<uint64_t>(run), opts.max_iterations);
    nmis[run] = normalized_mutual_information(labels, assignment);
    aris[run] = adjusted_rand_index(labels, assignment);
  });
  ClusterResult out;
  for (int r = 0; r < opts.restarts; ++r) {
    out.nmi += nmis[r];
    out.ari += aris[r];
  }
  out.nmi /= static_cast<Real>(opts.restarts);
  out.ari /= static_cast<Real>(opts.restarts);
  return out;
}

}  // namespace mvgrl
