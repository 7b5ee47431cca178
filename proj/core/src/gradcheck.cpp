#include "mvgrl/gradcheck.hpp"

#include "mvgrl/graph.hpp"
#include "mvgrl/rng.hpp"

#include <cmath>
#include <functional>

namespace mvgrl::ad {

namespace {

Matrix kink_safe(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Real v = rng.normal();
      if (std::abs(v) < 1e-3) v += v < 0 ? -1e-3 : 1e-3;
      m(r, c) = std::clamp(v, -3.0, 3.0);  // keep sigmoid-family gradients alive
    }
  }
  return m;
}

// Weighted total sum keeps every output coordinate's gradient at O(1), so
// the relative-error denominator never collapses into FD round-off noise.
NodeId weighted_sum(Tape& tape, NodeId y, Rng& rng) {
  Matrix w(tape.rows(y), tape.cols(y));
  for (int r = 0; r < w.rows(); ++r) {
    for (int c = 0; c < w.cols(); ++c) w(r, c) = 0.5 + rng.uniform();
  }
  const NodeId weighted = tape.elementwise_mul(y, tape.constant(std::move(w)));
  return tape.sum_rows(tape.transpose(tape.sum_rows(weighted)));
}

SparseMatrix random_view(int n, Rng& rng) {
  std::vector<SparseMatrix::Triplet> t;
  for (int v = 1; v < n; ++v) {
    const int u = rng.uniform_int(v);
    t.emplace_back(u, v, 1.0);
    t.emplace_back(v, u, 1.0);
  }
  return normalize_adjacency(SparseMatrix::from_triplets(n, n, std::move(t)));
}

using CaseFn = std::function<NodeId(Tape&, Rng&)>;

}  // namespace

std::vector<OpGradReport> op_gradient_sweep(uint64_t seed, int trials, Real eps) {
  auto dims = [](Rng& rng) {
    return std::pair<int, int>{2 + rng.uniform_int(7), 2 + rng.uniform_int(7)};
  };

  const std::vector<std::pair<const char*, CaseFn>> cases = {
      {"matmul",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         return weighted_sum(t,
                             t.matmul(t.input(kink_safe(n, d, rng), true),
                                      t.input(kink_safe(d, n, rng), true)),
                             rng);
       }},
      {"spmm",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         auto view = std::make_shared<SparseMatrix>(random_view(n, rng));
         return weighted_sum(t, t.spmm(view, t.input(kink_safe(n, d, rng), true)), rng);
       }},
      {"add",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         return weighted_sum(t,
                             t.add(t.input(kink_safe(n, d, rng), true),
                                   t.input(kink_safe(n, d, rng), true)),
                             rng);
       }},
      {"add_bias_row",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         return weighted_sum(t,
                             t.add_bias_row(t.input(kink_safe(n, d, rng), true),
                                            t.input(kink_safe(1, d, rng), true)),
                             rng);
       }},
      {"prelu",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         const NodeId slope = t.input(Matrix::Constant(1, 1, 0.1 + rng.uniform()), true);
         return weighted_sum(t, t.prelu(t.input(kink_safe(n, d, rng), true), slope), rng);
       }},
      {"sigmoid",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         return weighted_sum(t, t.sigmoid(t.input(kink_safe(n, d, rng), true)), rng);
       }},
      {"softplus",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         return weighted_sum(t, t.softplus(t.input(kink_safe(n, d, rng), true)), rng);
       }},
      {"log_sum_exp_rows",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         return weighted_sum(t, t.log_sum_exp_rows(t.input(kink_safe(n, d, rng), true)),
                             rng);
       }},
      {"concat_cols",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         const NodeId a = t.input(kink_safe(n, d, rng), true);
         const NodeId b = t.input(kink_safe(n, 2, rng), true);
         const NodeId c = t.input(kink_safe(n, 3, rng), true);
         return weighted_sum(t, t.concat_cols({a, b, c}), rng);
       }},
      {"sum_rows",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         return weighted_sum(t, t.sum_rows(t.input(kink_safe(n, d, rng), true)), rng);
       }},
      {"scale",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         return weighted_sum(
             t, t.scale(t.input(kink_safe(n, d, rng), true), -1.5 + 0.7 * rng.uniform()),
             rng);
       }},
      {"transpose",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         return weighted_sum(t, t.transpose(t.input(kink_safe(n, d, rng), true)), rng);
       }},
      {"row_gather",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         std::vector<int> idx(n + 1);
         for (size_t i = 0; i < idx.size(); ++i) idx[i] = rng.uniform_int(n);
         return weighted_sum(t, t.row_gather(t.input(kink_safe(n, d, rng), true), idx), rng);
       }},
      {"elementwise_mul",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         return weighted_sum(t,
                             t.elementwise_mul(t.input(kink_safe(n, d, rng), true),
                                               t.input(kink_safe(n, d, rng), true)),
                             rng);
       }},
      {"row_l2_normalize",
       [&](Tape& t, Rng& rng) {
         auto [n, d] = dims(rng);
         return weighted_sum(t, t.row_l2_normalize(t.input(kink_safe(n, d, rng), true)),
                             rng);
       }},
  };

  std::vector<OpGradReport> reports;
  reports.reserve(cases.size());
  for (const auto& [name, build] : cases) {
    OpGradReport report{name, 0.0};
    for (int trial = 0; trial < trials; ++trial) {
      Tape tape;
      Rng rng = Rng::derived(seed, {0x67636173u, static_cast<uint64_t>(trial),
                                    std::hash<std::string>{}(name)});
      const NodeId loss = build(tape, rng);
      report.max_rel_error = std::max(
          report.max_rel_error,
          tape.finite_difference_check(loss, eps, seed + static_cast<uint64_t>(trial), 4));
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace mvgrl::ad
