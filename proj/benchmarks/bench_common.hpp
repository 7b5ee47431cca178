#pragma once

#include "mvgrl/graph.hpp"
#include "mvgrl/rng.hpp"

#include <set>

namespace mvgrl::bench {

inline SparseMatrix random_graph(int n, double edge_prob, uint64_t seed) {
  Rng rng(seed);
  std::set<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) edges.insert({rng.uniform_int(v), v});
  const int extra = static_cast<int>(edge_prob * n * (n - 1) / 2);
  for (int e = 0; e < extra; ++e) {
    const int i = rng.uniform_int(n);
    const int j = rng.uniform_int(n);
    if (i != j) edges.insert({std::min(i, j), std::max(i, j)});
  }
  std::vector<SparseMatrix::Triplet> t;
  for (auto [u, v] : edges) {
    t.emplace_back(u, v, 1.0);
    t.emplace_back(v, u, 1.0);
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

inline Matrix random_matrix(int rows, int cols, uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

}  // namespace mvgrl::bench
