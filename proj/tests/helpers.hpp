#pragma once

#include "mvgrl/graph.hpp"
#include "mvgrl/rng.hpp"

#include <set>
#include <vector>

namespace mvgrl::test {

inline SparseMatrix from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  std::set<std::pair<int, int>> unique;
  for (auto [u, v] : edges) {
    if (u != v) unique.insert({std::min(u, v), std::max(u, v)});
  }
  std::vector<SparseMatrix::Triplet> t;
  for (auto [u, v] : unique) {
    t.emplace_back(u, v, 1.0);
    t.emplace_back(v, u, 1.0);
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

inline SparseMatrix path_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return from_edges(n, edges);
}

inline SparseMatrix cycle_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return from_edges(n, edges);
}

inline SparseMatrix complete_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  }
  return from_edges(n, edges);
}

inline SparseMatrix triangle_graph() { return complete_graph(3); }

/// Random connected graph: a random spanning tree plus extra random edges.
inline SparseMatrix random_connected_graph(int n, Rng& rng, double extra_edge_prob = 0.3) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) edges.emplace_back(v, rng.uniform_int(v));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.uniform() < extra_edge_prob) edges.emplace_back(i, j);
    }
  }
  return from_edges(n, edges);
}

inline AttributedGraph make_graph(SparseMatrix adjacency, int feature_dim, Rng& rng) {
  AttributedGraph g;
  const int n = adjacency.n_rows;
  g.adjacency = std::move(adjacency);
  g.features.resize(n, feature_dim);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < feature_dim; ++c) g.features(r, c) = rng.normal();
  }
  return g;
}

inline Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

}  // namespace mvgrl::test
