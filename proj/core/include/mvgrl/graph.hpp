#pragma once

#include "mvgrl/common.hpp"
#include "mvgrl/sparse.hpp"

#include <optional>
#include <vector>

namespace mvgrl {

struct Split {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

/// An undirected graph with node features and optional labels/splits.
/// Adjacency is binary-valued, symmetric, with a zero diagonal at ingestion.
struct AttributedGraph {
  SparseMatrix adjacency;                         // n x n
  Matrix features;                                // n x d_x (d_x may be 0)
  std::optional<std::vector<int>> node_labels;    // length n
  std::optional<int> graph_label;
  std::optional<Split> split;

  int num_nodes() const { return adjacency.n_rows; }
  int num_edges() const { return adjacency.nnz() / 2; }

  /// Checks the type invariants; throws ValidationError.
  void validate() const;
};

struct GraphCollection {
  std::vector<AttributedGraph> graphs;
  int class_count = 0;

  void validate() const;
};

/// Symmetric normalization with self-loops: D^-1/2 (A + I) D^-1/2.
/// Requires a square, symmetric input with zero diagonal.
SparseMatrix normalize_adjacency(const SparseMatrix& a);

/// Node-induced subgraph. Kept nodes are re-indexed in sorted original
/// order; an edge survives iff both endpoints are kept. Feature and label
/// rows are selected identically; split ids are remapped and filtered.
AttributedGraph induced_subgraph(const AttributedGraph& g, std::vector<int> nodes);

}  // namespace mvgrl
