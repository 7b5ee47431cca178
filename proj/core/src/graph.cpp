#include "mvgrl/graph.hpp"

#include <algorithm>
#include <cmath>

namespace mvgrl {

void AttributedGraph::validate() const {
  adjacency.validate();
  check_arg(adjacency.n_rows == adjacency.n_cols, "graph: adjacency must be square");
  check_arg(adjacency.is_symmetric(), "graph: adjacency must be symmetric");
  check_arg(adjacency.has_zero_diagonal(), "graph: adjacency diagonal must be zero");
  check_arg(features.rows() == adjacency.n_rows,
            "graph: feature row count must equal node count");
  if (node_labels) {
    check_arg(static_cast<int>(node_labels->size()) == num_nodes(),
              "graph: node label count must equal node count");
  }
}

void GraphCollection::validate() const {
  for (const auto& g : graphs) {
    g.validate();
    check_arg(g.graph_label.has_value(), "collection: every graph needs a label");
    check_arg(*g.graph_label >= 0 && *g.graph_label < class_count,
              "collection: graph label outside [0, class_count)");
  }
}

SparseMatrix normalize_adjacency(const SparseMatrix& a) {
  check_arg(a.n_rows == a.n_cols, "normalize_adjacency: input must be square");
  check_arg(a.is_symmetric(), "normalize_adjacency: input must be symmetric");
  check_arg(a.has_zero_diagonal(), "normalize_adjacency: input diagonal must be zero");

  const int n = a.n_rows;
  // d_hat = degree of A + I; every node has at least its self-loop.
  Vector inv_sqrt(n);
  Vector row_sum = a.row_sums();
  for (int i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(row_sum[i] + 1.0);

  std::vector<SparseMatrix::Triplet> t;
  t.reserve(a.nnz() + n);
  for (int r = 0; r < n; ++r) {
    t.emplace_back(r, r, inv_sqrt[r] * inv_sqrt[r]);
    for (int k = a.row_begin(r); k < a.row_end(r); ++k) {
      const int c = a.col_indices[k];
      t.emplace_back(r, c, a.values[k] * inv_sqrt[r] * inv_sqrt[c]);
    }
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

AttributedGraph induced_subgraph(const AttributedGraph& g, std::vector<int> nodes) {
  check_arg(!nodes.empty(), "induced_subgraph: empty node set");
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  check_arg(nodes.front() >= 0 && nodes.back() < g.num_nodes(),
            "induced_subgraph: node index out of range");

  AttributedGraph s;
  s.adjacency = g.adjacency.submatrix(nodes);
  s.features.resize(nodes.size(), g.features.cols());
  for (size_t i = 0; i < nodes.size(); ++i) s.features.row(i) = g.features.row(nodes[i]);
  if (g.node_labels) {
    std::vector<int> labels(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) labels[i] = (*g.node_labels)[nodes[i]];
    s.node_labels = std::move(labels);
  }
  s.graph_label = g.graph_label;
  if (g.split) {
    std::vector<int> remap(g.num_nodes(), -1);
    for (size_t i = 0; i < nodes.size(); ++i) remap[nodes[i]] = static_cast<int>(i);
    auto select = [&](const std::vector<int>& ids) {
      std::vector<int> out;
      for (int id : ids) {
        if (remap[id] >= 0) out.push_back(remap[id]);
      }
      return out;
    };
    s.split = Split{select(g.split->train), select(g.split->val), select(g.split->test)};
  }
  return s;
}

}  // namespace mvgrl
