#pragma once

#include "mvgrl/graph.hpp"

#include <filesystem>

namespace mvgrl {

/// Loads a TU-style benchmark directory: DS_A.txt (1-indexed "i, j" edge
/// lines), DS_graph_indicator.txt, DS_graph_labels.txt, optionally
/// DS_node_labels.txt. The DS prefix is discovered from *_A.txt. Edges are
/// symmetrized and deduplicated, self-loops dropped, graph labels remapped to
/// contiguous 0-based ids, node labels (if present) likewise.
GraphCollection load_tu_dataset(const std::filesystem::path& dir);

/// Loads a transductive node-classification bundle: edges.tsv (0-indexed
/// "u<TAB>v"), features.csv, labels.csv, train.txt/val.txt/test.txt.
AttributedGraph load_node_bundle(const std::filesystem::path& dir);

/// FNV-1a content hash of every regular file in the dataset directory,
/// order-independent of directory iteration. Not cryptographic; used only to
/// fingerprint runs.
uint64_t fingerprint_directory(const std::filesystem::path& dir);

}  // namespace mvgrl
