#pragma once

#include "mvgrl/graph.hpp"

namespace mvgrl {

enum class FeaturePolicy {
  kAuto,             // features if present, else node labels, else degrees
  kStandardize,
  kNodeLabelsOnehot,
  kDegreesOnehot,
};

FeaturePolicy feature_policy_from_string(const std::string& s);
std::string to_string(FeaturePolicy p);

struct FeatureOptions {
  int max_degree = 400;      // degrees above the cap share the last bucket
  int label_vocab = 0;       // 0: derive from the graph itself
};

/// Per-column standard score. Constant columns come out all-zero.
Matrix standardize_features(const Matrix& x);

/// Resolved feature matrix for one graph under the given policy.
Matrix init_features(const AttributedGraph& g, FeaturePolicy policy,
                     const FeatureOptions& opts = {});

/// Applies the policy across a collection with vocabularies shared by all
/// graphs (label vocabulary and degree cap are global). Resolves kAuto using
/// the first graph's available data.
void init_collection_features(GraphCollection& collection, FeaturePolicy policy,
                              const FeatureOptions& opts = {});

}  // namespace mvgrl
