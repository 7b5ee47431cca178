#include "mvgrl/features.hpp"

#include <algorithm>
#include <cmath>

namespace mvgrl {

FeaturePolicy feature_policy_from_string(const std::string& s) {
  if (s == "auto") return FeaturePolicy::kAuto;
  if (s == "standardize") return FeaturePolicy::kStandardize;
  if (s == "node_labels_onehot") return FeaturePolicy::kNodeLabelsOnehot;
  if (s == "degrees_onehot") return FeaturePolicy::kDegreesOnehot;
  throw ValidationError("unknown feature policy: " + s);
}

std::string to_string(FeaturePolicy p) {
  switch (p) {
    case FeaturePolicy::kAuto: return "auto";
    case FeaturePolicy::kStandardize: return "standardize";
    case FeaturePolicy::kNodeLabelsOnehot: return "node_labels_onehot";
    case FeaturePolicy::kDegreesOnehot: return "degrees_onehot";
  }
  return "?";
}

Matrix standardize_features(const Matrix& x) {
  Matrix out = x;
  const auto n = static_cast<Real>(x.rows());
  for (int c = 0; c < x.cols(); ++c) {
    const Real mean = x.col(c).mean();
    const Real var = (x.col(c).array() - mean).square().sum() / n;
    const Real sd = std::sqrt(var);
    if (sd == 0.0) {
      out.col(c).setZero();
    } else {
      out.col(c) = (x.col(c).array() - mean) / sd;
    }
  }
  return out;
}

namespace {

Matrix labels_onehot(const std::vector<int>& labels, int vocab) {
  if (vocab == 0) {
    for (int l : labels) vocab = std::max(vocab, l + 1);
  }
  Matrix out = Matrix::Zero(labels.size(), vocab);
  for (size_t i = 0; i < labels.size(); ++i) {
    check_arg(labels[i] >= 0 && labels[i] < vocab,
              "init_features: node label outside the vocabulary");
    out(static_cast<int>(i), labels[i]) = 1.0;
  }
  return out;
}

Matrix degrees_onehot(const SparseMatrix& adjacency, int max_degree) {
  check_arg(max_degree >= 0, "init_features: max_degree must be >= 0");
  const auto deg = adjacency.degrees();
  Matrix out = Matrix::Zero(deg.size(), max_degree + 1);
  for (size_t i = 0; i < deg.size(); ++i) {
    out(static_cast<int>(i), std::min(deg[i], max_degree)) = 1.0;
  }
  return out;
}

FeaturePolicy resolve_auto(const AttributedGraph& g) {
  if (g.features.cols() > 0) return FeaturePolicy::kStandardize;
  if (g.node_labels) return FeaturePolicy::kNodeLabelsOnehot;
  return FeaturePolicy::kDegreesOnehot;
}

}  // namespace

Matrix init_features(const AttributedGraph& g, FeaturePolicy policy,
                     const FeatureOptions& opts) {
  if (policy == FeaturePolicy::kAuto) policy = resolve_auto(g);
  switch (policy) {
    case FeaturePolicy::kStandardize:
      check_arg(g.features.cols() > 0, "init_features: requested features are absent");
      return standardize_features(g.features);
    case FeaturePolicy::kNodeLabelsOnehot:
      check_arg(g.node_labels.has_value(), "init_features: requested node labels are absent");
      return labels_onehot(*g.node_labels, opts.label_vocab);
    case FeaturePolicy::kDegreesOnehot:
      return degrees_onehot(g.adjacency, opts.max_degree);
    case FeaturePolicy::kAuto: break;
  }
  throw ValidationError("init_features: unresolved policy");
}

void init_collection_features(GraphCollection& collection, FeaturePolicy policy,
                              const FeatureOptions& opts) {
  check_arg(!collection.graphs.empty(), "init_collection_features: empty collection");
  if (policy == FeaturePolicy::kAuto) policy = resolve_auto(collection.graphs.front());

  FeatureOptions global = opts;
  if (policy == FeaturePolicy::kNodeLabelsOnehot && global.label_vocab == 0) {
    for (const auto& g : collection.graphs) {
      check_arg(g.node_labels.has_value(),
                "init_collection_features: node labels missing on some graph");
      for (int l : *g.node_labels) global.label_vocab = std::max(global.label_vocab, l + 1);
    }
  }
  for (auto& g : collection.graphs) g.features = init_features(g, policy, global);
}

}  // namespace mvgrl
