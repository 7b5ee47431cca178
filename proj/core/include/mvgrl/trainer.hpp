#pragma once

#include "mvgrl/diffusion.hpp"
#include "mvgrl/features.hpp"
#include "mvgrl/objectives.hpp"

namespace mvgrl {

struct TrainConfig {
  // 1..3 specs allowed; training contrasts at least 2. Defaults to the
  // adjacency + PPR pairing.
  std::vector<ViewSpec> views = {ViewSpec{},
                                 ViewSpec{ViewKind::kPpr, {}, 0.0, std::nullopt}};
  ContrastiveMode mode = ContrastiveMode::kLocalGlobal;
  EstimatorKind estimator;
  int layers = 2;
  int epochs = 20;
  int batch_size = 2;
  Real lr = 0.001;
  int patience = 20;
  int hidden = 512;
  uint64_t seed = 1;
  int subsample_nodes = 2000;
  EncoderSharing encoder_sharing = EncoderSharing::kDedicated;
  DiscriminatorMode discriminator = DiscriminatorMode::kDot;
  Pooling pooling = Pooling::kSum;
  FeaturePolicy feature_policy = FeaturePolicy::kAuto;
  int max_degree = 400;
  int dense_cap = 20000;
  bool random_view_pairs = false;  // sample one view pair per step (shared encoder)
  bool strict_deterministic = false;
  int workers = 0;  // 0 = hardware concurrency; evaluation-side parallelism only

  /// Every problem found, not just the first.
  std::vector<std::string> validation_errors() const;
  void validate() const;
};

struct LossRow {
  int epoch = 0;
  Real loss = 0.0;
  Real mi_estimate = 0.0;
};

struct TrainResult {
  ModelParams params;  // best-loss checkpoint
  std::vector<LossRow> history;
  Matrix node_embeddings;   // n x d_h; for collections, all graphs stacked
  Matrix graph_embeddings;  // m x d_h; one row for transductive data
  int best_epoch = -1;
  bool diverged = false;
};

/// Loss improvement tracker; stops a fixed number of epochs after the best.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  /// Feed one epoch's loss; true means stop after this epoch.
  bool should_stop(int epoch, Real loss) {
    improved_ = loss < best_loss_;
    if (improved_) {
      best_loss_ = loss;
      best_epoch_ = epoch;
    }
    return epoch - best_epoch_ >= patience_;
  }
  bool improved() const { return improved_; }
  int best_epoch() const { return best_epoch_; }
  Real best_loss() const { return best_loss_; }

 private:
  int patience_;
  Real best_loss_ = std::numeric_limits<Real>::infinity();
  int best_epoch_ = 0;
  bool improved_ = false;
};

/// One structural view of a graph.
SparseMatrix make_view(const AttributedGraph& g, const ViewSpec& spec, int dense_cap = 20000);

/// Structural views of one graph, in spec order, computed once. Duplicate
/// specs produce a warning on stderr, not an error.
std::vector<std::shared_ptr<const SparseMatrix>> make_views(
    const AttributedGraph& g, const std::vector<ViewSpec>& specs, int dense_cap = 20000);

/// Multi-graph training with in-batch negatives.
TrainResult train(const GraphCollection& data, const TrainConfig& cfg);

/// Transductive training on sub-samples treated as independent graphs, with
/// feature-shuffle corruption supplying the negatives.
TrainResult train(const AttributedGraph& data, const TrainConfig& cfg);

/// View index pairs contrasted during training: (0,1) for two views; with a
/// third view the first acts as the anchor: (0,1) and (0,2).
std::vector<std::pair<int, int>> contrast_pairs(int n_views);

}  // namespace mvgrl
