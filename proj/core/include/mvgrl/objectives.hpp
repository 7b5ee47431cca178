#pragma once

#include "mvgrl/model.hpp"

#include <utility>

namespace mvgrl {

enum class ContrastiveMode { kLocalGlobal, kGlobalGlobal, kEnsemble };
ContrastiveMode contrastive_mode_from_string(const std::string& s);
std::string to_string(ContrastiveMode);

enum class Estimator { kJsd, kNce, kNtxent, kDv };
Estimator estimator_from_string(const std::string& s);
std::string to_string(Estimator);

struct EstimatorKind {
  Estimator kind = Estimator::kJsd;
  Real temperature = 0.5;  // NT-Xent only

  void validate() const;
};

/// Pairwise agreement scores with a boolean positive mask. The in-batch
/// constructor produces a square matrix with the positives on the diagonal;
/// the corruption-negative path produces one positive column per node row.
struct ScoreMatrix {
  using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix scores;
  Mask pos_mask;
  /// Negatives default to the complement of pos_mask; an explicit mask lets
  /// entries be excluded from both sets.
  std::optional<Mask> neg_mask;

  static ScoreMatrix diagonal(Matrix scores);
  /// Column 0 holds positives, the rest negatives.
  static ScoreMatrix first_column_positive(Matrix scores);

  Mask negatives_mask() const;
  int positives() const;
  int negatives() const { return static_cast<int>(negatives_mask().count()); }
  void validate() const;
};

struct DiscriminatorParams {
  DiscriminatorMode mode = DiscriminatorMode::kDot;
  std::optional<Matrix> bilinear;
};

/// In-batch pairwise score matrices for a batch of graphs, one per view
/// direction (alpha against beta graph reps, and vice versa). Positives are
/// the diagonal. N = 1 is rejected: without corruption there are no
/// negatives.
std::pair<ScoreMatrix, ScoreMatrix> score_batch(
    const std::vector<Encoding>& enc_alpha, const std::vector<Encoding>& enc_beta,
    ContrastiveMode mode, const DiscriminatorParams& disc);

/// Random permutation of the feature rows; the row multiset is preserved
/// exactly.
Matrix corrupt_features(const Matrix& x, uint64_t seed);
Matrix corrupt_features(const Matrix& x, Rng& rng, std::vector<int>* permutation_out);

struct MiResult {
  Real loss = 0.0;
  Real mi_estimate = 0.0;
};

/// Loss and MI estimate of one score matrix under an estimator. NCE-family
/// estimators treat each row as a softmax group with exactly one positive.
MiResult mi_objective(const ScoreMatrix& s, const EstimatorKind& est);

/// Symmetric sum over the two view directions (average of the per-matrix
/// objectives); exactly symmetric under swapping alpha and beta.
MiResult mi_objective_pair(const ScoreMatrix& alpha, const ScoreMatrix& beta,
                           const EstimatorKind& est);

// --- Tape builders used by the trainer (and by gradient tests) ------------

struct ScoreBatchIds {
  ad::NodeId alpha = -1;  // N x N
  ad::NodeId beta = -1;
};

/// Builds the in-batch score matrices on a tape. When `normalize` is set
/// (NT-Xent), node and graph representations are L2-normalized row-wise and
/// the scores divided by the temperature.
ScoreBatchIds build_score_batch(ad::Tape& tape, const std::vector<EncodingIds>& enc_alpha,
                                const std::vector<EncodingIds>& enc_beta,
                                ContrastiveMode mode, ad::NodeId bilinear,
                                bool normalize, Real temperature);

/// Corruption-negative scores for one graph: column 0 scores the true node
/// representations against the graph representation, column 1 the corrupted
/// ones.
ad::NodeId build_corruption_scores(ad::Tape& tape, ad::NodeId h_nodes,
                                   ad::NodeId h_nodes_corrupted, ad::NodeId h_graph,
                                   ad::NodeId bilinear, bool normalize, Real temperature);

struct MiLossIds {
  ad::NodeId loss = -1;
  ad::NodeId mi_estimate = -1;
};

/// Estimator formulas over a score node with a constant positive mask;
/// shared by the in-batch and corruption paths.
MiLossIds build_mi_loss(ad::Tape& tape, ad::NodeId scores,
                        const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& pos_mask,
                        const EstimatorKind& est);

}  // namespace mvgrl
