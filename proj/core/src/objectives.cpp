#include "mvgrl/objectives.hpp"

#include <cmath>

namespace mvgrl {

ContrastiveMode contrastive_mode_from_string(const std::string& s) {
  if (s == "local_global") return ContrastiveMode::kLocalGlobal;
  if (s == "global_global") return ContrastiveMode::kGlobalGlobal;
  if (s == "ensemble") return ContrastiveMode::kEnsemble;
  throw ValidationError("unknown contrastive mode: " + s);
}
std::string to_string(ContrastiveMode m) {
  switch (m) {
    case ContrastiveMode::kLocalGlobal: return "local_global";
    case ContrastiveMode::kGlobalGlobal: return "global_global";
    case ContrastiveMode::kEnsemble: return "ensemble";
  }
  return "?";
}

Estimator estimator_from_string(const std::string& s) {
  if (s == "jsd") return Estimator::kJsd;
  if (s == "nce") return Estimator::kNce;
  if (s == "ntxent") return Estimator::kNtxent;
  if (s == "dv") return Estimator::kDv;
  throw ValidationError("unknown estimator: " + s);
}
std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::kJsd: return "jsd";
    case Estimator::kNce: return "nce";
    case Estimator::kNtxent: return "ntxent";
    case Estimator::kDv: return "dv";
  }
  return "?";
}

void EstimatorKind::validate() const {
  check_arg(std::isfinite(temperature) && temperature > 0.0,
            "estimator: temperature must be finite and > 0");
}

ScoreMatrix ScoreMatrix::diagonal(Matrix scores) {
  check_arg(scores.rows() == scores.cols(), "score matrix: diagonal mask needs a square matrix");
  ScoreMatrix s;
  s.pos_mask.setConstant(scores.rows(), scores.cols(), false);
  s.pos_mask.diagonal().setConstant(true);
  s.scores = std::move(scores);
  return s;
}

ScoreMatrix ScoreMatrix::first_column_positive(Matrix scores) {
  check_arg(scores.cols() >= 2, "score matrix: need at least one negative column");
  ScoreMatrix s;
  s.pos_mask.setConstant(scores.rows(), scores.cols(), false);
  s.pos_mask.col(0).setConstant(true);
  s.scores = std::move(scores);
  return s;
}

ScoreMatrix::Mask ScoreMatrix::negatives_mask() const {
  if (neg_mask) return *neg_mask;
  return !pos_mask.array();
}

int ScoreMatrix::positives() const { return static_cast<int>(pos_mask.count()); }

void ScoreMatrix::validate() const {
  check_arg(scores.rows() == pos_mask.rows() && scores.cols() == pos_mask.cols(),
            "score matrix: mask shape mismatch");
  if (neg_mask) {
    check_arg(neg_mask->rows() == pos_mask.rows() && neg_mask->cols() == pos_mask.cols(),
              "score matrix: negative mask shape mismatch");
    check_arg(!(pos_mask.array() && neg_mask->array()).any(),
              "score matrix: an entry cannot be both positive and negative");
  }
  check_arg(positives() >= 1, "score matrix: no positive entries");
  check_arg(negatives() >= 1, "score matrix: no negative entries");
  check_arg(scores.allFinite(), "score matrix: non-finite score");
}

// ---------------------------------------------------------------------------
// Plain (value-level) scoring. The trainer uses the tape builders below; the
// two routes are cross-checked in tests.
// ---------------------------------------------------------------------------

namespace {

Real disc_value(const RowVector& a, const RowVector& b, const DiscriminatorParams& d) {
  return discriminate(a, b, d.mode, d.bilinear);
}

// mean over nodes u of D(H_i[u], h_gj)
Real node_graph_score(const Matrix& h_nodes, const RowVector& h_graph,
                      const DiscriminatorParams& d) {
  Real sum = 0.0;
  for (int u = 0; u < h_nodes.rows(); ++u) sum += disc_value(h_nodes.row(u), h_graph, d);
  return sum / static_cast<Real>(h_nodes.rows());
}

Matrix local_global_scores(const std::vector<Encoding>& nodes_side,
                           const std::vector<Encoding>& graph_side,
                           const DiscriminatorParams& d) {
  const int n = static_cast<int>(nodes_side.size());
  Matrix s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      s(i, j) = node_graph_score(nodes_side[i].h_nodes, graph_side[j].h_graph.row(0), d);
    }
  }
  return s;
}

}  // namespace

std::pair<ScoreMatrix, ScoreMatrix> score_batch(const std::vector<Encoding>& enc_alpha,
                                                const std::vector<Encoding>& enc_beta,
                                                ContrastiveMode mode,
                                                const DiscriminatorParams& disc) {
  check_arg(enc_alpha.size() == enc_beta.size(), "score_batch: view batch sizes differ");
  const int n = static_cast<int>(enc_alpha.size());
  check_arg(n >= 2,
            "score_batch: batch size 1 has no in-batch negatives; use feature-shuffle "
            "corruption instead");

  switch (mode) {
    case ContrastiveMode::kLocalGlobal: {
      return {ScoreMatrix::diagonal(local_global_scores(enc_alpha, enc_beta, disc)),
              ScoreMatrix::diagonal(local_global_scores(enc_beta, enc_alpha, disc))};
    }
    case ContrastiveMode::kGlobalGlobal: {
      Matrix sa(n, n), sb(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          sa(i, j) = disc_value(enc_alpha[i].h_graph.row(0), enc_beta[j].h_graph.row(0), disc);
          sb(i, j) = disc_value(enc_beta[i].h_graph.row(0), enc_alpha[j].h_graph.row(0), disc);
        }
      }
      return {ScoreMatrix::diagonal(std::move(sa)), ScoreMatrix::diagonal(std::move(sb))};
    }
    case ContrastiveMode::kEnsemble: {
      // Within-view node-to-graph contrast, summed over the views; both
      // directions share the same matrix.
      Matrix s = local_global_scores(enc_alpha, enc_alpha, disc) +
                 local_global_scores(enc_beta, enc_beta, disc);
      return {ScoreMatrix::diagonal(s), ScoreMatrix::diagonal(std::move(s))};
    }
  }
  throw ValidationError("score_batch: unknown mode");
}

Matrix corrupt_features(const Matrix& x, uint64_t seed) {
  Rng rng = Rng::derived(seed, {0x636f7272u});
  return corrupt_features(x, rng, nullptr);
}

Matrix corrupt_features(const Matrix& x, Rng& rng, std::vector<int>* permutation_out) {
  check_arg(x.rows() >= 2, "corrupt_features: need at least two rows to shuffle");
  const std::vector<int> perm = rng.permutation(static_cast<int>(x.rows()));
  Matrix out(x.rows(), x.cols());
  for (int r = 0; r < x.rows(); ++r) out.row(r) = x.row(perm[r]);
  if (permutation_out) *permutation_out = perm;
  return out;
}

// ---------------------------------------------------------------------------
// Estimators. The value-level route evaluates the same formulas the tape
// builders emit.
// ---------------------------------------------------------------------------

namespace {

Real softplus(Real x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

void require_one_positive_per_row(const ScoreMatrix& s, const char* est) {
  for (int r = 0; r < s.pos_mask.rows(); ++r) {
    int count = 0;
    for (int c = 0; c < s.pos_mask.cols(); ++c) count += s.pos_mask(r, c);
    check_arg(count == 1, std::string(est) + ": every row needs exactly one positive");
  }
}

}  // namespace

MiResult mi_objective(const ScoreMatrix& s, const EstimatorKind& est) {
  est.validate();
  s.validate();
  const auto& pos_mask = s.pos_mask;
  const ScoreMatrix::Mask neg_mask = s.negatives_mask();
  const Matrix& sc = s.scores;
  const Real n_pos = static_cast<Real>(s.positives());
  const Real n_neg = static_cast<Real>(s.negatives());

  switch (est.kind) {
    case Estimator::kJsd: {
      Real pos = 0.0, neg = 0.0;
      for (int r = 0; r < sc.rows(); ++r) {
        for (int c = 0; c < sc.cols(); ++c) {
          if (pos_mask(r, c)) pos += -softplus(-sc(r, c));
          if (neg_mask(r, c)) neg += softplus(sc(r, c));
        }
      }
      const Real mi = pos / n_pos - neg / n_neg;
      return {-mi, mi};
    }
    case Estimator::kNce:
    case Estimator::kNtxent: {
      // NT-Xent expects scores already computed on normalized embeddings and
      // divided by the temperature; the InfoNCE form is shared. Every row is
      // one softmax group.
      require_one_positive_per_row(s, est.kind == Estimator::kNce ? "nce" : "ntxent");
      Real loss = 0.0;
      for (int r = 0; r < sc.rows(); ++r) {
        const Real m = sc.row(r).maxCoeff();
        const Real lse = m + std::log((sc.row(r).array() - m).exp().sum());
        for (int c = 0; c < sc.cols(); ++c) {
          if (pos_mask(r, c)) loss += lse - sc(r, c);
        }
      }
      loss /= static_cast<Real>(sc.rows());
      return {loss, std::log(static_cast<Real>(sc.cols())) - loss};
    }
    case Estimator::kDv: {
      Real pos = 0.0;
      Real max_neg = -std::numeric_limits<Real>::infinity();
      for (int r = 0; r < sc.rows(); ++r) {
        for (int c = 0; c < sc.cols(); ++c) {
          if (pos_mask(r, c)) pos += sc(r, c);
          if (neg_mask(r, c)) max_neg = std::max(max_neg, sc(r, c));
        }
      }
      Real sum_exp = 0.0;
      for (int r = 0; r < sc.rows(); ++r) {
        for (int c = 0; c < sc.cols(); ++c) {
          if (neg_mask(r, c)) sum_exp += std::exp(sc(r, c) - max_neg);
        }
      }
      const Real log_mean_exp = max_neg + std::log(sum_exp) - std::log(n_neg);
      const Real mi = pos / n_pos - log_mean_exp;
      return {-mi, mi};
    }
  }
  throw ValidationError("mi_objective: unknown estimator");
}

MiResult mi_objective_pair(const ScoreMatrix& alpha, const ScoreMatrix& beta,
                           const EstimatorKind& est) {
  const MiResult a = mi_objective(alpha, est);
  const MiResult b = mi_objective(beta, est);
  return {(a.loss + b.loss) / 2.0, (a.mi_estimate + b.mi_estimate) / 2.0};
}

// ---------------------------------------------------------------------------
// Tape builders.
// ---------------------------------------------------------------------------

namespace {

using ad::NodeId;
using ad::Tape;

NodeId total_sum(Tape& tape, NodeId x) {
  return tape.sum_rows(tape.transpose(tape.sum_rows(x)));
}

// Stack 1 x d graph representations into a d x N matrix node.
NodeId stack_graph_reps_transposed(Tape& tape, const std::vector<EncodingIds>& encs,
                                   bool normalize) {
  std::vector<NodeId> cols;
  cols.reserve(encs.size());
  for (const auto& e : encs) {
    NodeId h = e.h_graph;
    if (normalize) h = tape.row_l2_normalize(h);
    cols.push_back(tape.transpose(h));
  }
  return tape.concat_cols(std::move(cols));
}

// One row of the local-global score matrix: mean node-vs-graph agreement of
// graph i against every graph rep, optionally through the bilinear matrix.
NodeId score_row(Tape& tape, NodeId h_nodes, int num_nodes, NodeId graph_reps_t,
                 NodeId bilinear) {
  NodeId lhs = h_nodes;
  if (bilinear >= 0) lhs = tape.matmul(lhs, bilinear);
  return tape.scale(tape.sum_rows(tape.matmul(lhs, graph_reps_t)),
                    1.0 / static_cast<Real>(num_nodes));
}

NodeId assemble_rows(Tape& tape, std::vector<NodeId> rows) {
  std::vector<NodeId> cols;
  cols.reserve(rows.size());
  for (NodeId r : rows) cols.push_back(tape.transpose(r));
  return tape.transpose(tape.concat_cols(std::move(cols)));
}

NodeId local_global_matrix(Tape& tape, const std::vector<EncodingIds>& nodes_side,
                           const std::vector<EncodingIds>& graph_side, NodeId bilinear,
                           bool normalize) {
  const NodeId reps_t = stack_graph_reps_transposed(tape, graph_side, normalize);
  std::vector<NodeId> rows;
  rows.reserve(nodes_side.size());
  for (const auto& e : nodes_side) {
    NodeId h = e.h_nodes;
    if (normalize) h = tape.row_l2_normalize(h);
    rows.push_back(score_row(tape, h, e.num_nodes, reps_t, bilinear));
  }
  return assemble_rows(tape, std::move(rows));
}

}  // namespace

ScoreBatchIds build_score_batch(Tape& tape, const std::vector<EncodingIds>& enc_alpha,
                                const std::vector<EncodingIds>& enc_beta,
                                ContrastiveMode mode, NodeId bilinear, bool normalize,
                                Real temperature) {
  check_arg(enc_alpha.size() == enc_beta.size() && enc_alpha.size() >= 2,
            "build_score_batch: need matching batches of size >= 2");
  ScoreBatchIds out;
  switch (mode) {
    case ContrastiveMode::kLocalGlobal:
      out.alpha = local_global_matrix(tape, enc_alpha, enc_beta, bilinear, normalize);
      out.beta = local_global_matrix(tape, enc_beta, enc_alpha, bilinear, normalize);
      break;
    case ContrastiveMode::kGlobalGlobal: {
      const NodeId ga_t = stack_graph_reps_transposed(tape, enc_alpha, normalize);
      const NodeId gb_t = stack_graph_reps_transposed(tape, enc_beta, normalize);
      NodeId lhs_a = tape.transpose(ga_t);
      NodeId lhs_b = tape.transpose(gb_t);
      if (bilinear >= 0) {
        lhs_a = tape.matmul(lhs_a, bilinear);
        lhs_b = tape.matmul(lhs_b, bilinear);
      }
      out.alpha = tape.matmul(lhs_a, gb_t);
      out.beta = tape.matmul(lhs_b, ga_t);
      break;
    }
    case ContrastiveMode::kEnsemble: {
      const NodeId within_alpha =
          local_global_matrix(tape, enc_alpha, enc_alpha, bilinear, normalize);
      const NodeId within_beta =
          local_global_matrix(tape, enc_beta, enc_beta, bilinear, normalize);
      out.alpha = tape.add(within_alpha, within_beta);
      out.beta = out.alpha;
      break;
    }
  }
  if (normalize) {
    const NodeId unscaled_alpha = out.alpha;
    out.alpha = tape.scale(out.alpha, 1.0 / temperature);
    out.beta = out.beta == unscaled_alpha ? out.alpha
                                          : tape.scale(out.beta, 1.0 / temperature);
  }
  return out;
}

NodeId build_corruption_scores(Tape& tape, NodeId h_nodes, NodeId h_nodes_corrupted,
                               NodeId h_graph, NodeId bilinear, bool normalize,
                               Real temperature) {
  NodeId pos = h_nodes, neg = h_nodes_corrupted, g = h_graph;
  if (normalize) {
    pos = tape.row_l2_normalize(pos);
    neg = tape.row_l2_normalize(neg);
    g = tape.row_l2_normalize(g);
  }
  NodeId g_t = tape.transpose(g);               // d x 1
  if (bilinear >= 0) g_t = tape.matmul(bilinear, g_t);
  const NodeId pos_col = tape.matmul(pos, g_t);  // n x 1
  const NodeId neg_col = tape.matmul(neg, g_t);
  NodeId scores = tape.concat_cols({pos_col, neg_col});
  if (normalize) scores = tape.scale(scores, 1.0 / temperature);
  return scores;
}

MiLossIds build_mi_loss(Tape& tape, NodeId scores,
                        const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& pos_mask,
                        const EstimatorKind& est) {
  est.validate();
  const int rows = tape.rows(scores);
  const int cols = tape.cols(scores);
  check_arg(pos_mask.rows() == rows && pos_mask.cols() == cols,
            "build_mi_loss: mask shape mismatch");
  const Real n_pos = static_cast<Real>(pos_mask.count());
  const Real n_neg = static_cast<Real>(rows) * cols - n_pos;
  check_arg(n_pos >= 1 && n_neg >= 1, "build_mi_loss: need positives and negatives");

  const Matrix pos_m = pos_mask.cast<Real>();
  const Matrix neg_m = Matrix::Ones(rows, cols) - pos_m;
  const NodeId pos_const = tape.constant(pos_m);
  const NodeId neg_const = tape.constant(neg_m);

  MiLossIds out;
  switch (est.kind) {
    case Estimator::kJsd: {
      const NodeId e_pos = tape.scale(
          total_sum(tape, tape.elementwise_mul(tape.softplus(tape.scale(scores, -1.0)),
                                               pos_const)),
          -1.0 / n_pos);
      const NodeId e_neg = tape.scale(
          total_sum(tape, tape.elementwise_mul(tape.softplus(scores), neg_const)),
          1.0 / n_neg);
      out.mi_estimate = tape.add(e_pos, tape.scale(e_neg, -1.0));
      out.loss = tape.scale(out.mi_estimate, -1.0);
      break;
    }
    case Estimator::kNce:
    case Estimator::kNtxent: {
      for (int r = 0; r < rows; ++r) {
        int count = 0;
        for (int c = 0; c < cols; ++c) count += pos_mask(r, c);
        check_arg(count == 1, "build_mi_loss: InfoNCE needs one positive per row");
      }
      const NodeId lse = tape.log_sum_exp_rows(scores);
      const NodeId sum_pos = total_sum(tape, tape.elementwise_mul(scores, pos_const));
      out.loss = tape.scale(
          tape.add(total_sum(tape, lse), tape.scale(sum_pos, -1.0)),
          1.0 / static_cast<Real>(rows));
      Matrix log_n(1, 1);
      log_n(0, 0) = std::log(static_cast<Real>(cols));
      out.mi_estimate = tape.add(tape.constant(log_n), tape.scale(out.loss, -1.0));
      break;
    }
    case Estimator::kDv: {
      const NodeId e_pos = tape.scale(
          total_sum(tape, tape.elementwise_mul(scores, pos_const)), 1.0 / n_pos);
      // Mask the positives out of the log-sum-exp by pushing them to -1e4;
      // exp underflows to exactly zero there.
      const NodeId masked = tape.add(scores, tape.constant((-1e4 * pos_m).eval()));
      const NodeId lse_rows = tape.log_sum_exp_rows(masked);       // R x 1
      const NodeId lse_all = tape.log_sum_exp_rows(tape.transpose(lse_rows));  // 1 x 1
      Matrix log_count(1, 1);
      log_count(0, 0) = -std::log(n_neg);
      const NodeId log_mean_exp = tape.add(lse_all, tape.constant(log_count));
      out.mi_estimate = tape.add(e_pos, tape.scale(log_mean_exp, -1.0));
      out.loss = tape.scale(out.mi_estimate, -1.0);
      break;
    }
  }
  return out;
}

}  // namespace mvgrl
