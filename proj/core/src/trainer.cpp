#include "mvgrl/trainer.hpp"

#include "mvgrl/adam.hpp"

#include <cmath>
#include <iostream>

namespace mvgrl {

namespace {

constexpr uint64_t kTagInit = 0x696e6974u;
constexpr uint64_t kTagEpoch = 0x65706f63u;
constexpr uint64_t kTagSample = 0x73616d70u;
constexpr uint64_t kTagCorrupt = 0x636f7272u;
constexpr uint64_t kTagPairs = 0x70616972u;

}  // namespace

std::vector<std::string> TrainConfig::validation_errors() const {
  std::vector<std::string> errors;
  auto require = [&errors](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  require(views.size() >= 1 && views.size() <= 3, "views: between 1 and 3 view specs required");
  require(views.size() >= 2, "views: training contrasts at least 2 views");
  for (const auto& v : views) {
    try {
      v.validate();
    } catch (const std::exception& e) {
      errors.push_back(e.what());
    }
  }
  try {
    estimator.validate();
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  require(layers >= 1, "layers: must be >= 1");
  require(epochs >= 1, "epochs: must be >= 1");
  require(batch_size >= 1, "batch_size: must be >= 1");
  require(lr > 0.0 && std::isfinite(lr), "lr: must be positive and finite");
  require(patience >= 1, "patience: must be >= 1");
  require(hidden >= 1, "hidden: must be >= 1");
  require(subsample_nodes >= 2, "subsample_nodes: must be >= 2");
  require(max_degree >= 0, "max_degree: must be >= 0");
  require(dense_cap >= 1, "dense_cap: must be >= 1");
  require(workers >= 0, "workers: must be >= 0");
  if (random_view_pairs) {
    require(encoder_sharing == EncoderSharing::kShared,
            "random_view_pairs: requires the shared encoder");
  }
  return errors;
}

void TrainConfig::validate() const {
  const auto errors = validation_errors();
  if (errors.empty()) return;
  std::string joined = "invalid training config:";
  for (const auto& e : errors) joined += "\n  - " + e;
  throw ValidationError(joined);
}

std::vector<std::pair<int, int>> contrast_pairs(int n_views) {
  check_arg(n_views >= 2 && n_views <= 3, "contrast_pairs: need 2 or 3 views");
  if (n_views == 2) return {{0, 1}};
  return {{0, 1}, {0, 2}};
}

SparseMatrix make_view(const AttributedGraph& g, const ViewSpec& spec, int dense_cap) {
  spec.validate();
  switch (spec.view) {
    case ViewKind::kAdjacency:
      return normalize_adjacency(g.adjacency);
    case ViewKind::kPpr:
      return sparsify(
          ppr_diffusion(patch_isolated_nodes(g.adjacency), spec.coefficients.alpha, dense_cap),
          spec);
    case ViewKind::kHeat:
      return sparsify(
          heat_diffusion(patch_isolated_nodes(g.adjacency), spec.coefficients.t, dense_cap),
          spec);
    case ViewKind::kDistance:
      return sparsify(distance_view(g.adjacency), spec);
  }
  throw ValidationError("make_view: unknown view kind");
}

std::vector<std::shared_ptr<const SparseMatrix>> make_views(
    const AttributedGraph& g, const std::vector<ViewSpec>& specs, int dense_cap) {
  check_arg(specs.size() >= 2 && specs.size() <= 3, "make_views: need 2 or 3 view specs");
  for (size_t i = 0; i < specs.size(); ++i) {
    for (size_t j = i + 1; j < specs.size(); ++j) {
      const auto& a = specs[i];
      const auto& b = specs[j];
      if (a.view == b.view && a.coefficients.alpha == b.coefficients.alpha &&
          a.coefficients.t == b.coefficients.t &&
          a.sparsify_epsilon == b.sparsify_epsilon && a.sparsify_topk == b.sparsify_topk) {
        std::cerr << "warning: views " << i << " and " << j << " are identical ("
                  << to_string(a.view) << ")\n";
      }
    }
  }

  std::vector<std::shared_ptr<const SparseMatrix>> views;
  views.reserve(specs.size());
  for (const auto& spec : specs) {
    views.push_back(std::make_shared<SparseMatrix>(make_view(g, spec, dense_cap)));
  }
  return views;
}

namespace {

struct Optimizer {
  std::vector<Matrix*> params;
  std::vector<std::string> names;
  AdamState state;

  explicit Optimizer(ModelParams& p) {
    for_each_param(p, [this](Matrix& m, const std::string& name) {
      params.push_back(&m);
      names.push_back(name);
    });
    state = AdamState::like(params);
  }

  void step(const ad::Tape& tape, const ParamIds& ids, Real lr) {
    check_run(ids.flat.size() == params.size(), "trainer: parameter registration drift");
    std::vector<const Matrix*> grads;
    grads.reserve(ids.flat.size());
    for (ad::NodeId id : ids.flat) grads.push_back(&tape.grad(id));
    adam_step(params, grads, names, state, lr);
  }
};

ad::NodeId mean_of(ad::Tape& tape, const std::vector<ad::NodeId>& terms) {
  check_arg(!terms.empty(), "trainer: no loss terms");
  ad::NodeId acc = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) acc = tape.add(acc, terms[i]);
  return terms.size() == 1 ? acc : tape.scale(acc, 1.0 / static_cast<Real>(terms.size()));
}

std::vector<std::pair<int, int>> step_pairs(const TrainConfig& cfg, Rng& rng) {
  if (!cfg.random_view_pairs) return contrast_pairs(static_cast<int>(cfg.views.size()));
  const int n = static_cast<int>(cfg.views.size());
  const int a = rng.uniform_int(n);
  int b = rng.uniform_int(n - 1);
  if (b >= a) ++b;
  return {{a, b}};
}

struct StepOutcome {
  Real loss = 0.0;
  Real mi = 0.0;
  bool finite = true;
};

Real scalar_of(const Matrix& m) { return m(0, 0); }

// Shared tail of a training step: evaluate, check for divergence, backprop,
// update.
StepOutcome run_step(ad::Tape& tape, const ParamIds& ids, ad::NodeId loss,
                     ad::NodeId mi, Optimizer& opt, Real lr) {
  tape.forward();
  StepOutcome out;
  out.loss = scalar_of(tape.value(loss));
  out.mi = scalar_of(tape.value(mi));
  if (!std::isfinite(out.loss)) {
    out.finite = false;
    return out;
  }
  tape.backward(loss);
  opt.step(tape, ids, lr);
  return out;
}

using ViewList = std::vector<std::shared_ptr<const SparseMatrix>>;

}  // namespace

TrainResult train(const GraphCollection& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  check_arg(!data.graphs.empty(), "train: empty collection");
  check_arg(cfg.mode != ContrastiveMode::kGlobalGlobal || cfg.batch_size >= 2,
            "train: global_global needs batch_size >= 2");

  GraphCollection prepared = data;
  init_collection_features(prepared, cfg.feature_policy, FeatureOptions{cfg.max_degree, 0});
  const int n_graphs = static_cast<int>(prepared.graphs.size());
  const int d_x = static_cast<int>(prepared.graphs.front().features.cols());
  const int n_views = static_cast<int>(cfg.views.size());

  // Views are computed once, before any training step.
  std::vector<ViewList> views(n_graphs);
  for (int i = 0; i < n_graphs; ++i) {
    views[i] = make_views(prepared.graphs[i], cfg.views, cfg.dense_cap);
  }

  ModelParams params = ModelParams::init(n_views, cfg.layers, d_x, cfg.hidden,
                                         cfg.encoder_sharing, cfg.discriminator,
                                         Rng::derived(cfg.seed, {kTagInit}).next_u64());
  Optimizer opt(params);
  EarlyStopper stopper(cfg.patience);
  const bool normalize = cfg.estimator.kind == Estimator::kNtxent;

  TrainResult result;
  ModelParams best = params;
  bool warned_singleton = false;

  std::vector<int> order(n_graphs);
  for (int i = 0; i < n_graphs; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng epoch_rng = Rng::derived(cfg.seed, {kTagEpoch, static_cast<uint64_t>(epoch)});
    epoch_rng.shuffle(order);
    Rng pair_rng = Rng::derived(cfg.seed, {kTagPairs, static_cast<uint64_t>(epoch)});

    Real epoch_loss = 0.0, epoch_mi = 0.0;
    int steps = 0;
    for (int start = 0; start < n_graphs; start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, n_graphs - start);
      if (count == 1) {
        if (!warned_singleton) {
          std::cerr << "warning: dropping a trailing batch of one graph "
                       "(in-batch contrast needs >= 2)\n";
          warned_singleton = true;
        }
        continue;
      }
      ad::Tape tape;
      const ParamIds ids = register_params(tape, params);
      std::vector<std::vector<EncodingIds>> enc(n_views);
      for (int k = 0; k < count; ++k) {
        const int gi = order[start + k];
        const ad::NodeId x = tape.constant(prepared.graphs[gi].features);
        for (int v = 0; v < n_views; ++v) {
          enc[v].push_back(build_encoding(tape, ids, params.encoder_for_view(v), x,
                                          views[gi][v], cfg.pooling));
        }
      }
      std::vector<ad::NodeId> losses, mis;
      for (const auto& [a, b] : step_pairs(cfg, pair_rng)) {
        const ScoreBatchIds scores =
            build_score_batch(tape, enc[a], enc[b], cfg.mode, ids.bilinear, normalize,
                              cfg.estimator.temperature);
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(count, count);
        mask.setConstant(false);
        mask.diagonal().setConstant(true);
        const MiLossIds la = build_mi_loss(tape, scores.alpha, mask, cfg.estimator);
        const MiLossIds lb = build_mi_loss(tape, scores.beta, mask, cfg.estimator);
        losses.push_back(tape.scale(tape.add(la.loss, lb.loss), 0.5));
        mis.push_back(tape.scale(tape.add(la.mi_estimate, lb.mi_estimate), 0.5));
      }
      const ad::NodeId loss = mean_of(tape, losses);
      const ad::NodeId mi = mean_of(tape, mis);
      const StepOutcome outcome = run_step(tape, ids, loss, mi, opt, cfg.lr);
      if (!outcome.finite) {
        result.diverged = true;
        break;
      }
      epoch_loss += outcome.loss;
      epoch_mi += outcome.mi;
      ++steps;
    }
    if (result.diverged || steps == 0) break;
    epoch_loss /= steps;
    epoch_mi /= steps;
    result.history.push_back({epoch, epoch_loss, epoch_mi});
    const bool stop = stopper.should_stop(epoch, epoch_loss);
    if (stopper.improved()) best = params;
    if (stop) break;
  }

  result.params = std::move(best);
  result.best_epoch = stopper.best_epoch();

  // Inference with the best checkpoint: summed projected representations.
  const int d_h = cfg.hidden;
  int total_nodes = 0;
  for (const auto& g : prepared.graphs) total_nodes += g.num_nodes();
  result.node_embeddings.resize(total_nodes, d_h);
  result.graph_embeddings.resize(n_graphs, d_h);
  int node_row = 0;
  for (int i = 0; i < n_graphs; ++i) {
    std::vector<Encoding> encs;
    for (int v = 0; v < n_views; ++v) {
      encs.push_back(encode(prepared.graphs[i], *views[i][v], result.params,
                            result.params.encoder_for_view(v), cfg.pooling));
    }
    const Embeddings emb = infer_embeddings(encs);
    result.node_embeddings.middleRows(node_row, emb.nodes.rows()) = emb.nodes;
    result.graph_embeddings.row(i) = emb.graph;
    node_row += static_cast<int>(emb.nodes.rows());
  }
  return result;
}

TrainResult train(const AttributedGraph& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  check_arg(cfg.mode != ContrastiveMode::kGlobalGlobal,
            "train: global_global contrast is undefined for transductive data "
            "(no second graph); use local_global or ensemble");

  AttributedGraph g = data;
  g.features = init_features(data, cfg.feature_policy, FeatureOptions{cfg.max_degree, 0});
  const int n = g.num_nodes();
  const int d_x = static_cast<int>(g.features.cols());
  const int n_views = static_cast<int>(cfg.views.size());
  const int sub = std::min(cfg.subsample_nodes, n);
  const int subs_per_epoch = (n + sub - 1) / sub;

  const ViewList full_views = make_views(g, cfg.views, cfg.dense_cap);

  ModelParams params = ModelParams::init(n_views, cfg.layers, d_x, cfg.hidden,
                                         cfg.encoder_sharing, cfg.discriminator,
                                         Rng::derived(cfg.seed, {kTagInit}).next_u64());
  Optimizer opt(params);
  EarlyStopper stopper(cfg.patience);
  const bool normalize = cfg.estimator.kind == Estimator::kNtxent;

  TrainResult result;
  ModelParams best = params;

  for (int epoch = 0; epoch < cfg.epochs && !result.diverged; ++epoch) {
    Rng sample_rng = Rng::derived(cfg.seed, {kTagSample, static_cast<uint64_t>(epoch)});
    Rng corrupt_rng = Rng::derived(cfg.seed, {kTagCorrupt, static_cast<uint64_t>(epoch)});
    Rng pair_rng = Rng::derived(cfg.seed, {kTagPairs, static_cast<uint64_t>(epoch)});

    Real epoch_loss = 0.0, epoch_mi = 0.0;
    int steps = 0;
    for (int done = 0; done < subs_per_epoch; done += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, subs_per_epoch - done);
      ad::Tape tape;
      const ParamIds ids = register_params(tape, params);
      std::vector<ad::NodeId> losses, mis;

      for (int k = 0; k < count; ++k) {
        // One node set per sub-sample, shared by every view.
        std::vector<int> nodes = sub == n ? std::vector<int>()
                                          : sample_rng.sample_without_replacement(n, sub);
        Matrix x_sub;
        std::vector<std::shared_ptr<const SparseMatrix>> sub_views(n_views);
        if (nodes.empty()) {
          x_sub = g.features;
          for (int v = 0; v < n_views; ++v) sub_views[v] = full_views[v];
        } else {
          std::sort(nodes.begin(), nodes.end());
          x_sub.resize(sub, d_x);
          for (int i = 0; i < sub; ++i) x_sub.row(i) = g.features.row(nodes[i]);
          for (int v = 0; v < n_views; ++v) {
            sub_views[v] = std::make_shared<SparseMatrix>(full_views[v]->submatrix(nodes));
          }
        }
        const ad::NodeId x = tape.constant(std::move(x_sub));
        const std::vector<int> perm = corrupt_rng.permutation(sub);

        // Negatives only need corrupted node representations; graph
        // representations always come from the uncorrupted branch.
        std::vector<EncodingIds> real(n_views), corrupted(n_views);
        for (int v = 0; v < n_views; ++v) {
          real[v] = build_encoding(tape, ids, params.encoder_for_view(v), x, sub_views[v],
                                   cfg.pooling);
          corrupted[v] = build_corrupted_encoding(tape, ids, params.encoder_for_view(v),
                                                  real[v], perm, sub_views[v], cfg.pooling,
                                                  /*with_graph_rep=*/false);
        }

        for (const auto& [a, b] : step_pairs(cfg, pair_rng)) {
          std::vector<ad::NodeId> direction_losses, direction_mis;
          auto add_direction = [&](ad::NodeId scores) {
            Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(tape.rows(scores),
                                                                     tape.cols(scores));
            mask.setConstant(false);
            mask.col(0).setConstant(true);
            const MiLossIds l = build_mi_loss(tape, scores, mask, cfg.estimator);
            direction_losses.push_back(l.loss);
            direction_mis.push_back(l.mi_estimate);
          };
          if (cfg.mode == ContrastiveMode::kLocalGlobal) {
            add_direction(build_corruption_scores(tape, real[a].h_nodes,
                                                  corrupted[a].h_nodes, real[b].h_graph,
                                                  ids.bilinear, normalize,
                                                  cfg.estimator.temperature));
            add_direction(build_corruption_scores(tape, real[b].h_nodes,
                                                  corrupted[b].h_nodes, real[a].h_graph,
                                                  ids.bilinear, normalize,
                                                  cfg.estimator.temperature));
          } else {  // ensemble: within-view contrast on both views
            add_direction(build_corruption_scores(tape, real[a].h_nodes,
                                                  corrupted[a].h_nodes, real[a].h_graph,
                                                  ids.bilinear, normalize,
                                                  cfg.estimator.temperature));
            add_direction(build_corruption_scores(tape, real[b].h_nodes,
                                                  corrupted[b].h_nodes, real[b].h_graph,
                                                  ids.bilinear, normalize,
                                                  cfg.estimator.temperature));
          }
          losses.push_back(mean_of(tape, direction_losses));
          mis.push_back(mean_of(tape, direction_mis));
        }
      }

      const ad::NodeId loss = mean_of(tape, losses);
      const ad::NodeId mi = mean_of(tape, mis);
      const StepOutcome outcome = run_step(tape, ids, loss, mi, opt, cfg.lr);
      if (!outcome.finite) {
        result.diverged = true;
        break;
      }
      epoch_loss += outcome.loss;
      epoch_mi += outcome.mi;
      ++steps;
    }
    if (result.diverged || steps == 0) break;
    epoch_loss /= steps;
    epoch_mi /= steps;
    result.history.push_back({epoch, epoch_loss, epoch_mi});
    const bool stop = stopper.should_stop(epoch, epoch_loss);
    if (stopper.improved()) best = params;
    if (stop) break;
  }

  result.params = std::move(best);
  result.best_epoch = stopper.best_epoch();

  std::vector<Encoding> encs;
  for (int v = 0; v < n_views; ++v) {
    encs.push_back(encode(g, *full_views[v], result.params,
                          result.params.encoder_for_view(v), cfg.pooling));
  }
  const Embeddings emb = infer_embeddings(encs);
  result.node_embeddings = emb.nodes;
  result.graph_embeddings = emb.graph;
  return result;
}

}  // namespace mvgrl
