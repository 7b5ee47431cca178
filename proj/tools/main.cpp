#include "mvgrl/config.hpp"
#include "mvgrl/dataset.hpp"
#include "mvgrl/gradcheck.hpp"
#include "mvgrl/io.hpp"
#include "mvgrl/manifest.hpp"
#include "mvgrl/trainer.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace mvgrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct GlobalArgs {
  std::string dataset;
  std::string format = "tu";
  std::string out_dir;
  uint64_t seed = 1;
  bool strict = false;
  int workers = 0;
};

fs::path resolve_out_dir(const GlobalArgs& args) {
  if (!args.out_dir.empty()) return args.out_dir;
  if (const char* env = std::getenv("MVGRL_OUT_DIR")) return env;
  return ".";
}

void require_dataset(const GlobalArgs& args) {
  if (args.dataset.empty()) {
    throw ValidationError("missing --dataset");
  }
  if (!fs::exists(args.dataset)) {
    throw ValidationError("dataset path does not exist: " + args.dataset);
  }
}

struct LoadedData {
  std::optional<GraphCollection> collection;
  std::optional<AttributedGraph> graph;
};

LoadedData load_dataset(const GlobalArgs& args) {
  require_dataset(args);
  LoadedData data;
  if (args.format == "tu") {
    data.collection = load_tu_dataset(args.dataset);
  } else if (args.format == "bundle") {
    data.graph = load_node_bundle(args.dataset);
  } else {
    throw ValidationError("unknown --format: " + args.format + " (expected tu|bundle)");
  }
  return data;
}

void print_view_summary(const std::string& name, const SparseMatrix& view) {
  const Vector sums = view.row_sums();
  std::cout << name << ": " << view.n_rows << "x" << view.n_cols << " nnz=" << view.nnz()
            << " row-sum min=" << sums.minCoeff() << " max=" << sums.maxCoeff() << "\n";
}

// ---------------------------------------------------------------------------

int cmd_diffuse(const GlobalArgs& globals, const ViewSpec& spec, bool dense_csv,
                int dense_cap) {
  const LoadedData data = load_dataset(globals);
  const fs::path out = resolve_out_dir(globals);
  fs::create_directories(out);

  auto emit = [&](const AttributedGraph& g, const std::string& stem) {
    const SparseMatrix view = make_view(g, spec, dense_cap);
    if (dense_csv) {
      const fs::path file = out / (stem + ".csv");
      write_csv_matrix(file, view.to_dense(), "c");
      print_view_summary(file.string(), view);
    } else {
      const fs::path file = out / (stem + ".coo");
      write_coo(file, view);
      print_view_summary(file.string(), view);
    }
  };

  const std::string kind = to_string(spec.view);
  if (data.graph) {
    emit(*data.graph, "view_" + kind);
  } else {
    for (size_t i = 0; i < data.collection->graphs.size(); ++i) {
      emit(data.collection->graphs[i], "view_" + kind + "_g" + std::to_string(i));
    }
  }
  return kExitOk;
}

int cmd_train(const GlobalArgs& globals, TrainConfig cfg, const std::string& manifest_in,
              bool seed_given) {
  GlobalArgs effective = globals;
  uint64_t replay_fingerprint = 0;
  if (!manifest_in.empty()) {
    const RunManifest replay = RunManifest::from_json_file(manifest_in);
    cfg = replay.config;
    effective.dataset = replay.dataset_path;
    effective.format = replay.dataset_format;
    replay_fingerprint = replay.dataset_fingerprint;
  }
  // Seed priority: explicit --seed, then the config/manifest value.
  if (seed_given) cfg.seed = effective.seed;
  cfg.strict_deterministic = effective.strict || cfg.strict_deterministic;
  cfg.workers = cfg.strict_deterministic ? 1 : effective.workers;

  {
    const auto errors = cfg.validation_errors();
    if (!errors.empty()) {
      std::cerr << "config validation failed:\n";
      for (const auto& e : errors) std::cerr << "  - " << e << "\n";
      return kExitUsage;
    }
  }
  const LoadedData data = load_dataset(effective);
  if (replay_fingerprint != 0 &&
      replay_fingerprint != fingerprint_directory(effective.dataset)) {
    std::cerr << "warning: dataset content differs from the manifest fingerprint; "
                 "the replay will not be bit-identical\n";
  }

  const fs::path out = resolve_out_dir(effective);
  fs::create_directories(out);

  TrainResult result;
  if (data.collection) {
    result = train(*data.collection, cfg);
  } else {
    result = train(*data.graph, cfg);
  }

  RunManifest manifest;
  manifest.config = cfg;
  manifest.dataset_path = effective.dataset;
  manifest.dataset_format = effective.format;
  manifest.dataset_fingerprint = fingerprint_directory(effective.dataset);

  const fs::path ckpt = out / "checkpoint.bin";
  const fs::path loss_csv = out / "loss.csv";
  const fs::path node_csv = out / "node_embeddings.csv";
  const fs::path graph_csv = out / "graph_embeddings.csv";
  const fs::path manifest_json = out / "manifest.json";
  save_checkpoint(ckpt, result.params);
  write_loss_history(loss_csv, result.history);
  write_csv_matrix(node_csv, result.node_embeddings);
  write_csv_matrix(graph_csv, result.graph_embeddings);
  manifest.artifacts = {{"checkpoint", ckpt.string()},
                        {"loss_history", loss_csv.string()},
                        {"node_embeddings", node_csv.string()},
                        {"graph_embeddings", graph_csv.string()},
                        {"manifest", manifest_json.string()}};
  manifest.save(manifest_json);

  // Labels next to the embeddings make `eval` runs self-contained.
  if (data.collection) {
    std::vector<int> labels;
    for (const auto& g : data.collection->graphs) labels.push_back(*g.graph_label);
    write_labels_csv(out / "graph_labels.csv", labels);
  } else if (data.graph->node_labels) {
    write_labels_csv(out / "node_labels.csv", *data.graph->node_labels);
  }

  std::cout << "epochs run: " << result.history.size()
            << "  best epoch: " << result.best_epoch;
  if (!result.history.empty()) {
    std::cout << "  final loss: " << result.history.back().loss;
  }
  std::cout << "\nartifacts in " << out.string() << "\n";
  if (result.diverged) {
    std::cerr << "training diverged (non-finite loss); artifacts hold the last good "
                 "checkpoint\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_eval(const GlobalArgs& globals, const std::string& embeddings_file,
             const std::string& labels_file, const std::string& protocol_name, int runs,
             int folds, int repeats, int clusters) {
  const EvalProtocol protocol = eval_protocol_from_string(protocol_name);
  const Matrix embeddings = read_csv_matrix_file(embeddings_file);
  check_arg(embeddings.rows() > 0, "eval: embeddings file is empty");

  std::vector<int> labels;
  Split split;
  if (protocol == EvalProtocol::kNodeLinear) {
    // The split comes from the bundle dataset; labels may come from either.
    require_dataset(globals);
    check_arg(globals.format == "bundle",
              "eval: node_linear expects --format bundle (splits live in the bundle)");
    const AttributedGraph g = load_node_bundle(globals.dataset);
    check_arg(g.num_nodes() == embeddings.rows(),
              "eval: node protocol on mismatched embeddings (graph has " +
                  std::to_string(g.num_nodes()) + " nodes, embeddings " +
                  std::to_string(embeddings.rows()) + " rows)");
    labels = labels_file.empty() ? *g.node_labels : read_labels_csv(labels_file);
    split = *g.split;
  } else {
    check_arg(!labels_file.empty(), "eval: --labels is required for this protocol");
    labels = read_labels_csv(labels_file);
    check_arg(static_cast<int>(labels.size()) == embeddings.rows(),
              "eval: protocol/data mismatch: " + std::to_string(labels.size()) +
                  " labels vs " + std::to_string(embeddings.rows()) + " embedding rows");
  }

  const fs::path out = resolve_out_dir(globals);
  fs::create_directories(out);
  const int workers = globals.strict ? 1 : globals.workers;

  char line[160];
  if (protocol == EvalProtocol::kClustering) {
    ClusterOptions opts;
    opts.seed = globals.seed;
    opts.workers = workers;
    if (runs > 0) opts.restarts = runs;
    int k = clusters;
    if (k == 0) {
      for (int l : labels) k = std::max(k, l + 1);
    }
    const ClusterResult r = cluster_and_score(embeddings, labels, k, opts);
    std::snprintf(line, sizeof line, "NMI %.4f  ARI %.4f", r.nmi, r.ari);
    std::cout << line << "\n";
    write_text_file(out / "report.json", cluster_to_json(r));
    return kExitOk;
  }

  EvalReport report;
  if (protocol == EvalProtocol::kNodeLinear) {
    NodeEvalOptions opts;
    opts.seed = globals.seed;
    opts.workers = workers;
    if (runs > 0) opts.runs = runs;
    report = linear_eval_node(embeddings, labels, split, opts);
  } else {
    SvmEvalOptions opts;
    opts.seed = globals.seed;
    opts.workers = workers;
    if (folds > 0) opts.folds = folds;
    if (repeats > 0) opts.repeats = repeats;
    report = svm_cv_graph(embeddings, labels, opts);
  }
  std::snprintf(line, sizeof line, "%.3f +- %.3f", report.mean, report.std_dev);
  std::cout << line << "\n";
  write_text_file(out / "report.json", report_to_json(report));
  write_report_csv(out / "report.csv", report);
  return kExitOk;
}

int cmd_gradcheck(uint64_t seed) {
  std::cout << "op,max_rel_error\n";
  bool ok = true;
  for (const auto& report : ad::op_gradient_sweep(seed)) {
    std::printf("%s,%.3e\n", report.op.c_str(), report.max_rel_error);
    ok = ok && report.max_rel_error <= 1e-5;
  }
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive multi-view graph representation learning"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may appear after the subcommand

  GlobalArgs globals;
  app.add_option("--dataset", globals.dataset, "Dataset directory");
  app.add_option("--format", globals.format, "Dataset format: tu|bundle");
  app.add_option("--out-dir", globals.out_dir, "Output directory (env MVGRL_OUT_DIR)");
  app.add_option("--seed", globals.seed, "Random seed");
  app.add_flag("--strict-deterministic", globals.strict, "Single-threaded, bit-stable runs");
  app.add_option("--workers", globals.workers, "Worker threads (0 = auto)");

  // diffuse ------------------------------------------------------------
  auto* diffuse = app.add_subcommand("diffuse", "Compute and export a structural view");
  std::string view_name = "ppr";
  double alpha = 0.2, t_time = 5.0, epsilon = 0.0;
  int topk = 0, dense_cap = 20000;
  bool dense_csv = false;
  diffuse->add_option("--view", view_name, "adjacency|ppr|heat|distance");
  diffuse->add_option("--alpha", alpha, "PPR teleport probability");
  diffuse->add_option("--t", t_time, "Heat diffusion time");
  diffuse->add_option("--epsilon", epsilon, "Sparsification threshold");
  diffuse->add_option("--topk", topk, "Keep k largest entries per row");
  diffuse->add_option("--dense-cap", dense_cap, "Dense closed-form size cap");
  diffuse->add_flag("--csv", dense_csv, "Write a dense CSV instead of COO text");

  // train --------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Run contrastive training");
  std::string config_file, manifest_file;
  train_cmd->add_option("--config", config_file, "JSON or key=value config file");
  train_cmd->add_option("--manifest", manifest_file, "Replay a previous run's manifest");
  std::string estimator_flag, mode_flag;
  int epochs_flag = 0, layers_flag = 0, batch_flag = 0;
  train_cmd->add_option("--estimator", estimator_flag, "jsd|nce|ntxent|dv");
  train_cmd->add_option("--mode", mode_flag, "local_global|global_global|ensemble");
  train_cmd->add_option("--epochs", epochs_flag, "Override epochs");
  train_cmd->add_option("--layers", layers_flag, "Override GCN layer count");
  train_cmd->add_option("--batch-size", batch_flag, "Override batch size");

  // eval ---------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate frozen embeddings");
  std::string embeddings_file, labels_file, protocol_name;
  int runs = 0, folds = 0, repeats = 0, clusters = 0;
  eval_cmd->add_option("--embeddings", embeddings_file, "Embeddings CSV")->required();
  eval_cmd->add_option("--labels", labels_file, "Labels CSV");
  eval_cmd->add_option("--protocol", protocol_name, "node_linear|graph_svm_cv|clustering")
      ->required();
  eval_cmd->add_option("--runs", runs, "Probe runs / clustering restarts");
  eval_cmd->add_option("--folds", folds, "CV folds");
  eval_cmd->add_option("--repeats", repeats, "CV repeats");
  eval_cmd->add_option("--clusters", clusters, "Cluster count (default: #classes)");

  // gradcheck ----------------------------------------------------------
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference sweep over every op");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*diffuse) {
      ViewSpec spec;
      spec.view = view_kind_from_string(view_name);
      spec.coefficients.alpha = alpha;
      spec.coefficients.t = t_time;
      spec.coefficients.kind = spec.view == ViewKind::kHeat
                                   ? DiffusionCoefficients::Kind::kHeat
                                   : DiffusionCoefficients::Kind::kPpr;
      spec.sparsify_epsilon = epsilon;
      if (topk > 0) spec.sparsify_topk = topk;
      return cmd_diffuse(globals, spec, dense_csv, dense_cap);
    }
    if (*train_cmd) {
      TrainConfig cfg;
      if (!config_file.empty()) cfg = parse_train_config(config_file);
      if (!estimator_flag.empty()) cfg.estimator.kind = estimator_from_string(estimator_flag);
      if (!mode_flag.empty()) cfg.mode = contrastive_mode_from_string(mode_flag);
      if (epochs_flag > 0) cfg.epochs = epochs_flag;
      if (layers_flag > 0) cfg.layers = layers_flag;
      if (batch_flag > 0) cfg.batch_size = batch_flag;
      return cmd_train(globals, std::move(cfg), manifest_file, app.count("--seed") > 0);
    }
    if (*eval_cmd) {
      return cmd_eval(globals, embeddings_file, labels_file, protocol_name, runs, folds,
                      repeats, clusters);
    }
    if (*gradcheck) {
      return cmd_gradcheck(globals.seed);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
