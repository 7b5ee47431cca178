#include "mvgrl/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace mvgrl;

namespace {

const std::string kCli = MVGRL_CLI_PATH;
const fs::path kFixtures = MVGRL_FIXTURES_DIR;

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args, const std::string& env = "") {
  const fs::path log = fs::temp_directory_path() /
                       ("mvgrl_cli_out_" + std::to_string(::getpid()) + ".log");
  const std::string prefix = env.empty() ? "" : "env " + env + " ";
  const std::string cmd = prefix + kCli + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream buffer;
  buffer << in.rdbuf();
  fs::remove(log);
  return {WEXITSTATUS(raw), buffer.str()};
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() /
                   ("mvgrl_cli_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("diffuse: PPR view of the 2-node path matches the closed form") {
  TempDir out;
  const auto r = run_cli("--dataset " + (kFixtures / "path2_bundle").string() +
                         " --format bundle --out-dir " + out.path.string() +
                         " diffuse --view ppr --alpha 0.2");
  CHECK(r.exit_code == 0);
  const auto view = read_coo(out.path / "view_ppr.coo");
  CHECK(view.at(0, 0) == doctest::Approx(5.0 / 9.0).epsilon(1e-12));
  CHECK(view.at(0, 1) == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
  CHECK(r.output.find("nnz=4") != std::string::npos);
}

TEST_CASE("diffuse: epsilon 0 stores every dense entry") {
  TempDir out;
  const auto r = run_cli("--dataset " + (kFixtures / "path2_bundle").string() +
                         " --format bundle --out-dir " + out.path.string() +
                         " diffuse --view ppr --alpha 0.2 --epsilon 0");
  CHECK(r.exit_code == 0);
  CHECK(read_coo(out.path / "view_ppr.coo").nnz() == 4);
}

TEST_CASE("diffuse: missing dataset exits 2 and names the path") {
  const auto r = run_cli("--dataset /nonexistent/nowhere --format bundle diffuse --view ppr");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("/nonexistent/nowhere") != std::string::npos);
}

TEST_CASE("train: toy run writes all four artifacts with the right row counts") {
  TempDir out;
  const auto r = run_cli("--dataset " + (kFixtures / "tu_toy").string() +
                         " --format tu --out-dir " + out.path.string() + " --seed 5" +
                         " train --estimator jsd --epochs 10 --layers 1 --batch-size 2");
  INFO(r.output);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(out.path / "checkpoint.bin"));
  CHECK(fs::exists(out.path / "manifest.json"));
  CHECK(fs::exists(out.path / "node_embeddings.csv"));
  CHECK(fs::exists(out.path / "graph_embeddings.csv"));
  std::ifstream loss(out.path / "loss.csv");
  std::string line;
  int rows = -1;  // header
  while (std::getline(loss, line)) ++rows;
  CHECK(rows == 10);
}

TEST_CASE("train: identical seeds give byte-identical embeddings in strict mode") {
  TempDir out1, out2;
  const std::string base = "--dataset " + (kFixtures / "tu_toy").string() +
                           " --format tu --seed 11 --strict-deterministic " +
                           "train --estimator nce --epochs 6 --layers 1 --batch-size 2";
  CHECK(run_cli("--out-dir " + out1.path.string() + " " + base).exit_code == 0);
  CHECK(run_cli("--out-dir " + out2.path.string() + " " + base).exit_code == 0);
  CHECK(read_file(out1.path / "node_embeddings.csv") ==
        read_file(out2.path / "node_embeddings.csv"));
  CHECK(read_file(out1.path / "graph_embeddings.csv") ==
        read_file(out2.path / "graph_embeddings.csv"));
}

TEST_CASE("train: manifest replay reproduces the run") {
  TempDir out1, out2;
  const std::string first = "--dataset " + (kFixtures / "tu_toy").string() +
                            " --format tu --seed 3 --strict-deterministic --out-dir " +
                            out1.path.string() +
                            " train --estimator jsd --epochs 5 --layers 1 --batch-size 2";
  REQUIRE(run_cli(first).exit_code == 0);
  const std::string replay = "--seed 3 --strict-deterministic --out-dir " +
                             out2.path.string() + " train --manifest " +
                             (out1.path / "manifest.json").string();
  REQUIRE(run_cli(replay).exit_code == 0);
  CHECK(read_file(out1.path / "node_embeddings.csv") ==
        read_file(out2.path / "node_embeddings.csv"));
}

TEST_CASE("train: config validation lists problems and exits 2") {
  TempDir out;
  std::ofstream(out.path / "bad.json") << R"({"views": ["adjacency"], "epochs": 0})";
  const auto r = run_cli("--dataset " + (kFixtures / "tu_toy").string() +
                         " --format tu train --config " + (out.path / "bad.json").string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("epochs") != std::string::npos);
  CHECK(r.output.find("views") != std::string::npos);
}

TEST_CASE("eval: perfect one-hot embeddings print 1.000 +- 0.000") {
  TempDir out;
  Matrix emb = Matrix::Zero(9, 2);
  std::vector<int> labels(9);
  for (int i = 0; i < 9; ++i) {
    labels[i] = i % 2;
    emb(i, labels[i]) = 1.0;
  }
  write_csv_matrix(out.path / "emb.csv", emb);
  write_labels_csv(out.path / "labels.csv", labels);
  const auto r = run_cli("--out-dir " + out.path.string() + " eval --embeddings " +
                         (out.path / "emb.csv").string() + " --labels " +
                         (out.path / "labels.csv").string() +
                         " --protocol graph_svm_cv --folds 3 --repeats 2");
  INFO(r.output);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("1.000 +- 0.000") != std::string::npos);
  CHECK(fs::exists(out.path / "report.json"));
}

TEST_CASE("eval: clustering protocol prints NMI and ARI") {
  TempDir out;
  Matrix emb = Matrix::Zero(12, 2);
  std::vector<int> labels(12);
  for (int i = 0; i < 12; ++i) {
    labels[i] = i % 2;
    emb(i, labels[i]) = 5.0;
  }
  write_csv_matrix(out.path / "emb.csv", emb);
  write_labels_csv(out.path / "labels.csv", labels);
  const auto r = run_cli("--out-dir " + out.path.string() + " eval --embeddings " +
                         (out.path / "emb.csv").string() + " --labels " +
                         (out.path / "labels.csv").string() + " --protocol clustering");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("NMI") != std::string::npos);
  CHECK(r.output.find("ARI") != std::string::npos);
}

TEST_CASE("eval: unknown protocol is a usage error") {
  const auto r = run_cli("eval --embeddings nowhere.csv --protocol banana");
  CHECK(r.exit_code == 2);
}

TEST_CASE("eval: node protocol on graph-sized embeddings exits 2") {
  TempDir out;
  write_csv_matrix(out.path / "emb.csv", Matrix::Ones(5, 2));  // bundle has 3 nodes
  const auto r = run_cli("--dataset " + (kFixtures / "bundle_toy").string() +
                         " --format bundle eval --embeddings " +
                         (out.path / "emb.csv").string() + " --protocol node_linear");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("mismatch") != std::string::npos);
}

TEST_CASE("MVGRL_OUT_DIR supplies the output directory") {
  TempDir out;
  const auto r = run_cli("--dataset " + (kFixtures / "path2_bundle").string() +
                             " --format bundle diffuse --view ppr --alpha 0.2",
                         "MVGRL_OUT_DIR=" + out.path.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(out.path / "view_ppr.coo"));
}

TEST_CASE("gradcheck: prints per-op CSV and exits clean") {
  const auto r = run_cli("gradcheck");
  INFO(r.output);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("op,max_rel_error") != std::string::npos);
  CHECK(r.output.find("matmul") != std::string::npos);
  CHECK(r.output.find("row_l2_normalize") != std::string::npos);
}

TEST_SUITE_END();
