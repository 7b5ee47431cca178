#include "mvgrl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mvgrl {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void parse_fail(const fs::path& file, int line, const std::string& what) {
  throw RuntimeError("parse error in " + file.string() + ":" + std::to_string(line) +
                     ": " + what);
}

std::ifstream open_or_fail(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw RuntimeError("missing or unreadable file: " + file.string());
  return in;
}

// Reads one line, tolerating CRLF endings.
bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

long parse_long(const std::string& tok, const fs::path& file, int line) {
  long v = 0;
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(e[-1]))) --e;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) parse_fail(file, line, "expected an integer, got '" + tok + "'");
  return v;
}

double parse_real(const std::string& tok, const fs::path& file, int line) {
  try {
    size_t used = 0;
    double v = std::stod(tok, &used);
    while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    parse_fail(file, line, "expected a number, got '" + tok + "'");
  }
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

std::vector<int> read_int_column(const fs::path& file) {
  auto in = open_or_fail(file);
  std::vector<int> out;
  std::string line;
  int lineno = 0;
  while (next_line(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    out.push_back(static_cast<int>(parse_long(line, file, lineno)));
  }
  return out;
}

std::map<int, int> contiguous_remap(const std::vector<int>& raw) {
  std::set<int> distinct(raw.begin(), raw.end());
  std::map<int, int> remap;
  int next = 0;
  for (int v : distinct) remap[v] = next++;
  return remap;
}

}  // namespace

GraphCollection load_tu_dataset(const fs::path& dir) {
  check_arg(fs::is_directory(dir), "load_tu_dataset: not a directory: " + dir.string());

  // Discover the dataset prefix from <DS>_A.txt.
  std::string prefix;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 6 && name.ends_with("_A.txt")) {
      prefix = name.substr(0, name.size() - 6);
      break;
    }
  }
  if (prefix.empty()) throw RuntimeError("missing or unreadable file: " + (dir / "<DS>_A.txt").string());

  const fs::path a_file = dir / (prefix + "_A.txt");
  const fs::path indicator_file = dir / (prefix + "_graph_indicator.txt");
  const fs::path glabel_file = dir / (prefix + "_graph_labels.txt");
  const fs::path nlabel_file = dir / (prefix + "_node_labels.txt");

  const std::vector<int> indicator = read_int_column(indicator_file);
  const int n_total = static_cast<int>(indicator.size());
  check_run(n_total > 0, "load_tu_dataset: empty graph indicator");

  // Graph ids must be 1..G and non-decreasing so node ranges are contiguous.
  int n_graphs = 0;
  for (int i = 0; i < n_total; ++i) {
    const int gid = indicator[i];
    if (gid == n_graphs + 1) {
      ++n_graphs;
    } else if (gid != n_graphs) {
      parse_fail(indicator_file, i + 1,
                 "non-contiguous graph indicator (saw graph id " + std::to_string(gid) + ")");
    }
  }

  std::vector<int> node_graph(n_total);       // node -> graph (0-based)
  std::vector<int> node_local(n_total);       // node -> index within its graph
  std::vector<int> graph_size(n_graphs, 0);
  for (int i = 0; i < n_total; ++i) {
    const int g = indicator[i] - 1;
    node_graph[i] = g;
    node_local[i] = graph_size[g]++;
  }

  // Edges, grouped per graph, symmetrized and deduplicated.
  std::vector<std::set<std::pair<int, int>>> edges(n_graphs);
  {
    auto in = open_or_fail(a_file);
    std::string line;
    int lineno = 0;
    while (next_line(in, line)) {
      ++lineno;
      if (is_blank(line)) continue;
      const auto toks = split_on(line, ',');
      if (toks.size() != 2) parse_fail(a_file, lineno, "expected 'i, j'");
      const long u1 = parse_long(toks[0], a_file, lineno);
      const long v1 = parse_long(toks[1], a_file, lineno);
      if (u1 < 1 || u1 > n_total || v1 < 1 || v1 > n_total) {
        parse_fail(a_file, lineno, "dangling node id (1.." + std::to_string(n_total) + ")");
      }
      const int u = static_cast<int>(u1 - 1), v = static_cast<int>(v1 - 1);
      if (node_graph[u] != node_graph[v]) {
        parse_fail(a_file, lineno, "edge connects nodes of different graphs");
      }
      if (u == v) continue;  // zero diagonal at ingestion
      const int a = node_local[u], b = node_local[v];
      edges[node_graph[u]].insert({std::min(a, b), std::max(a, b)});
    }
  }

  const std::vector<int> raw_glabels = read_int_column(glabel_file);
  if (static_cast<int>(raw_glabels.size()) != n_graphs) {
    parse_fail(glabel_file, static_cast<int>(raw_glabels.size()),
               "expected " + std::to_string(n_graphs) + " graph labels");
  }
  const auto glabel_map = contiguous_remap(raw_glabels);

  std::vector<int> node_labels;
  bool have_node_labels = fs::exists(nlabel_file);
  if (have_node_labels) {
    node_labels = read_int_column(nlabel_file);
    if (static_cast<int>(node_labels.size()) != n_total) {
      parse_fail(nlabel_file, static_cast<int>(node_labels.size()),
                 "expected " + std::to_string(n_total) + " node labels");
    }
    const auto remap = contiguous_remap(node_labels);
    for (int& l : node_labels) l = remap.at(l);
  }

  GraphCollection collection;
  collection.class_count = static_cast<int>(glabel_map.size());
  collection.graphs.resize(n_graphs);
  for (int g = 0; g < n_graphs; ++g) {
    std::vector<SparseMatrix::Triplet> t;
    t.reserve(edges[g].size() * 2);
    for (const auto& [a, b] : edges[g]) {
      t.emplace_back(a, b, 1.0);
      t.emplace_back(b, a, 1.0);
    }
    auto& graph = collection.graphs[g];
    graph.adjacency = SparseMatrix::from_triplets(graph_size[g], graph_size[g], std::move(t));
    graph.features = Matrix::Zero(graph_size[g], 0);
    graph.graph_label = glabel_map.at(raw_glabels[g]);
  }
  if (have_node_labels) {
    for (auto& graph : collection.graphs) {
      graph.node_labels = std::vector<int>(graph.num_nodes());
    }
    for (int i = 0; i < n_total; ++i) {
      (*collection.graphs[node_graph[i]].node_labels)[node_local[i]] = node_labels[i];
    }
  }
  collection.validate();
  return collection;
}

namespace {

// CSV with an optional header row (detected: the first field of the first
// line does not parse as a number).
Matrix read_csv_matrix(const fs::path& file) {
  auto in = open_or_fail(file);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  size_t width = 0;
  while (next_line(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    const auto toks = split_on(line, ',');
    if (rows.empty() && lineno == 1) {
      try {
        std::stod(toks.at(0));
      } catch (const std::exception&) {
        continue;  // header row
      }
    }
    std::vector<double> row;
    row.reserve(toks.size());
    for (const auto& tok : toks) row.push_back(parse_real(tok, file, lineno));
    if (width == 0) width = row.size();
    if (row.size() != width) parse_fail(file, lineno, "ragged row");
    rows.push_back(std::move(row));
  }
  Matrix m(rows.size(), width);
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < width; ++c) m(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  }
  return m;
}

std::vector<int> read_id_list(const fs::path& file, int n, const char* what) {
  const auto ids = read_int_column(file);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= n) {
      parse_fail(file, static_cast<int>(i + 1), std::string(what) + " node id out of range");
    }
  }
  return ids;
}

}  // namespace

AttributedGraph load_node_bundle(const fs::path& dir) {
  check_arg(fs::is_directory(dir), "load_node_bundle: not a directory: " + dir.string());

  AttributedGraph g;
  g.features = read_csv_matrix(dir / "features.csv");
  const int n = static_cast<int>(g.features.rows());
  check_run(n > 0, "load_node_bundle: features.csv has no rows");

  {
    const fs::path file = dir / "labels.csv";
    Matrix raw = read_csv_matrix(file);
    if (raw.rows() != n) {
      throw ValidationError("load_node_bundle: labels.csv has " + std::to_string(raw.rows()) +
                            " rows but features.csv has " + std::to_string(n));
    }
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(raw(i, 0));
    const auto remap = contiguous_remap(labels);
    for (int& l : labels) l = remap.at(l);
    g.node_labels = std::move(labels);
  }

  {
    const fs::path file = dir / "edges.tsv";
    auto in = open_or_fail(file);
    std::set<std::pair<int, int>> edges;
    std::string line;
    int lineno = 0;
    while (next_line(in, line)) {
      ++lineno;
      if (is_blank(line)) continue;
      const auto toks = split_on(line, '\t');
      if (toks.size() != 2) parse_fail(file, lineno, "expected 'u<TAB>v'");
      const long u = parse_long(toks[0], file, lineno);
      const long v = parse_long(toks[1], file, lineno);
      if (u < 0 || u >= n || v < 0 || v >= n) parse_fail(file, lineno, "node id out of range");
      if (u == v) continue;
      edges.insert({std::min<long>(u, v), std::max<long>(u, v)});
    }
    std::vector<SparseMatrix::Triplet> t;
    t.reserve(edges.size() * 2);
    for (const auto& [u, v] : edges) {
      t.emplace_back(u, v, 1.0);
      t.emplace_back(v, u, 1.0);
    }
    g.adjacency = SparseMatrix::from_triplets(n, n, std::move(t));
  }

  Split split;
  split.train = read_id_list(dir / "train.txt", n, "train");
  split.val = read_id_list(dir / "val.txt", n, "val");
  split.test = read_id_list(dir / "test.txt", n, "test");
  std::vector<int> seen(n, 0);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (int id : *part) {
      if (seen[id]++) {
        throw ValidationError("load_node_bundle: splits overlap at node " + std::to_string(id));
      }
    }
  }
  g.split = std::move(split);
  g.validate();
  return g;
}

uint64_t fingerprint_directory(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const char* data, size_t len) {
    for (size_t i = 0; i < len; ++i) {
      h ^= static_cast<unsigned char>(data[i]);
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& f : files) {
    const std::string rel = fs::relative(f, dir).string();
    feed(rel.data(), rel.size());
    std::ifstream in(f, std::ios::binary);
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) feed(buf, static_cast<size_t>(in.gcount()));
  }
  return h;
}

}  // namespace mvgrl
