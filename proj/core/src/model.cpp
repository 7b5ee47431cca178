#include "mvgrl/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace mvgrl {

EncoderSharing encoder_sharing_from_string(const std::string& s) {
  if (s == "dedicated") return EncoderSharing::kDedicated;
  if (s == "shared") return EncoderSharing::kShared;
  throw ValidationError("unknown encoder sharing mode: " + s);
}
Pooling pooling_from_string(const std::string& s) {
  if (s == "sum") return Pooling::kSum;
  if (s == "mean") return Pooling::kMean;
  throw ValidationError("unknown pooling mode: " + s);
}
DiscriminatorMode discriminator_mode_from_string(const std::string& s) {
  if (s == "dot") return DiscriminatorMode::kDot;
  if (s == "bilinear") return DiscriminatorMode::kBilinear;
  throw ValidationError("unknown discriminator mode: " + s);
}
std::string to_string(EncoderSharing v) {
  return v == EncoderSharing::kDedicated ? "dedicated" : "shared";
}
std::string to_string(Pooling v) { return v == Pooling::kSum ? "sum" : "mean"; }
std::string to_string(DiscriminatorMode v) {
  return v == DiscriminatorMode::kDot ? "dot" : "bilinear";
}

Matrix xavier_uniform(int fan_in, int fan_out, Rng& rng) {
  const Real bound = std::sqrt(6.0 / static_cast<Real>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (int r = 0; r < fan_in; ++r) {
    for (int c = 0; c < fan_out; ++c) w(r, c) = rng.uniform(-bound, bound);
  }
  return w;
}

namespace {
Matrix default_slope() { return Matrix::Constant(1, 1, 0.25); }
}  // namespace

ModelParams ModelParams::init(int n_views, int layers, int d_x, int d_h,
                              EncoderSharing sharing, DiscriminatorMode disc,
                              uint64_t seed) {
  check_arg(n_views >= 1 && layers >= 1 && d_x >= 1 && d_h >= 1,
            "model: dimensions must be positive");
  ModelParams p;
  p.sharing = sharing;
  const int stacks = sharing == EncoderSharing::kShared ? 1 : n_views;
  uint64_t stream = 0;
  for (int s = 0; s < stacks; ++s) {
    std::vector<GcnLayer> stack;
    for (int l = 0; l < layers; ++l) {
      Rng rng = Rng::derived(seed, {0x656e63u, stream++});
      stack.push_back({xavier_uniform(l == 0 ? d_x : d_h, d_h, rng), default_slope()});
    }
    p.encoders.push_back(std::move(stack));
  }
  auto make_head = [&](uint64_t tag) {
    std::array<MlpLayer, 2> head;
    for (int l = 0; l < 2; ++l) {
      Rng rng = Rng::derived(seed, {tag, static_cast<uint64_t>(l)});
      head[l] = {xavier_uniform(d_h, d_h, rng), Matrix::Zero(1, d_h), default_slope()};
    }
    return head;
  };
  p.node_head = make_head(0x6e686561u);
  p.graph_head = make_head(0x67686561u);
  {
    Rng rng = Rng::derived(seed, {0x726f7574u});
    p.readout_weight = xavier_uniform(layers * d_h, d_h, rng);
    p.readout_slope = default_slope();
  }
  if (disc == DiscriminatorMode::kBilinear) {
    Rng rng = Rng::derived(seed, {0x62696c69u});
    p.bilinear = xavier_uniform(d_h, d_h, rng);
  }
  return p;
}

ParamIds register_params(ad::Tape& tape, const ModelParams& params) {
  ParamIds ids;
  auto reg = [&](const Matrix& m, const std::string& name) {
    const ad::NodeId id = tape.input(m, /*is_param=*/true);
    ids.flat.push_back(id);
    ids.names.push_back(name);
    return id;
  };

  // Keep this traversal aligned with for_each_param (checked by tests).
  for (size_t s = 0; s < params.encoders.size(); ++s) {
    std::vector<ParamIds::Layer> stack;
    for (size_t l = 0; l < params.encoders[s].size(); ++l) {
      const auto& layer = params.encoders[s][l];
      const std::string base = "encoder" + std::to_string(s) + ".layer" + std::to_string(l);
      stack.push_back({reg(layer.theta, base + ".theta"),
                       reg(layer.prelu_slope, base + ".slope")});
    }
    ids.encoders.push_back(std::move(stack));
  }
  auto reg_head = [&](const std::array<MlpLayer, 2>& head, const std::string& base) {
    std::array<ParamIds::Head, 2> out;
    for (int l = 0; l < 2; ++l) {
      const std::string b = base + ".layer" + std::to_string(l);
      out[l] = {reg(head[l].weight, b + ".weight"), reg(head[l].bias, b + ".bias"),
                reg(head[l].prelu_slope, b + ".slope")};
    }
    return out;
  };
  ids.node_head = reg_head(params.node_head, "node_head");
  ids.graph_head = reg_head(params.graph_head, "graph_head");
  ids.readout_weight = reg(params.readout_weight, "readout.weight");
  ids.readout_slope = reg(params.readout_slope, "readout.slope");
  if (params.bilinear) ids.bilinear = reg(*params.bilinear, "discriminator.bilinear");
  return ids;
}

ad::NodeId build_gcn_layer(ad::Tape& tape, ad::NodeId x,
                           std::shared_ptr<const SparseMatrix> view,
                           ParamIds::Layer layer) {
  return tape.prelu(tape.spmm(std::move(view), tape.matmul(x, layer.theta)), layer.slope);
}

ad::NodeId build_readout(ad::Tape& tape, const std::vector<ad::NodeId>& z_layers,
                         ad::NodeId weight, ad::NodeId slope, Pooling pooling) {
  check_arg(!z_layers.empty(), "readout: no layers");
  std::vector<ad::NodeId> pooled;
  pooled.reserve(z_layers.size());
  for (ad::NodeId z : z_layers) {
    ad::NodeId p = tape.sum_rows(z);
    if (pooling == Pooling::kMean) p = tape.scale(p, 1.0 / tape.rows(z));
    pooled.push_back(p);
  }
  return tape.prelu(tape.matmul(tape.concat_cols(std::move(pooled)), weight), slope);
}

ad::NodeId build_projection_head(ad::Tape& tape, ad::NodeId x,
                                 const std::array<ParamIds::Head, 2>& head) {
  ad::NodeId h = x;
  for (const auto& layer : head) {
    h = tape.prelu(tape.add_bias_row(tape.matmul(h, layer.weight), layer.bias), layer.slope);
  }
  return h;
}

EncodingIds build_encoding(ad::Tape& tape, const ParamIds& ids, int view_index,
                           ad::NodeId x, std::shared_ptr<const SparseMatrix> view,
                           Pooling pooling) {
  const int stack = view_index < static_cast<int>(ids.encoders.size()) ? view_index : 0;
  EncodingIds out;
  out.num_nodes = tape.rows(x);
  ad::NodeId h = x;
  for (size_t l = 0; l < ids.encoders[stack].size(); ++l) {
    const auto& layer = ids.encoders[stack][l];
    const ad::NodeId product = tape.matmul(h, layer.theta);
    if (l == 0) out.first_product = product;
    h = tape.prelu(tape.spmm(view, product), layer.slope);
    out.z_layers.push_back(h);
  }
  out.h_nodes = build_projection_head(tape, h, ids.node_head);
  const ad::NodeId pooled =
      build_readout(tape, out.z_layers, ids.readout_weight, ids.readout_slope, pooling);
  out.h_graph = build_projection_head(tape, pooled, ids.graph_head);
  return out;
}

EncodingIds build_corrupted_encoding(ad::Tape& tape, const ParamIds& ids, int view_index,
                                     const EncodingIds& real_branch,
                                     const std::vector<int>& permutation,
                                     std::shared_ptr<const SparseMatrix> view,
                                     Pooling pooling, bool with_graph_rep) {
  const int stack = view_index < static_cast<int>(ids.encoders.size()) ? view_index : 0;
  check_arg(static_cast<int>(permutation.size()) == real_branch.num_nodes,
            "corrupted encoding: permutation length mismatch");
  EncodingIds out;
  out.num_nodes = real_branch.num_nodes;
  out.first_product = tape.row_gather(real_branch.first_product, permutation);
  ad::NodeId h = tape.prelu(tape.spmm(view, out.first_product),
                            ids.encoders[stack].front().slope);
  out.z_layers.push_back(h);
  for (size_t l = 1; l < ids.encoders[stack].size(); ++l) {
    h = build_gcn_layer(tape, h, view, ids.encoders[stack][l]);
    out.z_layers.push_back(h);
  }
  out.h_nodes = build_projection_head(tape, h, ids.node_head);
  if (with_graph_rep) {
    const ad::NodeId pooled =
        build_readout(tape, out.z_layers, ids.readout_weight, ids.readout_slope, pooling);
    out.h_graph = build_projection_head(tape, pooled, ids.graph_head);
  }
  return out;
}

Encoding encode(const AttributedGraph& g, const SparseMatrix& view,
                const ModelParams& params, int view_index, Pooling pooling) {
  check_arg(view.n_rows == g.num_nodes() && view.n_cols == g.num_nodes(),
            "encode: view shape must match the graph");
  ad::Tape tape;
  const ParamIds ids = register_params(tape, params);
  const ad::NodeId x = tape.constant(g.features);
  const int stack = params.encoder_for_view(view_index);
  const EncodingIds enc = build_encoding(
      tape, ids, stack, x, std::make_shared<SparseMatrix>(view), pooling);
  tape.forward();

  Encoding out;
  for (ad::NodeId z : enc.z_layers) out.z_layers.push_back(tape.value(z));
  out.h_nodes = tape.value(enc.h_nodes);
  out.h_graph = tape.value(enc.h_graph);
  return out;
}

Real discriminate(const RowVector& h_node, const RowVector& h_graph,
                  DiscriminatorMode mode, const std::optional<Matrix>& bilinear) {
  check_arg(h_node.size() == h_graph.size(), "discriminate: dimension mismatch");
  if (mode == DiscriminatorMode::kDot) return h_node.dot(h_graph);
  check_arg(bilinear.has_value(), "discriminate: bilinear matrix missing");
  check_arg(bilinear->rows() == h_node.size() && bilinear->cols() == h_graph.size(),
            "discriminate: bilinear matrix shape mismatch");
  return h_node * (*bilinear) * h_graph.transpose();
}

Embeddings infer_embeddings(const std::vector<Encoding>& encodings) {
  check_arg(!encodings.empty(), "infer_embeddings: no encodings");
  Embeddings out;
  out.nodes = encodings.front().h_nodes;
  out.graph = encodings.front().h_graph.row(0);
  for (size_t i = 1; i < encodings.size(); ++i) {
    check_arg(encodings[i].h_nodes.rows() == out.nodes.rows() &&
                  encodings[i].h_nodes.cols() == out.nodes.cols(),
              "infer_embeddings: encoding shapes differ");
    out.nodes += encodings[i].h_nodes;
    out.graph += encodings[i].h_graph.row(0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint container: magic "MVGK", version, structural header, a manifest
// of named tensors, then row-major float64 blobs.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'M', 'V', 'G', 'K'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_string(std::istream& in) {
  std::string s(read_u32(in), '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}
void write_blob(std::ostream& out, const Matrix& m) {
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      const Real v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
}
Matrix read_blob(std::istream& in, int rows, int cols) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Real v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      m(r, c) = v;
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& file, const ModelParams& params) {
  std::ofstream out(file, std::ios::binary);
  check_run(static_cast<bool>(out), "checkpoint: cannot open " + file.string() + " for writing");

  std::vector<std::pair<std::string, const Matrix*>> tensors;
  for_each_param(params, [&tensors](const Matrix& m, const std::string& name) {
    tensors.emplace_back(name, &m);
  });

  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<uint32_t>(params.encoders.size()));
  write_u32(out, static_cast<uint32_t>(params.encoders.front().size()));
  write_u32(out, params.sharing == EncoderSharing::kShared ? 1 : 0);
  write_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    write_string(out, name);
    write_u32(out, static_cast<uint32_t>(m->rows()));
    write_u32(out, static_cast<uint32_t>(m->cols()));
  }
  for (const auto& [name, m] : tensors) write_blob(out, *m);
  check_run(static_cast<bool>(out), "checkpoint: write failed: " + file.string());
}

ModelParams load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  check_run(static_cast<bool>(in), "checkpoint: cannot open " + file.string());
  char magic[4];
  in.read(magic, 4);
  check_run(in && std::memcmp(magic, kMagic, 4) == 0,
            "checkpoint: bad magic in " + file.string());
  check_run(read_u32(in) == kVersion, "checkpoint: unsupported version");

  const uint32_t stacks = read_u32(in);
  const uint32_t layers = read_u32(in);
  const uint32_t shared = read_u32(in);
  const uint32_t count = read_u32(in);

  std::vector<std::pair<std::string, std::pair<int, int>>> manifest(count);
  for (auto& [name, shape] : manifest) {
    name = read_string(in);
    shape.first = static_cast<int>(read_u32(in));
    shape.second = static_cast<int>(read_u32(in));
  }
  std::vector<Matrix> blobs;
  blobs.reserve(count);
  for (const auto& [name, shape] : manifest) {
    blobs.push_back(read_blob(in, shape.first, shape.second));
  }
  check_run(static_cast<bool>(in), "checkpoint: truncated file " + file.string());

  auto find = [&](const std::string& name) -> const Matrix& {
    for (size_t i = 0; i < manifest.size(); ++i) {
      if (manifest[i].first == name) return blobs[i];
    }
    throw RuntimeError("checkpoint: tensor missing: " + name);
  };
  auto has = [&](const std::string& name) {
    for (const auto& [n, s] : manifest) {
      if (n == name) return true;
    }
    return false;
  };

  ModelParams p;
  p.sharing = shared ? EncoderSharing::kShared : EncoderSharing::kDedicated;
  for (uint32_t s = 0; s < stacks; ++s) {
    std::vector<GcnLayer> stack;
    for (uint32_t l = 0; l < layers; ++l) {
      const std::string base = "encoder" + std::to_string(s) + ".layer" + std::to_string(l);
      stack.push_back({find(base + ".theta"), find(base + ".slope")});
    }
    p.encoders.push_back(std::move(stack));
  }
  for (int l = 0; l < 2; ++l) {
    const std::string nb = "node_head.layer" + std::to_string(l);
    const std::string gb = "graph_head.layer" + std::to_string(l);
    p.node_head[l] = {find(nb + ".weight"), find(nb + ".bias"), find(nb + ".slope")};
    p.graph_head[l] = {find(gb + ".weight"), find(gb + ".bias"), find(gb + ".slope")};
  }
  p.readout_weight = find("readout.weight");
  p.readout_slope = find("readout.slope");
  if (has("discriminator.bilinear")) p.bilinear = find("discriminator.bilinear");
  return p;
}

}  // namespace mvgrl
