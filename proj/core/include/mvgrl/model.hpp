#pragma once

#include "mvgrl/graph.hpp"
#include "mvgrl/rng.hpp"
#include "mvgrl/tape.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace mvgrl {

enum class EncoderSharing { kDedicated, kShared };
enum class Pooling { kSum, kMean };
enum class DiscriminatorMode { kDot, kBilinear };

EncoderSharing encoder_sharing_from_string(const std::string& s);
Pooling pooling_from_string(const std::string& s);
DiscriminatorMode discriminator_mode_from_string(const std::string& s);
std::string to_string(EncoderSharing);
std::string to_string(Pooling);
std::string to_string(DiscriminatorMode);

/// Channel-shared PReLU slopes are stored as 1x1 matrices so every learnable
/// quantity is uniform for the tape, the optimizer, and the checkpoint.
struct GcnLayer {
  Matrix theta;        // d_in x d_h
  Matrix prelu_slope;  // 1 x 1
};

struct MlpLayer {
  Matrix weight;       // d x d
  Matrix bias;         // 1 x d, zero-initialized
  Matrix prelu_slope;  // 1 x 1
};

/// All learnable weights of the two-branch model. One encoder stack per view
/// in dedicated mode; a single stack aliased to every view in shared mode.
struct ModelParams {
  std::vector<std::vector<GcnLayer>> encoders;
  std::array<MlpLayer, 2> node_head;
  std::array<MlpLayer, 2> graph_head;
  Matrix readout_weight;  // (L*d_h) x d_h
  Matrix readout_slope;   // 1 x 1
  std::optional<Matrix> bilinear;  // d_h x d_h discriminator matrix
  EncoderSharing sharing = EncoderSharing::kDedicated;

  int layer_count() const { return static_cast<int>(encoders.front().size()); }
  int hidden_dim() const { return static_cast<int>(encoders.front().front().theta.cols()); }
  int input_dim() const { return static_cast<int>(encoders.front().front().theta.rows()); }
  int view_count() const { return static_cast<int>(encoders.size()); }

  /// Xavier-uniform weights, 0.25 PReLU slopes, zero biases.
  static ModelParams init(int n_views, int layers, int d_x, int d_h,
                          EncoderSharing sharing, DiscriminatorMode disc, uint64_t seed);

  /// Encoder stack index serving a given view (always 0 when shared).
  int encoder_for_view(int view) const {
    return sharing == EncoderSharing::kShared ? 0 : view;
  }
};

Matrix xavier_uniform(int fan_in, int fan_out, Rng& rng);

/// Visits every learnable matrix with its stable name, in registration
/// order. The same traversal drives tape registration, Adam, and the
/// checkpoint layout.
template <typename Params, typename Fn>
void for_each_param(Params& p, Fn&& fn) {
  for (size_t s = 0; s < p.encoders.size(); ++s) {
    for (size_t l = 0; l < p.encoders[s].size(); ++l) {
      const std::string base = "encoder" + std::to_string(s) + ".layer" + std::to_string(l);
      fn(p.encoders[s][l].theta, base + ".theta");
      fn(p.encoders[s][l].prelu_slope, base + ".slope");
    }
  }
  auto head = [&fn](auto& layers, const std::string& base) {
    for (int l = 0; l < 2; ++l) {
      const std::string b = base + ".layer" + std::to_string(l);
      fn(layers[l].weight, b + ".weight");
      fn(layers[l].bias, b + ".bias");
      fn(layers[l].prelu_slope, b + ".slope");
    }
  };
  head(p.node_head, "node_head");
  head(p.graph_head, "graph_head");
  fn(p.readout_weight, "readout.weight");
  fn(p.readout_slope, "readout.slope");
  if (p.bilinear) fn(*p.bilinear, "discriminator.bilinear");
}

/// Node ids of every parameter registered on a tape, mirroring ModelParams.
struct ParamIds {
  struct Layer { ad::NodeId theta, slope; };
  struct Head { ad::NodeId weight, bias, slope; };
  std::vector<std::vector<Layer>> encoders;
  std::array<Head, 2> node_head;
  std::array<Head, 2> graph_head;
  ad::NodeId readout_weight = -1;
  ad::NodeId readout_slope = -1;
  ad::NodeId bilinear = -1;  // -1 when absent
  std::vector<ad::NodeId> flat;
  std::vector<std::string> names;
};

ParamIds register_params(ad::Tape& tape, const ModelParams& params);

/// Tape subgraph of one encoder pass over one view.
struct EncodingIds {
  std::vector<ad::NodeId> z_layers;  // n x d_h each
  ad::NodeId h_nodes = -1;           // n x d_h, projected
  ad::NodeId h_graph = -1;           // 1 x d_h, projected
  ad::NodeId first_product = -1;     // X theta_1, reusable by the corruption path
  int num_nodes = 0;
};

/// sigma(V (X theta)) for one layer.
ad::NodeId build_gcn_layer(ad::Tape& tape, ad::NodeId x,
                           std::shared_ptr<const SparseMatrix> view,
                           ParamIds::Layer layer);

/// Pooled per-layer sums (or means), concatenated and projected: Eq-style
/// jumping-knowledge readout.
ad::NodeId build_readout(ad::Tape& tape, const std::vector<ad::NodeId>& z_layers,
                         ad::NodeId weight, ad::NodeId slope, Pooling pooling);

/// Two PReLU MLP layers (a projection head).
ad::NodeId build_projection_head(ad::Tape& tape, ad::NodeId x,
                                 const std::array<ParamIds::Head, 2>& head);

/// Full branch: L GCN layers, node projection head on the last layer,
/// readout + graph projection head.
EncodingIds build_encoding(ad::Tape& tape, const ParamIds& ids, int view_index,
                           ad::NodeId x, std::shared_ptr<const SparseMatrix> view,
                           Pooling pooling);

/// Branch over row-permuted features. Since permuting feature rows commutes
/// with the first weight multiply, the real branch's X theta_1 product is
/// reused through a row gather. Computes the graph representation only when
/// asked for.
EncodingIds build_corrupted_encoding(ad::Tape& tape, const ParamIds& ids, int view_index,
                                     const EncodingIds& real_branch,
                                     const std::vector<int>& permutation,
                                     std::shared_ptr<const SparseMatrix> view,
                                     Pooling pooling, bool with_graph_rep);

/// Values-only view of one encoded branch.
struct Encoding {
  std::vector<Matrix> z_layers;
  Matrix h_nodes;   // n x d_h
  Matrix h_graph;   // 1 x d_h
};

/// Runs one branch on a fresh tape and returns the values.
Encoding encode(const AttributedGraph& g, const SparseMatrix& view,
                const ModelParams& params, int view_index, Pooling pooling);

/// Discriminator score between a node representation and a graph
/// representation, dot or bilinear.
Real discriminate(const RowVector& h_node, const RowVector& h_graph,
                  DiscriminatorMode mode, const std::optional<Matrix>& bilinear);

/// Inference-time aggregation across views: elementwise sums of the
/// projected node and graph representations.
struct Embeddings {
  Matrix nodes;      // n x d_h
  RowVector graph;   // d_h
};
Embeddings infer_embeddings(const std::vector<Encoding>& encodings);

/// Flat binary checkpoint ("MVGK"), bit-exact round trip.
void save_checkpoint(const std::filesystem::path& file, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& file);

}  // namespace mvgrl
