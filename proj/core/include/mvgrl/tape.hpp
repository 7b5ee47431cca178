#pragma once

#include "mvgrl/common.hpp"
#include "mvgrl/sparse.hpp"

#include <memory>
#include <vector>

namespace mvgrl::ad {

enum class OpKind {
  kInput,
  kMatmul,
  kSpmm,            // constant sparse operator times dense
  kAdd,
  kAddBiasRow,      // matrix + broadcast 1 x d bias row
  kPrelu,           // learnable channel-shared slope (1 x 1 node)
  kSigmoid,
  kSoftplus,
  kLogSumExpRows,   // n x d -> n x 1
  kConcatCols,
  kSumRows,         // n x d -> 1 x d
  kScale,           // constant scalar factor
  kTranspose,
  kRowGather,
  kElementwiseMul,
  kRowL2Normalize,
};

const char* op_name(OpKind op);

using NodeId = int;

struct Node {
  OpKind op = OpKind::kInput;
  std::vector<NodeId> inputs;
  int rows = 0;
  int cols = 0;
  Matrix value;        // inputs: set at creation; ops: filled by forward()
  Matrix grad;         // filled by backward()
  bool is_param = false;
  bool on_param_path = false;  // some parameter feeds this node
  bool evaluated = false;

  double factor = 1.0;             // kScale
  std::vector<int> gather;         // kRowGather row indices
  std::shared_ptr<const SparseMatrix> sparse;  // kSpmm operator
  Matrix spmm_dense;  // densified operator when it is not actually sparse
};

/// Reverse-mode autodiff over dense matrices. Nodes are appended in
/// topological order; a tape is confined to a single thread.
class Tape {
 public:
  NodeId input(Matrix value, bool is_param = false);
  NodeId constant(Matrix value) { return input(std::move(value), false); }
  NodeId scalar_input(Real value, bool is_param = false);

  NodeId matmul(NodeId a, NodeId b);
  NodeId spmm(std::shared_ptr<const SparseMatrix> s, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId add_bias_row(NodeId a, NodeId bias);
  NodeId prelu(NodeId x, NodeId slope);
  NodeId sigmoid(NodeId x);
  NodeId softplus(NodeId x);
  NodeId log_sum_exp_rows(NodeId x);
  NodeId concat_cols(std::vector<NodeId> xs);
  NodeId sum_rows(NodeId x);
  NodeId scale(NodeId x, Real factor);
  NodeId transpose(NodeId x);
  NodeId row_gather(NodeId x, std::vector<int> rows);
  NodeId elementwise_mul(NodeId a, NodeId b);
  NodeId row_l2_normalize(NodeId x);

  /// Evaluates every node not yet evaluated, in id order.
  void forward();

  /// Zeroes gradients, seeds d(loss)/d(loss) = 1, and accumulates exact
  /// adjoints for everything on a parameter path. loss must be 1 x 1.
  void backward(NodeId loss);

  const Matrix& value(NodeId id) const { return nodes_[id].value; }
  Real scalar_value(NodeId id) const { return nodes_[id].value(0, 0); }
  /// Gradient buffer of a node after backward(); zero matrix if untouched.
  const Matrix& grad(NodeId id) const;

  /// Replaces an input node's value and invalidates downstream results.
  void set_input(NodeId id, Matrix value);

  std::vector<NodeId> parameters() const;
  int rows(NodeId id) const { return nodes_[id].rows; }
  int cols(NodeId id) const { return nodes_[id].cols; }
  size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_[id]; }

  /// Central-difference validation of backward(). Samples up to
  /// coords_per_param coordinates of every parameter and returns the largest
  /// relative error |ad - fd| / max(1e-12, |ad| + |fd|).
  Real finite_difference_check(NodeId loss, Real eps, uint64_t seed,
                               int coords_per_param = 6);

  /// The exact coordinates finite_difference_check(seed, coords_per_param)
  /// will probe, per parameter.
  std::vector<std::pair<NodeId, std::vector<int>>> fd_sample_plan(
      uint64_t seed, int coords_per_param = 6) const;

 private:
  NodeId push(Node node);
  void eval(Node& node);
  void accumulate_adjoints(NodeId id);
  Matrix& grad_buffer(NodeId id);

  std::vector<Node> nodes_;
  Matrix zero_;  // returned for untouched grads
};

}  // namespace mvgrl::ad
