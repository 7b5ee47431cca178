#include "mvgrl/tape.hpp"

#include "mvgrl/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mvgrl::ad {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kInput: return "input";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kSpmm: return "spmm";
    case OpKind::kAdd: return "add";
    case OpKind::kAddBiasRow: return "add_bias_row";
    case OpKind::kPrelu: return "prelu";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftplus: return "softplus";
    case OpKind::kLogSumExpRows: return "log_sum_exp_rows";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kSumRows: return "sum_rows";
    case OpKind::kScale: return "scale";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kRowGather: return "row_gather";
    case OpKind::kElementwiseMul: return "elementwise_mul";
    case OpKind::kRowL2Normalize: return "row_l2_normalize";
  }
  return "?";
}

namespace {

[[noreturn]] void shape_fail(OpKind op, const std::string& detail) {
  throw ValidationError(std::string("tape: shape mismatch at ") + op_name(op) + ": " + detail);
}

std::string shape_str(int r, int c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

Real softplus_scalar(Real x) {
  if (x > 30.0) return x;  // linear regime
  return std::log1p(std::exp(x));
}

}  // namespace

NodeId Tape::push(Node node) {
  for (NodeId in : node.inputs) {
    check_arg(in >= 0 && in < static_cast<NodeId>(nodes_.size()),
              "tape: input node id out of range");
    node.on_param_path = node.on_param_path || nodes_[in].on_param_path;
  }
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

NodeId Tape::input(Matrix value, bool is_param) {
  Node n;
  n.op = OpKind::kInput;
  n.rows = static_cast<int>(value.rows());
  n.cols = static_cast<int>(value.cols());
  n.value = std::move(value);
  n.is_param = is_param;
  n.on_param_path = is_param;
  n.evaluated = true;
  return push(std::move(n));
}

NodeId Tape::scalar_input(Real value, bool is_param) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return input(std::move(m), is_param);
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  if (nodes_[a].cols != nodes_[b].rows) {
    shape_fail(OpKind::kMatmul, shape_str(nodes_[a].rows, nodes_[a].cols) + " * " +
                                    shape_str(nodes_[b].rows, nodes_[b].cols));
  }
  Node n;
  n.op = OpKind::kMatmul;
  n.inputs = {a, b};
  n.rows = nodes_[a].rows;
  n.cols = nodes_[b].cols;
  return push(std::move(n));
}

NodeId Tape::spmm(std::shared_ptr<const SparseMatrix> s, NodeId b) {
  check_arg(s != nullptr, "tape: spmm operator is null");
  if (s->n_cols != nodes_[b].rows) {
    shape_fail(OpKind::kSpmm, shape_str(s->n_rows, s->n_cols) + " * " +
                                  shape_str(nodes_[b].rows, nodes_[b].cols));
  }
  Node n;
  n.op = OpKind::kSpmm;
  n.inputs = {b};
  n.rows = s->n_rows;
  n.cols = nodes_[b].cols;
  n.sparse = std::move(s);
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  if (nodes_[a].rows != nodes_[b].rows || nodes_[a].cols != nodes_[b].cols) {
    shape_fail(OpKind::kAdd, shape_str(nodes_[a].rows, nodes_[a].cols) + " + " +
                                 shape_str(nodes_[b].rows, nodes_[b].cols));
  }
  Node n;
  n.op = OpKind::kAdd;
  n.inputs = {a, b};
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  return push(std::move(n));
}

NodeId Tape::add_bias_row(NodeId a, NodeId bias) {
  if (nodes_[bias].rows != 1 || nodes_[bias].cols != nodes_[a].cols) {
    shape_fail(OpKind::kAddBiasRow, shape_str(nodes_[a].rows, nodes_[a].cols) + " + bias " +
                                        shape_str(nodes_[bias].rows, nodes_[bias].cols));
  }
  Node n;
  n.op = OpKind::kAddBiasRow;
  n.inputs = {a, bias};
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  return push(std::move(n));
}

NodeId Tape::prelu(NodeId x, NodeId slope) {
  if (nodes_[slope].rows != 1 || nodes_[slope].cols != 1) {
    shape_fail(OpKind::kPrelu, "slope must be 1x1, got " +
                                   shape_str(nodes_[slope].rows, nodes_[slope].cols));
  }
  Node n;
  n.op = OpKind::kPrelu;
  n.inputs = {x, slope};
  n.rows = nodes_[x].rows;
  n.cols = nodes_[x].cols;
  return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId x) {
  Node n;
  n.op = OpKind::kSigmoid;
  n.inputs = {x};
  n.rows = nodes_[x].rows;
  n.cols = nodes_[x].cols;
  return push(std::move(n));
}

NodeId Tape::softplus(NodeId x) {
  Node n;
  n.op = OpKind::kSoftplus;
  n.inputs = {x};
  n.rows = nodes_[x].rows;
  n.cols = nodes_[x].cols;
  return push(std::move(n));
}

NodeId Tape::log_sum_exp_rows(NodeId x) {
  Node n;
  n.op = OpKind::kLogSumExpRows;
  n.inputs = {x};
  n.rows = nodes_[x].rows;
  n.cols = 1;
  return push(std::move(n));
}

NodeId Tape::concat_cols(std::vector<NodeId> xs) {
  check_arg(!xs.empty(), "tape: concat_cols needs at least one input");
  int cols = 0;
  for (NodeId x : xs) {
    if (nodes_[x].rows != nodes_[xs[0]].rows) {
      shape_fail(OpKind::kConcatCols, "row counts differ: " +
                                          shape_str(nodes_[xs[0]].rows, nodes_[xs[0]].cols) +
                                          " vs " + shape_str(nodes_[x].rows, nodes_[x].cols));
    }
    cols += nodes_[x].cols;
  }
  Node n;
  n.op = OpKind::kConcatCols;
  n.rows = nodes_[xs[0]].rows;
  n.cols = cols;
  n.inputs = std::move(xs);
  return push(std::move(n));
}

NodeId Tape::sum_rows(NodeId x) {
  Node n;
  n.op = OpKind::kSumRows;
  n.inputs = {x};
  n.rows = 1;
  n.cols = nodes_[x].cols;
  return push(std::move(n));
}

NodeId Tape::scale(NodeId x, Real factor) {
  Node n;
  n.op = OpKind::kScale;
  n.inputs = {x};
  n.rows = nodes_[x].rows;
  n.cols = nodes_[x].cols;
  n.factor = factor;
  return push(std::move(n));
}

NodeId Tape::transpose(NodeId x) {
  Node n;
  n.op = OpKind::kTranspose;
  n.inputs = {x};
  n.rows = nodes_[x].cols;
  n.cols = nodes_[x].rows;
  return push(std::move(n));
}

NodeId Tape::row_gather(NodeId x, std::vector<int> rows) {
  for (int r : rows) {
    check_arg(r >= 0 && r < nodes_[x].rows, "tape: row_gather index out of range");
  }
  Node n;
  n.op = OpKind::kRowGather;
  n.inputs = {x};
  n.rows = static_cast<int>(rows.size());
  n.cols = nodes_[x].cols;
  n.gather = std::move(rows);
  return push(std::move(n));
}

NodeId Tape::elementwise_mul(NodeId a, NodeId b) {
  if (nodes_[a].rows != nodes_[b].rows || nodes_[a].cols != nodes_[b].cols) {
    shape_fail(OpKind::kElementwiseMul, shape_str(nodes_[a].rows, nodes_[a].cols) + " . " +
                                            shape_str(nodes_[b].rows, nodes_[b].cols));
  }
  Node n;
  n.op = OpKind::kElementwiseMul;
  n.inputs = {a, b};
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  return push(std::move(n));
}

NodeId Tape::row_l2_normalize(NodeId x) {
  Node n;
  n.op = OpKind::kRowL2Normalize;
  n.inputs = {x};
  n.rows = nodes_[x].rows;
  n.cols = nodes_[x].cols;
  return push(std::move(n));
}

void Tape::eval(Node& n) {
  auto& in = nodes_;
  switch (n.op) {
    case OpKind::kInput:
      break;
    case OpKind::kMatmul:
      n.value.noalias() = in[n.inputs[0]].value * in[n.inputs[1]].value;
      break;
    case OpKind::kSpmm:
      // A diffusion stored without sparsification is dense in CSR clothing;
      // route it through GEMM instead of the scatter loop.
      if (n.spmm_dense.size() == 0 &&
          n.sparse->nnz() > 0.25 * n.sparse->n_rows * n.sparse->n_cols) {
        n.spmm_dense = n.sparse->to_dense();
      }
      if (n.spmm_dense.size() > 0) {
        n.value.noalias() = n.spmm_dense * in[n.inputs[0]].value;
      } else {
        n.value = n.sparse->multiply(in[n.inputs[0]].value);
      }
      break;
    case OpKind::kAdd:
      n.value = in[n.inputs[0]].value + in[n.inputs[1]].value;
      break;
    case OpKind::kAddBiasRow:
      n.value = in[n.inputs[0]].value.rowwise() + in[n.inputs[1]].value.row(0);
      break;
    case OpKind::kPrelu: {
      const Matrix& x = in[n.inputs[0]].value;
      const Real a = in[n.inputs[1]].value(0, 0);
      n.value = (x.array() > 0.0).select(x, a * x);
      break;
    }
    case OpKind::kSigmoid:
      n.value = (1.0 / (1.0 + (-in[n.inputs[0]].value.array()).exp())).matrix();
      break;
    case OpKind::kSoftplus:
      n.value = in[n.inputs[0]].value.unaryExpr([](Real x) { return softplus_scalar(x); });
      break;
    case OpKind::kLogSumExpRows: {
      const Matrix& x = in[n.inputs[0]].value;
      n.value.resize(x.rows(), 1);
      for (int r = 0; r < x.rows(); ++r) {
        const Real m = x.row(r).maxCoeff();
        n.value(r, 0) = m + std::log((x.row(r).array() - m).exp().sum());
      }
      break;
    }
    case OpKind::kConcatCols: {
      n.value.resize(n.rows, n.cols);
      int off = 0;
      for (NodeId id : n.inputs) {
        n.value.middleCols(off, in[id].cols) = in[id].value;
        off += in[id].cols;
      }
      break;
    }
    case OpKind::kSumRows:
      n.value = in[n.inputs[0]].value.colwise().sum();
      break;
    case OpKind::kScale:
      n.value = n.factor * in[n.inputs[0]].value;
      break;
    case OpKind::kTranspose:
      n.value = in[n.inputs[0]].value.transpose();
      break;
    case OpKind::kRowGather: {
      const Matrix& x = in[n.inputs[0]].value;
      n.value.resize(n.rows, n.cols);
      for (int r = 0; r < n.rows; ++r) n.value.row(r) = x.row(n.gather[r]);
      break;
    }
    case OpKind::kElementwiseMul:
      n.value = in[n.inputs[0]].value.cwiseProduct(in[n.inputs[1]].value);
      break;
    case OpKind::kRowL2Normalize: {
      const Matrix& x = in[n.inputs[0]].value;
      n.value.resize(x.rows(), x.cols());
      for (int r = 0; r < x.rows(); ++r) {
        const Real norm = std::max(x.row(r).norm(), 1e-12);
        n.value.row(r) = x.row(r) / norm;
      }
      break;
    }
  }
  n.evaluated = true;
}

void Tape::forward() {
  for (auto& n : nodes_) {
    if (!n.evaluated) eval(n);
  }
}

Matrix& Tape::grad_buffer(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.rows() != n.rows || n.grad.cols() != n.cols) {
    n.grad = Matrix::Zero(n.rows, n.cols);
  }
  return n.grad;
}

const Matrix& Tape::grad(NodeId id) const {
  const Node& n = nodes_[id];
  if (n.grad.rows() == n.rows && n.grad.cols() == n.cols) return n.grad;
  const_cast<Tape*>(this)->zero_ = Matrix::Zero(n.rows, n.cols);
  return zero_;
}

void Tape::accumulate_adjoints(NodeId id) {
  Node& n = nodes_[id];
  const Matrix& g = n.grad;
  auto& in = nodes_;
  auto wants = [&](int slot) { return in[n.inputs[slot]].on_param_path; };

  switch (n.op) {
    case OpKind::kInput:
      break;
    case OpKind::kMatmul:
      if (wants(0)) grad_buffer(n.inputs[0]).noalias() += g * in[n.inputs[1]].value.transpose();
      if (wants(1)) grad_buffer(n.inputs[1]).noalias() += in[n.inputs[0]].value.transpose() * g;
      break;
    case OpKind::kSpmm:
      if (wants(0)) {
        if (n.spmm_dense.size() > 0) {
          grad_buffer(n.inputs[0]).noalias() += n.spmm_dense.transpose() * g;
        } else {
          grad_buffer(n.inputs[0]) += n.sparse->multiply_transposed(g);
        }
      }
      break;
    case OpKind::kAdd:
      if (wants(0)) grad_buffer(n.inputs[0]) += g;
      if (wants(1)) grad_buffer(n.inputs[1]) += g;
      break;
    case OpKind::kAddBiasRow:
      if (wants(0)) grad_buffer(n.inputs[0]) += g;
      if (wants(1)) grad_buffer(n.inputs[1]) += g.colwise().sum();
      break;
    case OpKind::kPrelu: {
      const Matrix& x = in[n.inputs[0]].value;
      const Real a = in[n.inputs[1]].value(0, 0);
      if (wants(0)) {
        grad_buffer(n.inputs[0]).array() +=
            g.array() * (x.array() > 0.0).select(Matrix::Ones(x.rows(), x.cols()), a * Matrix::Ones(x.rows(), x.cols())).array();
      }
      if (wants(1)) {
        grad_buffer(n.inputs[1])(0, 0) += (g.array() * (x.array() > 0.0).select(Matrix::Zero(x.rows(), x.cols()), x).array()).sum();
      }
      break;
    }
    case OpKind::kSigmoid:
      if (wants(0)) {
        grad_buffer(n.inputs[0]).array() += g.array() * n.value.array() * (1.0 - n.value.array());
      }
      break;
    case OpKind::kSoftplus:
      if (wants(0)) {
        const Matrix& x = in[n.inputs[0]].value;
        grad_buffer(n.inputs[0]).array() += g.array() / (1.0 + (-x.array()).exp());
      }
      break;
    case OpKind::kLogSumExpRows:
      if (wants(0)) {
        const Matrix& x = in[n.inputs[0]].value;
        Matrix& gx = grad_buffer(n.inputs[0]);
        for (int r = 0; r < x.rows(); ++r) {
          gx.row(r).array() += g(r, 0) * (x.row(r).array() - n.value(r, 0)).exp();
        }
      }
      break;
    case OpKind::kConcatCols: {
      int off = 0;
      for (NodeId id2 : n.inputs) {
        if (in[id2].on_param_path) grad_buffer(id2) += g.middleCols(off, in[id2].cols);
        off += in[id2].cols;
      }
      break;
    }
    case OpKind::kSumRows:
      if (wants(0)) grad_buffer(n.inputs[0]).rowwise() += g.row(0);
      break;
    case OpKind::kScale:
      if (wants(0)) grad_buffer(n.inputs[0]) += n.factor * g;
      break;
    case OpKind::kTranspose:
      if (wants(0)) grad_buffer(n.inputs[0]) += g.transpose();
      break;
    case OpKind::kRowGather:
      if (wants(0)) {
        Matrix& gx = grad_buffer(n.inputs[0]);
        for (int r = 0; r < n.rows; ++r) gx.row(n.gather[r]) += g.row(r);
      }
      break;
    case OpKind::kElementwiseMul:
      if (wants(0)) grad_buffer(n.inputs[0]).array() += g.array() * in[n.inputs[1]].value.array();
      if (wants(1)) grad_buffer(n.inputs[1]).array() += g.array() * in[n.inputs[0]].value.array();
      break;
    case OpKind::kRowL2Normalize:
      if (wants(0)) {
        const Matrix& x = in[n.inputs[0]].value;
        Matrix& gx = grad_buffer(n.inputs[0]);
        for (int r = 0; r < x.rows(); ++r) {
          const Real norm = std::max(x.row(r).norm(), 1e-12);
          const Real dot = n.value.row(r).dot(g.row(r));
          gx.row(r) += (g.row(r) - dot * n.value.row(r)) / norm;
        }
      }
      break;
  }
}

void Tape::backward(NodeId loss) {
  check_arg(loss >= 0 && loss < static_cast<NodeId>(nodes_.size()), "tape: bad loss id");
  check_arg(nodes_[loss].rows == 1 && nodes_[loss].cols == 1,
            "tape: backward needs a scalar (1x1) loss, got " +
                shape_str(nodes_[loss].rows, nodes_[loss].cols));
  forward();

  for (auto& n : nodes_) {
    if (n.grad.size() > 0) n.grad.setZero();
  }
  // Untouched parameters report zero gradients.
  for (auto& n : nodes_) {
    if (n.is_param) grad_buffer(static_cast<NodeId>(&n - nodes_.data()));
  }

  std::vector<char> live(nodes_.size(), 0);
  live[loss] = 1;
  for (NodeId id = loss; id >= 0; --id) {
    if (!live[id] || !nodes_[id].on_param_path) continue;
    for (NodeId in : nodes_[id].inputs) live[in] = 1;
  }

  grad_buffer(loss)(0, 0) = 1.0;
  for (NodeId id = loss; id >= 0; --id) {
    if (live[id] && nodes_[id].on_param_path && nodes_[id].op != OpKind::kInput) {
      accumulate_adjoints(id);
    }
  }
}

void Tape::set_input(NodeId id, Matrix value) {
  Node& n = nodes_[id];
  check_arg(n.op == OpKind::kInput, "tape: set_input on a non-input node");
  check_arg(value.rows() == n.rows && value.cols() == n.cols,
            "tape: set_input shape mismatch");
  n.value = std::move(value);
  for (size_t i = id + 1; i < nodes_.size(); ++i) {
    if (nodes_[i].op != OpKind::kInput) nodes_[i].evaluated = false;
  }
}

std::vector<NodeId> Tape::parameters() const {
  std::vector<NodeId> out;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_param) out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

std::vector<std::pair<NodeId, std::vector<int>>> Tape::fd_sample_plan(
    uint64_t seed, int coords_per_param) const {
  std::vector<std::pair<NodeId, std::vector<int>>> plan;
  Rng rng = Rng::derived(seed, {0x66646368u});
  for (NodeId p : parameters()) {
    const int count = static_cast<int>(nodes_[p].value.size());
    std::vector<int> coords;
    if (count <= coords_per_param) {
      coords.resize(count);
      for (int i = 0; i < count; ++i) coords[i] = i;
    } else {
      coords = rng.sample_without_replacement(count, coords_per_param);
    }
    plan.emplace_back(p, std::move(coords));
  }
  return plan;
}

Real Tape::finite_difference_check(NodeId loss, Real eps, uint64_t seed,
                                   int coords_per_param) {
  check_arg(eps > 0.0, "tape: eps must be positive");
  backward(loss);

  Real worst = 0.0;
  for (const auto& [p, coords] : fd_sample_plan(seed, coords_per_param)) {
    const Matrix analytic = nodes_[p].grad;
    for (int c : coords) {
      Matrix perturbed = nodes_[p].value;
      const Real original = perturbed(c);
      perturbed(c) = original + eps;
      set_input(p, perturbed);
      forward();
      const Real up = scalar_value(loss);
      perturbed(c) = original - eps;
      set_input(p, perturbed);
      forward();
      const Real down = scalar_value(loss);
      perturbed(c) = original;
      set_input(p, perturbed);

      const Real fd = (up - down) / (2.0 * eps);
      const Real ad = analytic(c);
      const Real rel = std::abs(ad - fd) / std::max(1e-12, std::abs(ad) + std::abs(fd));
      worst = std::max(worst, rel);
    }
  }
  forward();
  return worst;
}

}  // namespace mvgrl::ad
