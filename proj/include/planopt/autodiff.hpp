#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace planopt::ad {

/// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 as noted.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {}

  static Tensor row(std::span<const double> data);

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t count() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;
};

/// Learnable tensor with its gradient accumulator.
struct Param {
  Tensor value;
  Tensor grad;

  Param() = default;
  explicit Param(Tensor t) : value(std::move(t)), grad(value.rows, value.cols) {}
  void zero_grad() { std::fill(grad.v.begin(), grad.v.end(), 0.0); }
};

using NodeId = int32_t;

/// Reverse-mode tape over dense tensors. Values are computed eagerly as the
/// graph is built; backward() walks the tape once in reverse creation order,
/// which is a valid reverse topological order because operands always precede
/// their results (cycles are unrepresentable by construction).
///
/// A graph is built per training step and discarded. Single-writer; run
/// independent graphs on separate threads if needed.
class Graph {
 public:
  /// Constant leaf. Receives no gradient and prunes backward work above it.
  NodeId input(Tensor value);
  NodeId input_row(std::span<const double> data);

  /// Learnable leaf. After backward(), the node gradient is accumulated
  /// into p.grad. The param must outlive the graph.
  NodeId param(Param& p);

  NodeId matmul(NodeId a, NodeId b);        // (BxI)·(IxO)
  NodeId add(NodeId a, NodeId b);           // same shape
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);           // elementwise
  NodeId add_rowvec(NodeId a, NodeId row);  // broadcast 1xC over rows
  NodeId scale(NodeId a, double k);
  NodeId add_const(NodeId a, double k);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId softmax_rows(NodeId a);
  NodeId clamp(NodeId a, double lo, double hi);  // zero gradient outside [lo, hi]
  NodeId slice_cols(NodeId a, int begin, int len);
  NodeId concat_cols(std::span<const NodeId> parts);
  NodeId row_sum(NodeId a);      // BxC -> Bx1
  NodeId reduce_sum(NodeId a);   // -> 1x1
  NodeId reduce_mean(NodeId a);  // -> 1x1

  /// mu + exp(log_sigma) * eps with log_sigma a 1xD row broadcast over the
  /// batch. eps is externally sampled standard normal.
  NodeId gaussian_reparam(NodeId mu, NodeId log_sigma, NodeId eps);

  /// Per-row negative log-likelihood of y under N(mu, exp(log_sigma)^2);
  /// all operands Bx1, result Bx1.
  NodeId gaussian_nll(NodeId y, NodeId mu, NodeId log_sigma);

  const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].val; }
  const Tensor& gradient(NodeId id) const { return nodes_[static_cast<size_t>(id)].grad; }

  /// Reverse pass from a scalar loss. Gradients accumulate additively into
  /// bound Params (call Param::zero_grad between steps).
  void backward(NodeId loss);

 private:
  enum class Op : uint8_t {
    input,
    param,
    matmul,
    add,
    sub,
    mul,
    add_rowvec,
    affine_const,  // k0 * a + k1
    tanh,
    sigmoid,
    softmax_rows,
    clamp,
    slice_cols,
    concat_cols,
    row_sum,
    reduce_sum,
    reduce_mean,
    reparam,
    nll,
  };

  struct Node {
    Tensor val;
    Tensor grad;  // allocated lazily during backward
    Op op = Op::input;
    NodeId a = -1, b = -1, c = -1;
    double k0 = 0.0, k1 = 0.0;
    int i0 = 0;
    std::vector<NodeId> list;  // concat operands
    Param* bound = nullptr;
    bool needs_grad = false;
  };

  NodeId push(Node n);
  Node& at(NodeId id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& at(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
  Tensor& grad_buf(NodeId id);

  std::vector<Node> nodes_;
};

// Plain (non-graph) kernels shared with inference paths.
void matmul_accum(const Tensor& a, const Tensor& b, Tensor& out);
Tensor matmul_plain(const Tensor& a, const Tensor& b);

}  // namespace planopt::ad
