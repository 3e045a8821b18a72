#pragma once

#include <span>
#include <vector>

#include "planopt/autodiff.hpp"
#include "planopt/bytes.hpp"
#include "planopt/rng.hpp"

namespace planopt::nn {

/// Fully connected network with tanh hidden activations and a linear output
/// layer.  Weights use Glorot-uniform initialisation; the output layer is
/// additionally shrunk by 0.1 so freshly built networks start near zero.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::span<const int> layer_sizes, RngState& rng);

  /// Appends the network to `g` reading activations from node `x` (BxIn).
  /// With `frozen` the weights enter the graph as plain inputs, so backward
  /// passes leave their gradients untouched.
  ad::NodeId forward(ad::Graph& g, ad::NodeId x, bool frozen = false);

  /// Graph-free forward pass for a single input row.
  std::vector<double> forward_plain(std::span<const double> x) const;

  std::vector<ad::Param*> params();

  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }

  void serialize(io::ByteWriter& w) const;
  static Mlp deserialize(io::ByteReader& r);

 private:
  std::vector<int> sizes_;
  std::vector<ad::Param> weights_;  // per layer, fan_in x fan_out
  std::vector<ad::Param> biases_;   // per layer, 1 x fan_out
};

/// Adam with bias correction.  A step whose gradients contain a non-finite
/// value is skipped entirely (gradients are still cleared) and counted, so a
/// single bad batch cannot poison the moment estimates.
class Adam {
 public:
  Adam(std::vector<ad::Param*> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  /// Returns false when the update was skipped because of non-finite
  /// gradients.  Gradients are zeroed either way.
  bool step();

  size_t skipped() const { return skipped_; }

 private:
  std::vector<ad::Param*> params_;
  std::vector<ad::Tensor> m_;
  std::vector<ad::Tensor> v_;
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  size_t skipped_ = 0;
};

}  // namespace planopt::nn
