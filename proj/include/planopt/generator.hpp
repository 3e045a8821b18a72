#pragma once

#include <memory>
#include <span>
#include <vector>

#include "planopt/autodiff.hpp"
#include "planopt/nn.hpp"
#include "planopt/param_space.hpp"
#include "planopt/rng.hpp"

namespace planopt {

/// Log-sigma bounds applied wherever a Gaussian scale parameter appears
/// (generator noise and critic variance head).  Keeps likelihoods away from
/// degenerate zero-variance solutions.
inline constexpr double kLogSigmaLo = -5.0;
inline constexpr double kLogSigmaHi = 2.0;

/// Soft bound on the encoder's raw-space means: the output layer is passed
/// through b·tanh(z/b).  Near zero this is the identity; far out it caps the
/// means so the downstream projection never saturates beyond recovery.
/// Without it the generator can chase a critic slope into extreme corners
/// where projection gradients vanish and training locks up.  The bound
/// depends on the projection applied to the block:
///   - softmax (simplex blocks): a spread of 2b between logits already puts
///     ~0.95 of the mass on one coordinate.  Anything sharper is effectively
///     deterministic, and deterministic sampling policies degrade abruptly on
///     instances that need an occasional off-axis move (a walker pinned
///     against a wall times out), so the cap keeps late-training sharpening
///     in the benign range.
///   - sigmoid (interval blocks): values near ±b map to roughly the 2nd/98th
///     percentile of the interval.  Covering the ends of the range matters
///     more here, and extreme per-coordinate values fail soft (one odd
///     heuristic entry, not a degenerate sampler), so the cap is looser.
inline constexpr double kSimplexMeanBound = 2.0;
inline constexpr double kIntervalMeanBound = 4.0;

constexpr double raw_mean_bound(ParamBlock::Kind kind) {
  return kind == ParamBlock::Kind::simplex ? kSimplexMeanBound : kIntervalMeanBound;
}

/// Per-flat-coordinate mean bounds for a composite space.
std::vector<double> raw_mean_bounds(const CompositeSpace& space);

/// Anything that can turn an encoded problem instance into a concrete
/// parameter assignment.  Stochastic implementations draw from `rng`;
/// deterministic ones ignore it.
class ParamGenerator {
 public:
  virtual ~ParamGenerator() = default;
  virtual Assignment sample(std::span<const double> encoding, RngState& rng) const = 0;
};

/// Returns a fixed assignment regardless of the instance — the deterministic
/// unconditional generator produced by the population-based baseline.
class FixedGenerator : public ParamGenerator {
 public:
  FixedGenerator(CompositeSpace space, Assignment value);
  Assignment sample(std::span<const double> encoding, RngState& rng) const override;
  const CompositeSpace& space() const { return space_; }
  const Assignment& value() const { return value_; }

 private:
  CompositeSpace space_;
  Assignment value_;
};

/// Draws uniformly from the parameter space — the no-learning reference.
class UniformGenerator : public ParamGenerator {
 public:
  explicit UniformGenerator(CompositeSpace space) : space_(std::move(space)) {}
  Assignment sample(std::span<const double> encoding, RngState& rng) const override;
  const CompositeSpace& space() const { return space_; }

 private:
  CompositeSpace space_;
};

/// Conditional stochastic generator: an encoder network maps the instance
/// encoding to the mean of a diagonal Gaussian over raw (unconstrained)
/// parameters; a learned per-coordinate log-sigma sets the noise scale.
/// Raw draws are projected onto the parameter space, so every sample is a
/// valid assignment by construction.
class PolicyGenerator : public ParamGenerator {
 public:
  /// Fresh policy for a space, conditioning on `encoding_dim` features.
  PolicyGenerator(CompositeSpace space, int encoding_dim, RngState& rng);
  /// Rebuild from checkpoint parts.
  PolicyGenerator(CompositeSpace space, nn::Mlp encoder, ad::Tensor log_sigma);

  Assignment sample(std::span<const double> encoding, RngState& rng) const override;

  /// Raw-space draw before projection (what the replay buffer stores).
  std::vector<double> sample_raw(std::span<const double> encoding, RngState& rng) const;

  /// Appends the encoder plus the soft mean bound to `g` for a batch of
  /// encodings (BxE), returning the BxF raw-space means with gradients
  /// flowing into the encoder parameters.
  ad::NodeId mean_graph(ad::Graph& g, ad::NodeId encodings);

  /// Plain-vector version of mean_graph for a single encoding.
  std::vector<double> mean_plain(std::span<const double> encoding) const;

  const CompositeSpace& space() const { return space_; }
  nn::Mlp& encoder() { return encoder_; }
  const nn::Mlp& encoder() const { return encoder_; }
  ad::Param& log_sigma() { return log_sigma_; }
  const ad::Param& log_sigma() const { return log_sigma_; }

 private:
  CompositeSpace space_;
  nn::Mlp encoder_;
  ad::Param log_sigma_;  // 1 x flat_dim
};

/// Objective model: predicts a Gaussian over the planner objective from the
/// instance encoding and the projected candidate features.  The mean head
/// drives generator updates; the variance head only shapes the likelihood.
class Critic {
 public:
  struct Heads {
    ad::NodeId mu;         // Bx1
    ad::NodeId log_sigma;  // Bx1, clamped
  };

  Critic(int encoding_dim, int flat_dim, RngState& rng);
  explicit Critic(nn::Mlp net) : net_(std::move(net)) {}

  /// Appends the critic to `g` on a batch of encodings (BxE) and projected
  /// features (BxF).  With `frozen` the weights do not accumulate gradients.
  Heads forward(ad::Graph& g, ad::NodeId encodings, ad::NodeId features, bool frozen = false);

  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }

 private:
  nn::Mlp net_;
};

/// Appends the raw→feature projection to the graph: softmax over simplex
/// blocks, sigmoid over interval blocks.  Feature scale is [0, 1] regardless
/// of interval bounds, which keeps network inputs comparable across blocks;
/// the affine stretch to [low, high] is invertible, so no information is lost.
ad::NodeId project_features(ad::Graph& g, const CompositeSpace& space, ad::NodeId raw);

/// Plain-vector version of project_features for a single raw draw.
std::vector<double> project_features_plain(const CompositeSpace& space,
                                           std::span<const double> raw);

}  // namespace planopt
