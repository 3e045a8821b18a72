#include "planopt/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace planopt {

namespace {

const int kHidden = 64;

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<int> encoder_sizes(int encoding_dim, int flat_dim) {
  return {encoding_dim, kHidden, kHidden, flat_dim};
}

}  // namespace

FixedGenerator::FixedGenerator(CompositeSpace space, Assignment value)
    : space_(std::move(space)), value_(std::move(value)) {
  if (auto bad = validate(space_, value_)) {
    throw std::invalid_argument("fixed generator: " + bad->message);
  }
}

Assignment FixedGenerator::sample(std::span<const double>, RngState&) const { return value_; }

Assignment UniformGenerator::sample(std::span<const double>, RngState& rng) const {
  return sample_uniform(space_, 1, rng).front();
}

std::vector<double> raw_mean_bounds(const CompositeSpace& space) {
  std::vector<double> bounds;
  bounds.reserve(space.flat_dim());
  for (const auto& block : space.blocks) {
    bounds.insert(bounds.end(), block.dim, raw_mean_bound(block.kind));
  }
  return bounds;
}

PolicyGenerator::PolicyGenerator(CompositeSpace space, int encoding_dim, RngState& rng)
    : space_(std::move(space)) {
  const auto sizes = encoder_sizes(encoding_dim, space_.flat_dim());
  encoder_ = nn::Mlp(sizes, rng);
  // Start with moderate exploration noise (sigma ≈ 0.6).  Starting at
  // sigma = 1 floods the projection with near-corner samples, which makes the
  // early replay data uninformative.
  log_sigma_ = ad::Param(ad::Tensor(1, space_.flat_dim()));
  std::fill(log_sigma_.value.v.begin(), log_sigma_.value.v.end(), -0.5);
}

PolicyGenerator::PolicyGenerator(CompositeSpace space, nn::Mlp encoder, ad::Tensor log_sigma)
    : space_(std::move(space)), encoder_(std::move(encoder)), log_sigma_(std::move(log_sigma)) {
  if (encoder_.out_dim() != space_.flat_dim() ||
      log_sigma_.value.cols != space_.flat_dim() || log_sigma_.value.rows != 1) {
    throw std::invalid_argument("policy generator: encoder/log-sigma shape does not match space");
  }
}

std::vector<double> PolicyGenerator::sample_raw(std::span<const double> encoding,
                                                RngState& rng) const {
  std::vector<double> raw = mean_plain(encoding);
  for (int i = 0; i < static_cast<int>(raw.size()); ++i) {
    const double ls = std::clamp(log_sigma_.value.at(0, i), kLogSigmaLo, kLogSigmaHi);
    raw[i] += std::exp(ls) * rng.normal();
  }
  return raw;
}

ad::NodeId PolicyGenerator::mean_graph(ad::Graph& g, ad::NodeId encodings) {
  const ad::NodeId z = encoder_.forward(g, encodings, /*frozen=*/false);
  std::vector<ad::NodeId> parts;
  parts.reserve(space_.blocks.size());
  int offset = 0;
  for (const auto& block : space_.blocks) {
    const double b = raw_mean_bound(block.kind);
    const ad::NodeId piece = g.slice_cols(z, offset, block.dim);
    parts.push_back(g.scale(g.tanh(g.scale(piece, 1.0 / b)), b));
    offset += block.dim;
  }
  if (parts.size() == 1) return parts.front();
  return g.concat_cols(parts);
}

std::vector<double> PolicyGenerator::mean_plain(std::span<const double> encoding) const {
  std::vector<double> raw = encoder_.forward_plain(encoding);
  const std::vector<double> bounds = raw_mean_bounds(space_);
  for (size_t i = 0; i < raw.size(); ++i) {
    raw[i] = bounds[i] * std::tanh(raw[i] / bounds[i]);
  }
  return raw;
}

Assignment PolicyGenerator::sample(std::span<const double> encoding, RngState& rng) const {
  return project(space_, sample_raw(encoding, rng));
}

Critic::Critic(int encoding_dim, int flat_dim, RngState& rng) {
  const std::vector<int> sizes = {encoding_dim + flat_dim, kHidden, kHidden, 2};
  net_ = nn::Mlp(sizes, rng);
}

Critic::Heads Critic::forward(ad::Graph& g, ad::NodeId encodings, ad::NodeId features,
                              bool frozen) {
  const std::vector<ad::NodeId> parts = {encodings, features};
  const ad::NodeId x = g.concat_cols(parts);
  const ad::NodeId out = net_.forward(g, x, frozen);
  Heads heads;
  heads.mu = g.slice_cols(out, 0, 1);
  heads.log_sigma = g.clamp(g.slice_cols(out, 1, 1), kLogSigmaLo, kLogSigmaHi);
  return heads;
}

ad::NodeId project_features(ad::Graph& g, const CompositeSpace& space, ad::NodeId raw) {
  std::vector<ad::NodeId> parts;
  parts.reserve(space.blocks.size());
  int offset = 0;
  for (const auto& block : space.blocks) {
    const ad::NodeId piece = g.slice_cols(raw, offset, block.dim);
    if (block.kind == ParamBlock::Kind::simplex) {
      parts.push_back(g.softmax_rows(piece));
    } else {
      parts.push_back(g.sigmoid(piece));
    }
    offset += block.dim;
  }
  if (parts.size() == 1) return parts.front();
  return g.concat_cols(parts);
}

std::vector<double> project_features_plain(const CompositeSpace& space,
                                           std::span<const double> raw) {
  if (static_cast<int>(raw.size()) != space.flat_dim()) {
    throw std::invalid_argument("project_features: raw length does not match space");
  }
  std::vector<double> out(raw.size());
  int offset = 0;
  for (const auto& block : space.blocks) {
    if (block.kind == ParamBlock::Kind::simplex) {
      const double m = *std::max_element(raw.begin() + offset, raw.begin() + offset + block.dim);
      double sum = 0.0;
      for (int i = 0; i < block.dim; ++i) {
        out[offset + i] = std::exp(raw[offset + i] - m);
        sum += out[offset + i];
      }
      for (int i = 0; i < block.dim; ++i) out[offset + i] /= sum;
    } else {
      for (int i = 0; i < block.dim; ++i) out[offset + i] = stable_sigmoid(raw[offset + i]);
    }
    offset += block.dim;
  }
  return out;
}

}  // namespace planopt
