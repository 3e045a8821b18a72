#include "planopt/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace planopt::nn {

Mlp::Mlp(std::span<const int> layer_sizes, RngState& rng)
    : sizes_(layer_sizes.begin(), layer_sizes.end()) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (int s : sizes_) {
    if (s < 1) throw std::invalid_argument("Mlp: layer sizes must be positive");
  }
  const size_t layers = sizes_.size() - 1;
  for (size_t l = 0; l < layers; ++l) {
    const int fan_in = sizes_[l];
    const int fan_out = sizes_[l + 1];
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    if (l == layers - 1) limit *= 0.1;
    ad::Tensor w(fan_in, fan_out);
    for (double& x : w.v) x = (2.0 * rng.uniform() - 1.0) * limit;
    weights_.emplace_back(std::move(w));
    biases_.emplace_back(ad::Tensor(1, fan_out));
  }
}

namespace {

ad::NodeId bind_param(ad::Graph& g, ad::Param& p, bool frozen) {
  return frozen ? g.input(p.value) : g.param(p);
}

}  // namespace

ad::NodeId Mlp::forward(ad::Graph& g, ad::NodeId x, bool frozen) {
  ad::NodeId h = x;
  for (size_t l = 0; l < weights_.size(); ++l) {
    const ad::NodeId w = bind_param(g, weights_[l], frozen);
    const ad::NodeId b = bind_param(g, biases_[l], frozen);
    h = g.add_rowvec(g.matmul(h, w), b);
    if (l + 1 < weights_.size()) h = g.tanh(h);
  }
  return h;
}

std::vector<double> Mlp::forward_plain(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != in_dim()) {
    throw std::invalid_argument("Mlp: input size mismatch");
  }
  ad::Tensor h = ad::Tensor::row(x);
  for (size_t l = 0; l < weights_.size(); ++l) {
    ad::Tensor next = ad::matmul_plain(h, weights_[l].value);
    for (int c = 0; c < next.cols; ++c) next.at(0, c) += biases_[l].value.at(0, c);
    if (l + 1 < weights_.size()) {
      for (double& v : next.v) v = std::tanh(v);
    }
    h = std::move(next);
  }
  return h.v;
}

std::vector<ad::Param*> Mlp::params() {
  std::vector<ad::Param*> out;
  out.reserve(weights_.size() * 2);
  for (size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

void Mlp::serialize(io::ByteWriter& w) const {
  w.u32(static_cast<uint32_t>(sizes_.size()));
  for (int s : sizes_) w.u32(static_cast<uint32_t>(s));
  for (size_t l = 0; l < weights_.size(); ++l) {
    for (double x : weights_[l].value.v) w.f64(x);
    for (double x : biases_[l].value.v) w.f64(x);
  }
}

Mlp Mlp::deserialize(io::ByteReader& r) {
  const uint32_t n = r.u32();
  if (n < 2 || n > 64) throw io::FormatError("network blob: implausible layer count");
  Mlp net;
  net.sizes_.resize(n);
  for (uint32_t i = 0; i < n; ++i) {
    const uint32_t s = r.u32();
    if (s < 1 || s > 1u << 20) throw io::FormatError("network blob: implausible layer size");
    net.sizes_[i] = static_cast<int>(s);
  }
  for (uint32_t l = 0; l + 1 < n; ++l) {
    ad::Tensor w(net.sizes_[l], net.sizes_[l + 1]);
    for (double& x : w.v) x = r.f64();
    ad::Tensor b(1, net.sizes_[l + 1]);
    for (double& x : b.v) x = r.f64();
    net.weights_.emplace_back(std::move(w));
    net.biases_.emplace_back(std::move(b));
  }
  return net;
}

Adam::Adam(std::vector<ad::Param*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const ad::Param* p : params_) {
    m_.emplace_back(p->value.rows, p->value.cols);
    v_.emplace_back(p->value.rows, p->value.cols);
  }
}

bool Adam::step() {
  bool finite = true;
  for (const ad::Param* p : params_) {
    if (!p->grad.all_finite()) {
      finite = false;
      break;
    }
  }
  if (!finite) {
    for (ad::Param* p : params_) p->zero_grad();
    ++skipped_;
    return false;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    ad::Param& p = *params_[i];
    for (size_t j = 0; j < p.value.count(); ++j) {
      const double g = p.grad.v[j];
      m_[i].v[j] = beta1_ * m_[i].v[j] + (1.0 - beta1_) * g;
      v_[i].v[j] = beta2_ * v_[i].v[j] + (1.0 - beta2_) * g * g;
      const double mhat = m_[i].v[j] / bc1;
      const double vhat = v_[i].v[j] / bc2;
      p.value.v[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
    p.zero_grad();
  }
  return true;
}

}  // namespace planopt::nn
