#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace planopt {

// Every random decision in the project descends from one user seed through
// derive_seed, so a run is reproducible from (config, seed) alone and
// parallel work can hand each task its own stream.

inline constexpr uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ull;

/// SplitMix64 finalizer. Bijective 64-bit mix.
constexpr uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

/// Derive an independent child seed from a base seed and a stream index.
constexpr uint64_t derive_seed(uint64_t base, uint64_t stream) {
  return mix64(base + kGoldenGamma * (stream + 1));
}

/// FNV-1a tag for named streams ("train", "eval", ...).
constexpr uint64_t stream_tag(std::string_view name) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char ch : name) {
    h ^= static_cast<uint8_t>(ch);
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr uint64_t derive_seed(uint64_t base, std::string_view name) {
  return derive_seed(base, stream_tag(name));
}

/// Counter-based SplitMix64 engine with hand-rolled distributions.
///
/// Distributions are implemented here rather than with <random> adapters so
/// that streams are bit-identical across standard libraries. Not thread-safe;
/// give each worker its own instance.
class RngState {
 public:
  explicit RngState(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1); safe as a log/exponential argument.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). Lemire multiply-shift with rejection, unbiased.
  uint64_t uniform_below(uint64_t n) {
    auto m = static_cast<unsigned __int128>(next_u64()) * n;
    auto low = static_cast<uint64_t>(m);
    if (low < n) {
      const uint64_t threshold = -n % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        low = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  /// Standard normal via Box-Muller (cosine branch only, stateless).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  uint64_t state_;
};

}  // namespace planopt
