#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planopt/bytes.hpp"
#include "planopt/rng.hpp"

namespace planopt {

/// One typed block of a planning parameter space.
///
/// Interval blocks are axis-aligned boxes with identical per-coordinate
/// bounds; simplex blocks are probability vectors (non-negative, summing
/// to one).
struct ParamBlock {
  enum class Kind : uint8_t { interval = 0, simplex = 1 };

  Kind kind = Kind::interval;
  int dim = 0;
  double low = 0.0;   // interval only
  double high = 1.0;  // interval only

  static ParamBlock interval(int dim, double low, double high);
  static ParamBlock simplex(int dim);

  bool operator==(const ParamBlock&) const = default;
};

/// Ordered sequence of typed blocks composing the full parameter space.
struct CompositeSpace {
  std::vector<ParamBlock> blocks;

  CompositeSpace() = default;
  explicit CompositeSpace(std::vector<ParamBlock> b);

  int flat_dim() const;
  bool operator==(const CompositeSpace&) const = default;
};

/// A point in a CompositeSpace, stored block-wise.
struct Assignment {
  std::vector<std::vector<double>> values;

  std::vector<double> flat() const;
  bool operator==(const Assignment&) const = default;
};

struct Violation {
  int block_index = 0;
  std::string message;
};

/// Absolute tolerance for block invariants (simplex sums, interval bounds).
inline constexpr double kValidateTolerance = 1e-9;

/// Independent uniform samples: intervals uniform on [low, high], simplices
/// flat-Dirichlet via normalized unit-rate exponentials.
std::vector<Assignment> sample_uniform(const CompositeSpace& space, int count, RngState& rng);

/// Smooth surjection from unconstrained reals onto the space: softmax for
/// simplex blocks, affine sigmoid for interval blocks. Throws
/// std::invalid_argument on non-finite input or length mismatch.
Assignment project(const CompositeSpace& space, std::span<const double> raw);

/// First violated block invariant, or nullopt when the assignment is valid.
std::optional<Violation> validate(const CompositeSpace& space, const Assignment& assignment);

/// Wire format: per-block descriptor (kind, dim, low, high) followed by the
/// flat little-endian float64 values. Used inside checkpoint files.
void write_space(io::ByteWriter& w, const CompositeSpace& space);
CompositeSpace read_space(io::ByteReader& r);
void write_assignment(io::ByteWriter& w, const CompositeSpace& space, const Assignment& a);
std::pair<CompositeSpace, Assignment> read_assignment(io::ByteReader& r);

}  // namespace planopt
