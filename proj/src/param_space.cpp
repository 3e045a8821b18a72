#include "planopt/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace planopt {

ParamBlock ParamBlock::interval(int dim, double low, double high) {
  if (dim < 1) throw std::invalid_argument("interval block dim must be positive");
  if (!(low < high)) throw std::invalid_argument("interval block requires low < high");
  return ParamBlock{Kind::interval, dim, low, high};
}

ParamBlock ParamBlock::simplex(int dim) {
  if (dim < 1) throw std::invalid_argument("simplex block dim must be positive");
  return ParamBlock{Kind::simplex, dim, 0.0, 1.0};
}

CompositeSpace::CompositeSpace(std::vector<ParamBlock> b) : blocks(std::move(b)) {
  for (const auto& block : blocks) {
    if (block.dim < 1) throw std::invalid_argument("block dim must be positive");
    if (block.kind == ParamBlock::Kind::interval && !(block.low < block.high)) {
      throw std::invalid_argument("interval block requires low < high");
    }
  }
}

int CompositeSpace::flat_dim() const {
  int n = 0;
  for (const auto& b : blocks) n += b.dim;
  return n;
}

std::vector<double> Assignment::flat() const {
  std::vector<double> out;
  for (const auto& v : values) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::vector<Assignment> sample_uniform(const CompositeSpace& space, int count, RngState& rng) {
  if (count < 1) throw std::invalid_argument("sample count must be >= 1");
  std::vector<Assignment> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    Assignment a;
    a.values.reserve(space.blocks.size());
    for (const auto& block : space.blocks) {
      std::vector<double> v(static_cast<size_t>(block.dim));
      if (block.kind == ParamBlock::Kind::interval) {
        for (auto& x : v) x = block.low + (block.high - block.low) * rng.uniform();
      } else {
        double sum = 0.0;
        for (auto& x : v) {
          x = -std::log(rng.uniform_open());
          sum += x;
        }
        for (auto& x : v) x /= sum;
      }
      a.values.push_back(std::move(v));
    }
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

double sigmoid(double x) {
  // Stable in both tails.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Assignment project(const CompositeSpace& space, std::span<const double> raw) {
  if (static_cast<int>(raw.size()) != space.flat_dim()) {
    throw std::invalid_argument("raw vector length does not match flat_dim");
  }
  for (double x : raw) {
    if (!std::isfinite(x)) throw std::invalid_argument("raw vector has non-finite entry");
  }
  Assignment a;
  a.values.reserve(space.blocks.size());
  size_t offset = 0;
  for (const auto& block : space.blocks) {
    std::vector<double> v(static_cast<size_t>(block.dim));
    const std::span<const double> slice = raw.subspan(offset, static_cast<size_t>(block.dim));
    if (block.kind == ParamBlock::Kind::interval) {
      for (int i = 0; i < block.dim; ++i) {
        v[static_cast<size_t>(i)] = block.low + (block.high - block.low) * sigmoid(slice[static_cast<size_t>(i)]);
      }
    } else {
      const double m = *std::max_element(slice.begin(), slice.end());
      double sum = 0.0;
      for (int i = 0; i < block.dim; ++i) {
        v[static_cast<size_t>(i)] = std::exp(slice[static_cast<size_t>(i)] - m);
        sum += v[static_cast<size_t>(i)];
      }
      for (auto& x : v) x /= sum;
    }
    offset += static_cast<size_t>(block.dim);
    a.values.push_back(std::move(v));
  }
  return a;
}

std::optional<Violation> validate(const CompositeSpace& space, const Assignment& assignment) {
  if (assignment.values.size() != space.blocks.size()) {
    return Violation{0, "block count mismatch"};
  }
  for (size_t b = 0; b < space.blocks.size(); ++b) {
    const auto& block = space.blocks[b];
    const auto& v = assignment.values[b];
    const int idx = static_cast<int>(b);
    if (static_cast<int>(v.size()) != block.dim) {
      return Violation{idx, "dimension mismatch"};
    }
    for (double x : v) {
      if (!std::isfinite(x)) return Violation{idx, "non-finite value"};
    }
    if (block.kind == ParamBlock::Kind::interval) {
      for (double x : v) {
        if (x < block.low - kValidateTolerance || x > block.high + kValidateTolerance) {
          return Violation{idx, "value outside [low, high] beyond tolerance 1e-9"};
        }
      }
    } else {
      double sum = 0.0;
      for (double x : v) {
        if (x < -kValidateTolerance) return Violation{idx, "negative entry beyond tolerance 1e-9"};
        sum += x;
      }
      if (std::abs(sum - 1.0) > kValidateTolerance) {
        return Violation{idx, "sum != 1 beyond tolerance 1e-9"};
      }
    }
  }
  return std::nullopt;
}

void write_space(io::ByteWriter& w, const CompositeSpace& space) {
  w.u32(static_cast<uint32_t>(space.blocks.size()));
  for (const auto& block : space.blocks) {
    w.u8(static_cast<uint8_t>(block.kind));
    w.u32(static_cast<uint32_t>(block.dim));
    w.f64(block.low);
    w.f64(block.high);
  }
}

CompositeSpace read_space(io::ByteReader& r) {
  const uint32_t n_blocks = r.u32();
  std::vector<ParamBlock> blocks;
  blocks.reserve(n_blocks);
  for (uint32_t b = 0; b < n_blocks; ++b) {
    const auto kind = static_cast<ParamBlock::Kind>(r.u8());
    const int dim = static_cast<int>(r.u32());
    const double low = r.f64();
    const double high = r.f64();
    if (kind == ParamBlock::Kind::interval) {
      blocks.push_back(ParamBlock::interval(dim, low, high));
    } else if (kind == ParamBlock::Kind::simplex) {
      blocks.push_back(ParamBlock::simplex(dim));
    } else {
      throw io::FormatError("unknown block kind");
    }
  }
  return CompositeSpace(std::move(blocks));
}

void write_assignment(io::ByteWriter& w, const CompositeSpace& space, const Assignment& a) {
  if (validate(space, a)) throw std::invalid_argument("cannot serialize invalid assignment");
  write_space(w, space);
  for (const auto& v : a.values) {
    for (double x : v) w.f64(x);
  }
}

std::pair<CompositeSpace, Assignment> read_assignment(io::ByteReader& r) {
  CompositeSpace space = read_space(r);
  Assignment a;
  a.values.reserve(space.blocks.size());
  for (const auto& block : space.blocks) {
    std::vector<double> v(static_cast<size_t>(block.dim));
    for (auto& x : v) x = r.f64();
    a.values.push_back(std::move(v));
  }
  if (auto bad = validate(space, a)) {
    throw io::FormatError("stored assignment invalid: " + bad->message);
  }
  return {std::move(space), std::move(a)};
}

}  // namespace planopt
