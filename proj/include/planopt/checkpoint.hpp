#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "planopt/generator.hpp"

namespace planopt {

/// On-disk generator kinds (byte values are part of the file format).
enum class CheckpointKind : uint8_t {
  generator = 0,         // conditional policy: encoder network + log-sigma
  fixed_assignment = 1,  // deterministic unconditional generator
  uniform_sampler = 2,   // uniform-over-space reference generator
};

/// Checkpoint files carry a "POPNN1" magic, the generator kind, the domain
/// spec string they were trained for (e.g. "RandomWalk2D[5]"), a
/// kind-specific payload, and a trailing CRC32.

void save_policy_checkpoint(const std::filesystem::path& path, const std::string& domain_spec,
                            const PolicyGenerator& policy);
void save_fixed_checkpoint(const std::filesystem::path& path, const std::string& domain_spec,
                           const CompositeSpace& space, const Assignment& value);
void save_uniform_checkpoint(const std::filesystem::path& path, const std::string& domain_spec,
                             const CompositeSpace& space);

struct LoadedCheckpoint {
  CheckpointKind kind = CheckpointKind::generator;
  std::string domain_spec;
  std::unique_ptr<ParamGenerator> generator;
};

/// Reads any checkpoint kind back into a usable generator.  Structural
/// problems raise io::FormatError; payloads inconsistent with the recorded
/// domain raise std::invalid_argument.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace planopt
