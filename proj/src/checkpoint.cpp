#include "planopt/checkpoint.hpp"

#include "planopt/bytes.hpp"
#include "planopt/domain.hpp"

namespace planopt {

namespace {

constexpr std::string_view kMagic = "POPNN1";

io::ByteWriter begin_checkpoint(CheckpointKind kind, const std::string& domain_spec) {
  io::ByteWriter w;
  w.magic(kMagic);
  w.u8(static_cast<uint8_t>(kind));
  w.str(domain_spec);
  return w;
}

}  // namespace

void save_policy_checkpoint(const std::filesystem::path& path, const std::string& domain_spec,
                            const PolicyGenerator& policy) {
  io::ByteWriter w = begin_checkpoint(CheckpointKind::generator, domain_spec);
  policy.encoder().serialize(w);
  const ad::Tensor& ls = policy.log_sigma().value;
  w.u32(static_cast<uint32_t>(ls.cols));
  for (double x : ls.v) w.f64(x);
  w.finish_with_crc();
  w.write_file(path);
}

void save_fixed_checkpoint(const std::filesystem::path& path, const std::string& domain_spec,
                           const CompositeSpace& space, const Assignment& value) {
  io::ByteWriter w = begin_checkpoint(CheckpointKind::fixed_assignment, domain_spec);
  write_assignment(w, space, value);
  w.finish_with_crc();
  w.write_file(path);
}

void save_uniform_checkpoint(const std::filesystem::path& path, const std::string& domain_spec,
                             const CompositeSpace& space) {
  io::ByteWriter w = begin_checkpoint(CheckpointKind::uniform_sampler, domain_spec);
  write_space(w, space);
  w.finish_with_crc();
  w.write_file(path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  io::ByteReader r = io::ByteReader::from_file(path);
  r.verify_trailing_crc();
  r.expect_magic(kMagic);
  const uint8_t kind_byte = r.u8();
  if (kind_byte > 2) throw io::FormatError("checkpoint: unknown generator kind");

  LoadedCheckpoint out;
  out.kind = static_cast<CheckpointKind>(kind_byte);
  out.domain_spec = r.str();

  switch (out.kind) {
    case CheckpointKind::generator: {
      // The space is implied by the domain the checkpoint was trained for.
      const DomainDefinition domain = make_domain(out.domain_spec);
      nn::Mlp encoder = nn::Mlp::deserialize(r);
      const uint32_t ls_dim = r.u32();
      ad::Tensor log_sigma(1, static_cast<int>(ls_dim));
      for (double& x : log_sigma.v) x = r.f64();
      if (encoder.in_dim() != domain.instance_dim) {
        throw std::invalid_argument("checkpoint: encoder input does not match domain encoding");
      }
      out.generator = std::make_unique<PolicyGenerator>(domain.space, std::move(encoder),
                                                        std::move(log_sigma));
      break;
    }
    case CheckpointKind::fixed_assignment: {
      auto [space, value] = read_assignment(r);
      out.generator = std::make_unique<FixedGenerator>(std::move(space), std::move(value));
      break;
    }
    case CheckpointKind::uniform_sampler: {
      out.generator = std::make_unique<UniformGenerator>(read_space(r));
      break;
    }
  }
  if (!r.at_end()) throw io::FormatError("checkpoint: trailing bytes");
  return out;
}

}  // namespace planopt
