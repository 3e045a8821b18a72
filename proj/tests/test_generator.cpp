#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "planopt/checkpoint.hpp"
#include "planopt/domain.hpp"
#include "planopt/generator.hpp"
#include "planopt/param_space.hpp"
#include "planopt/rng.hpp"

using namespace planopt;
namespace fs = std::filesystem;

namespace {

CompositeSpace mixed_space() {
  return CompositeSpace({ParamBlock::simplex(4), ParamBlock::interval(3, -2.0, 5.0)});
}

std::vector<double> random_encoding(int n, RngState& rng) {
  std::vector<double> e(n);
  for (double& v : e) v = rng.uniform();
  return e;
}

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("FixedGenerator returns its assignment and validates it up front") {
  const CompositeSpace space = mixed_space();
  RngState rng(0);
  Assignment value = sample_uniform(space, 1, rng).front();
  FixedGenerator gen(space, value);

  RngState r1(1), r2(99);
  const Assignment a = gen.sample(std::vector<double>(8, 0.0), r1);
  const Assignment b = gen.sample(std::vector<double>(8, 1.0), r2);
  CHECK(a.flat() == value.flat());
  CHECK(b.flat() == value.flat());  // ignores encoding and rng alike

  Assignment bad = value;
  bad.values[0] = {2.0, 0.0, 0.0, 0.0};  // not a distribution
  CHECK_THROWS_AS(FixedGenerator(space, bad), std::invalid_argument);
}

TEST_CASE("UniformGenerator draws valid, seed-reproducible assignments") {
  const CompositeSpace space = mixed_space();
  UniformGenerator gen(space);
  const std::vector<double> enc(4, 0.0);

  RngState r1(7), r2(7);
  for (int i = 0; i < 200; ++i) {
    const Assignment a = gen.sample(enc, r1);
    const Assignment b = gen.sample(enc, r2);
    CHECK(a.flat() == b.flat());
    CHECK_FALSE(validate(space, a).has_value());
  }
}

TEST_CASE("PolicyGenerator samples are always valid assignments") {
  const CompositeSpace space = mixed_space();
  RngState init(3);
  PolicyGenerator gen(space, /*encoding_dim=*/6, init);

  RngState rng(4);
  for (int i = 0; i < 300; ++i) {
    const std::vector<double> enc = random_encoding(6, rng);
    const Assignment a = gen.sample(enc, rng);
    const auto violation = validate(space, a);
    CHECK_FALSE(violation.has_value());
  }
}

TEST_CASE("policy raw means respect the soft bound") {
  const CompositeSpace space = mixed_space();
  RngState init(5);
  PolicyGenerator gen(space, 6, init);
  // Force the encoder far out of its comfort zone with huge inputs.
  RngState rng(6);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> enc = random_encoding(6, rng);
    for (double& v : enc) v *= 1000.0;
    const std::vector<double> mean = gen.mean_plain(enc);
    const std::vector<double> bounds = raw_mean_bounds(space);
    REQUIRE(bounds.size() == mean.size());
    for (size_t k = 0; k < mean.size(); ++k) CHECK(std::abs(mean[k]) <= bounds[k]);
  }
}

TEST_CASE("mean_graph matches mean_plain") {
  const CompositeSpace space = mixed_space();
  RngState init(7);
  PolicyGenerator gen(space, 6, init);
  RngState rng(8);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> enc = random_encoding(6, rng);
    const std::vector<double> plain = gen.mean_plain(enc);
    ad::Graph g;
    const ad::Tensor& val = g.value(gen.mean_graph(g, g.input_row(enc)));
    REQUIRE(static_cast<size_t>(val.cols) == plain.size());
    for (size_t j = 0; j < plain.size(); ++j)
      CHECK(val.v[j] == doctest::Approx(plain[j]).epsilon(1e-12));
  }
}

TEST_CASE("sample projects mean plus noise; zero noise floor concentrates") {
  const CompositeSpace space = mixed_space();
  RngState init(9);
  PolicyGenerator gen(space, 6, init);
  // Pin log-sigma at the lower clamp: samples should hug the projected mean.
  std::fill(gen.log_sigma().value.v.begin(), gen.log_sigma().value.v.end(), kLogSigmaLo);

  RngState rng(10);
  const std::vector<double> enc = random_encoding(6, rng);
  const std::vector<double> mean_projected =
      project_features_plain(space, gen.mean_plain(enc));
  // mean_projected is normalized to [0,1]; rebuild the assignment-scale values.
  for (int i = 0; i < 20; ++i) {
    const Assignment a = gen.sample(enc, rng);
    const std::vector<double> flat = a.flat();
    // simplex block: compare directly.
    for (int j = 0; j < 4; ++j) CHECK(flat[j] == doctest::Approx(mean_projected[j]).epsilon(1e-2));
    // interval block: projection feature is (value - low) / (high - low).
    for (int j = 4; j < 7; ++j) {
      const double feat = (flat[j] - (-2.0)) / 7.0;
      CHECK(feat == doctest::Approx(mean_projected[j]).epsilon(1e-2));
    }
  }
}

TEST_CASE("log-sigma values beyond the clamp do not widen sampling") {
  const CompositeSpace space = CompositeSpace({ParamBlock::interval(1, 0.0, 1.0)});
  RngState init(11);
  PolicyGenerator gen(space, 2, init);
  std::fill(gen.log_sigma().value.v.begin(), gen.log_sigma().value.v.end(), 50.0);

  // With the clamp at kLogSigmaHi = 2, sigma is e^2 ~ 7.4, not e^50.  Raw
  // draws must stay within ~6 sigma of the bounded mean.
  RngState rng(12);
  const std::vector<double> enc = {0.3, 0.7};
  for (int i = 0; i < 2000; ++i) {
    const std::vector<double> raw = gen.sample_raw(enc, rng);
    CHECK(std::abs(raw[0]) < kIntervalMeanBound + 6.0 * std::exp(kLogSigmaHi));
  }
}

TEST_CASE("project_features graph and plain versions agree") {
  const CompositeSpace space = mixed_space();
  RngState rng(13);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> raw(space.flat_dim());
    for (double& v : raw) v = 6.0 * (rng.uniform() - 0.5);
    const std::vector<double> plain = project_features_plain(space, raw);

    ad::Graph g;
    const ad::Tensor& val = g.value(project_features(g, space, g.input_row(raw)));
    REQUIRE(static_cast<size_t>(val.cols) == plain.size());
    for (size_t j = 0; j < plain.size(); ++j)
      CHECK(val.v[j] == doctest::Approx(plain[j]).epsilon(1e-12));
  }
}

TEST_CASE("projected features are normalized to the unit scale") {
  const CompositeSpace space = mixed_space();
  RngState rng(14);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> raw(space.flat_dim());
    for (double& v : raw) v = 20.0 * (rng.uniform() - 0.5);
    const std::vector<double> f = project_features_plain(space, raw);
    double simplex_sum = 0.0;
    for (int j = 0; j < 4; ++j) {
      CHECK(f[j] >= 0.0);
      simplex_sum += f[j];
    }
    CHECK(simplex_sum == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 4; j < 7; ++j) {
      CHECK(f[j] > 0.0);
      CHECK(f[j] < 1.0);
    }
  }
}

TEST_CASE("critic heads have the right shapes and a clamped variance head") {
  RngState init(15);
  Critic critic(/*encoding_dim=*/5, /*flat_dim=*/7, init);
  // Blow up the final bias so the raw variance head would exceed the clamp.
  std::vector<ad::Param*> ps = critic.net().params();
  ad::Param* last_bias = ps.back();
  last_bias->value.v.back() = 100.0;

  ad::Graph g;
  ad::Tensor enc(3, 5), feat(3, 7);
  RngState rng(16);
  for (double& v : enc.v) v = rng.uniform();
  for (double& v : feat.v) v = rng.uniform();
  const Critic::Heads heads =
      critic.forward(g, g.input(std::move(enc)), g.input(std::move(feat)), false);
  const ad::Tensor& mu = g.value(heads.mu);
  const ad::Tensor& ls = g.value(heads.log_sigma);
  CHECK(mu.rows == 3);
  CHECK(mu.cols == 1);
  CHECK(ls.rows == 3);
  CHECK(ls.cols == 1);
  for (double v : ls.v) {
    CHECK(v >= kLogSigmaLo);
    CHECK(v <= kLogSigmaHi);
  }
}

TEST_CASE("checkpoints round-trip all three generator kinds") {
  const CompositeSpace space = mixed_space();
  RngState rng(17);

  SUBCASE("policy") {
    // Policy payloads carry only the networks; the space and encoding width
    // come from the domain spec, so the policy must be built to match it.
    const DomainDefinition domain = make_domain("RandomWalk2D[5]");
    PolicyGenerator policy(domain.space, domain.instance_dim, rng);
    const fs::path path = temp_file("planopt_test_policy.ckpt");
    save_policy_checkpoint(path, "RandomWalk2D[5]", policy);

    LoadedCheckpoint loaded = load_checkpoint(path);
    CHECK(loaded.kind == CheckpointKind::generator);
    CHECK(loaded.domain_spec == "RandomWalk2D[5]");
    REQUIRE(loaded.generator != nullptr);

    // Same seed, same encoding: identical draws from original and reloaded.
    const std::vector<double> enc = random_encoding(domain.instance_dim, rng);
    RngState r1(3), r2(3);
    CHECK(policy.sample(enc, r1).flat() == loaded.generator->sample(enc, r2).flat());
    fs::remove(path);
  }

  SUBCASE("fixed assignment") {
    Assignment value = sample_uniform(space, 1, rng).front();
    const fs::path path = temp_file("planopt_test_fixed.ckpt");
    save_fixed_checkpoint(path, "Maze2D[5]", space, value);

    LoadedCheckpoint loaded = load_checkpoint(path);
    CHECK(loaded.kind == CheckpointKind::fixed_assignment);
    CHECK(loaded.domain_spec == "Maze2D[5]");
    RngState r(0);
    CHECK(loaded.generator->sample({}, r).flat() == value.flat());
    fs::remove(path);
  }

  SUBCASE("uniform sampler") {
    const fs::path path = temp_file("planopt_test_uniform.ckpt");
    save_uniform_checkpoint(path, "RandomWalk2D[11]", space);

    LoadedCheckpoint loaded = load_checkpoint(path);
    CHECK(loaded.kind == CheckpointKind::uniform_sampler);
    RngState r1(5), r2(5);
    UniformGenerator reference(space);
    CHECK(loaded.generator->sample({}, r1).flat() == reference.sample({}, r2).flat());
    fs::remove(path);
  }
}

TEST_CASE("checkpoint loading rejects corruption") {
  const CompositeSpace space = mixed_space();
  RngState rng(18);
  PolicyGenerator policy(space, 6, rng);
  const fs::path path = temp_file("planopt_test_corrupt.ckpt");
  save_policy_checkpoint(path, "RandomWalk2D[5]", policy);

  auto read_bytes = [&]() {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  };
  auto write_bytes = [&](const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  };
  const std::vector<char> original = read_bytes();

  SUBCASE("flipped payload byte fails the checksum") {
    std::vector<char> bytes = original;
    bytes[bytes.size() / 2] ^= 0x20;
    write_bytes(bytes);
    CHECK_THROWS_AS(load_checkpoint(path), io::FormatError);
  }

  SUBCASE("truncation fails") {
    std::vector<char> bytes = original;
    bytes.resize(bytes.size() - 7);
    write_bytes(bytes);
    CHECK_THROWS_AS(load_checkpoint(path), io::FormatError);
  }

  SUBCASE("trailing garbage fails") {
    std::vector<char> bytes = original;
    bytes.push_back('x');
    bytes.push_back('y');
    write_bytes(bytes);
    CHECK_THROWS_AS(load_checkpoint(path), io::FormatError);
  }

  SUBCASE("missing file fails") {
    fs::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), io::FormatError);
  }

  fs::remove(path);
}
