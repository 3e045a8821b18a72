#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "planopt/param_space.hpp"

using namespace planopt;

namespace {

CompositeSpace simplex4() { return CompositeSpace({ParamBlock::simplex(4)}); }

CompositeSpace mixed_space() {
  return CompositeSpace(
      {ParamBlock::simplex(3), ParamBlock::interval(2, -1.0, 2.0), ParamBlock::simplex(2)});
}

}  // namespace

TEST_CASE("block construction rejects degenerate shapes") {
  CHECK_THROWS_AS(ParamBlock::interval(0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ParamBlock::interval(2, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ParamBlock::interval(2, 2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ParamBlock::simplex(0), std::invalid_argument);
  CHECK(ParamBlock::simplex(4).dim == 4);
}

TEST_CASE("flat_dim sums block dims") {
  CHECK(simplex4().flat_dim() == 4);
  CHECK(mixed_space().flat_dim() == 7);
  CHECK(CompositeSpace({ParamBlock::interval(25, 0.0, 25.0)}).flat_dim() == 25);
}

TEST_CASE("uniform simplex samples are normalized and non-negative") {
  RngState rng(0);
  const auto draws = sample_uniform(simplex4(), 100, rng);
  for (const auto& a : draws) {
    REQUIRE(a.values.size() == 1);
    double sum = 0.0;
    for (double v : a.values[0]) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-9);
    CHECK(!validate(simplex4(), a).has_value());
  }
}

TEST_CASE("interval sampling is uniform: per-coordinate mean near midpoint") {
  const CompositeSpace space({ParamBlock::interval(2, 0.0, 1.0)});
  RngState rng(1);
  const int n = 100'000;
  double mean[2] = {0.0, 0.0};
  for (const auto& a : sample_uniform(space, n, rng)) {
    mean[0] += a.values[0][0];
    mean[1] += a.values[0][1];
  }
  for (double& m : mean) m /= n;
  CHECK(mean[0] > 0.49);
  CHECK(mean[0] < 0.51);
  CHECK(mean[1] > 0.49);
  CHECK(mean[1] < 0.51);
}

TEST_CASE("simplex sampling is flat-Dirichlet: per-coordinate mean near 1/4") {
  RngState rng(2);
  const int n = 100'000;
  double mean[4] = {0.0, 0.0, 0.0, 0.0};
  for (const auto& a : sample_uniform(simplex4(), n, rng)) {
    for (int i = 0; i < 4; ++i) mean[i] += a.values[0][static_cast<size_t>(i)];
  }
  for (int i = 0; i < 4; ++i) {
    mean[i] /= n;
    CHECK(mean[i] > 0.245);
    CHECK(mean[i] < 0.255);
  }
}

TEST_CASE("uniform samples of a mixed space always validate") {
  const CompositeSpace space = mixed_space();
  RngState rng(3);
  for (const auto& a : sample_uniform(space, 1000, rng)) {
    CHECK(!validate(space, a).has_value());
    for (double v : a.values[1]) {
      CHECK(v >= -1.0);
      CHECK(v <= 2.0);
    }
  }
}

TEST_CASE("projection of zeros hits the canonical midpoints") {
  const std::vector<double> zeros4(4, 0.0);
  const Assignment a = project(simplex4(), zeros4);
  for (double v : a.values[0]) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  const CompositeSpace box({ParamBlock::interval(1, 0.0, 25.0)});
  const std::vector<double> zero1(1, 0.0);
  CHECK(project(box, zero1).values[0][0] == doctest::Approx(12.5).epsilon(1e-12));
}

TEST_CASE("projection saturates inside the simplex") {
  const CompositeSpace space({ParamBlock::simplex(2)});
  const std::vector<double> raw = {40.0, 0.0};
  const Assignment a = project(space, raw);
  CHECK(a.values[0][0] > 1.0 - 1e-9);
  CHECK(a.values[0][1] < 1e-9);
  CHECK(!validate(space, a).has_value());
}

TEST_CASE("projection rejects malformed raw vectors") {
  const std::vector<double> short_raw(3, 0.0);
  CHECK_THROWS_AS(project(simplex4(), short_raw), std::invalid_argument);
  std::vector<double> bad(4, 0.0);
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(project(simplex4(), bad), std::invalid_argument);
  bad[2] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(project(simplex4(), bad), std::invalid_argument);
}

TEST_CASE("projection of any finite raw validates (property)") {
  const CompositeSpace space = mixed_space();
  RngState rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> raw(static_cast<size_t>(space.flat_dim()));
    for (double& v : raw) v = 60.0 * (rng.uniform() - 0.5);  // well into saturation
    CHECK(!validate(space, project(space, raw)).has_value());
  }
}

TEST_CASE("projecting a pre-image recovers the original point") {
  const CompositeSpace space = mixed_space();
  RngState rng(5);
  const Assignment target = sample_uniform(space, 1, rng).front();

  std::vector<double> raw;
  for (size_t b = 0; b < space.blocks.size(); ++b) {
    const auto& block = space.blocks[b];
    for (double v : target.values[b]) {
      if (block.kind == ParamBlock::Kind::simplex) {
        raw.push_back(std::log(v));  // softmax inverts log up to a shared shift
      } else {
        const double t = (v - block.low) / (block.high - block.low);
        raw.push_back(std::log(t / (1.0 - t)));  // logit inverts the affine sigmoid
      }
    }
  }
  const Assignment back = project(space, raw);
  for (size_t b = 0; b < target.values.size(); ++b) {
    for (size_t i = 0; i < target.values[b].size(); ++i) {
      CHECK(back.values[b][i] == doctest::Approx(target.values[b][i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("validate reports the first violated block") {
  const CompositeSpace space = simplex4();
  Assignment ok;
  ok.values = {{0.5, 0.5, 0.0, 0.0}};
  CHECK(!validate(space, ok).has_value());

  Assignment bad_sum;
  bad_sum.values = {{0.5, 0.6, 0.0, 0.0}};
  const auto v = validate(space, bad_sum);
  REQUIRE(v.has_value());
  CHECK(v->block_index == 0);
  CHECK(v->message.find("sum") != std::string::npos);

  const CompositeSpace box({ParamBlock::interval(1, 0.0, 1.0)});
  Assignment outside;
  outside.values = {{1.0000001}};
  CHECK(validate(box, outside).has_value());
  Assignment boundary;
  boundary.values = {{1.0 + 5e-10}};  // inside the 1e-9 tolerance
  CHECK(!validate(box, boundary).has_value());

  Assignment negative;
  negative.values = {{-0.1, 0.6, 0.3, 0.2}};
  CHECK(validate(space, negative).has_value());

  Assignment wrong_shape;
  wrong_shape.values = {{0.5, 0.5}};
  CHECK(validate(space, wrong_shape).has_value());
}

TEST_CASE("space and assignment serialization round-trips") {
  const CompositeSpace space = mixed_space();
  RngState rng(6);
  const Assignment a = sample_uniform(space, 1, rng).front();

  io::ByteWriter w;
  write_assignment(w, space, a);
  io::ByteReader r(w.buffer());
  const auto [space2, a2] = read_assignment(r);
  CHECK(space2 == space);
  CHECK(a2 == a);
  CHECK(r.at_end());

  io::ByteWriter ws;
  write_space(ws, space);
  io::ByteReader rs(ws.buffer());
  CHECK(read_space(rs) == space);
}

TEST_CASE("corrupted space payloads are rejected") {
  io::ByteWriter w;
  write_space(w, simplex4());
  auto bytes = w.buffer();
  bytes[4] = 0x7F;  // invalid block-kind byte
  io::ByteReader r(std::move(bytes));
  CHECK_THROWS_AS(read_space(r), io::FormatError);
}
