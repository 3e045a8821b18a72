#include "planopt/domain.hpp"

#include <cctype>
#include <stdexcept>

#include "planopt/grid2d.hpp"

namespace planopt {

namespace {

constexpr std::string_view kPopsetMagic = "POPSET1";

}  // namespace

std::string_view split_name(Split s) { return s == Split::train ? "train" : "test"; }

DomainDefinition make_randomwalk2d(int size) {
  if (size < 5) throw ConfigError("RandomWalk2D size must be >= 5");
  DomainDefinition d;
  d.family = "RandomWalk2D";
  d.size = size;
  d.space = CompositeSpace({ParamBlock::simplex(4)});
  d.instance_dim = size * size + 4;
  d.sample_instance = [size](RngState& rng) {
    return grid2d::generate_randomwalk_instance(size, rng);
  };
  d.planner = [](const GridBoard& board, const Assignment& x, RngState& rng,
                 const std::vector<std::pair<std::string, double>>&) {
    const auto outcome = grid2d::simulate_random_walk(board, x.values[0], rng);
    PlannerResult res;
    res.objective = outcome.objective;
    res.extras = {{"steps", static_cast<double>(outcome.steps)},
                  {"reached", outcome.reached ? 1.0 : 0.0}};
    return res;
  };
  return d;
}

DomainDefinition make_maze2d(int size) {
  if (size < 5 || size % 2 == 0) throw ConfigError("Maze2D size must be odd and >= 5");
  DomainDefinition d;
  d.family = "Maze2D";
  d.size = size;
  d.space = CompositeSpace(
      {ParamBlock::interval(size * size, 0.0, static_cast<double>(size) * size)});
  d.instance_dim = size * size + 4;
  d.sample_instance = [size](RngState& rng) { return grid2d::generate_maze_instance(size, rng); };
  d.planner = [](const GridBoard& board, const Assignment& x, RngState&,
                 const std::vector<std::pair<std::string, double>>&) {
    const auto outcome = grid2d::astar_expansions(board, x.values[0]);
    PlannerResult res;
    res.objective = outcome.objective;
    res.extras = {{"expansions", static_cast<double>(outcome.expansions)},
                  {"n_empty", static_cast<double>(outcome.n_empty)}};
    return res;
  };
  return d;
}

DomainDefinition make_domain(const std::string& spec) {
  const auto open = spec.find('[');
  if (open == std::string::npos || spec.empty() || spec.back() != ']') {
    throw ConfigError("bad domain spec '" + spec + "': expected Name[size]");
  }
  const std::string name = spec.substr(0, open);
  const std::string size_str = spec.substr(open + 1, spec.size() - open - 2);
  if (size_str.empty()) throw ConfigError("bad domain spec '" + spec + "': missing size");
  for (char ch : size_str) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) {
      throw ConfigError("bad domain spec '" + spec + "': size must be an integer");
    }
  }
  int size = 0;
  try {
    size = std::stoi(size_str);
  } catch (const std::exception&) {
    throw ConfigError("bad domain spec '" + spec + "': size out of range");
  }
  if (name == "RandomWalk2D") return make_randomwalk2d(size);
  if (name == "Maze2D") return make_maze2d(size);
  throw ConfigError("unknown domain '" + name + "'");
}

ProblemSet create_problem_set(const DomainDefinition& domain, Split split, uint64_t seed,
                              int count) {
  if (count < 0) count = domain.default_set_size;
  ProblemSet set;
  set.family = domain.family;
  set.size = domain.size;
  set.split = split;
  set.seed = seed;
  set.instances.reserve(static_cast<size_t>(count));
  const uint64_t stream = derive_seed(seed, split_name(split));
  for (int i = 0; i < count; ++i) {
    RngState rng(derive_seed(stream, static_cast<uint64_t>(i)));
    set.instances.push_back(domain.sample_instance(rng));
  }
  return set;
}

PlannerResult planner_call(const DomainDefinition& domain, const GridBoard& instance,
                           const Assignment& x, RngState& rng,
                           const std::vector<std::pair<std::string, double>>& extras) {
  if (const auto violation = validate(domain.space, x)) {
    throw std::invalid_argument("invalid assignment for " + domain.spec_string() + ": block " +
                                std::to_string(violation->block_index) + ": " +
                                violation->message);
  }
  return domain.planner(instance, x, rng, extras);
}

std::vector<double> encode_instance(const DomainDefinition& domain, const GridBoard& instance) {
  if (instance.size != domain.size) {
    throw std::invalid_argument("instance size does not match domain");
  }
  const int size = instance.size;
  std::vector<double> out;
  out.reserve(static_cast<size_t>(domain.instance_dim));
  for (uint8_t cell : instance.occupancy) out.push_back(cell ? 1.0 : 0.0);
  const double denom = size - 1;
  out.push_back(instance.start.row / denom);
  out.push_back(instance.start.col / denom);
  out.push_back(instance.goal.row / denom);
  out.push_back(instance.goal.col / denom);
  return out;
}

void save_problem_set(const ProblemSet& set, const std::filesystem::path& path) {
  io::ByteWriter w;
  w.magic(kPopsetMagic);
  w.str(set.family);
  w.u16(static_cast<uint16_t>(set.size));
  w.u8(static_cast<uint8_t>(set.split));
  w.u64(set.seed);
  w.u32(static_cast<uint32_t>(set.instances.size()));
  for (const auto& board : set.instances) {
    w.u16(static_cast<uint16_t>(board.size));
    const size_t n = board.occupancy.size();
    uint8_t acc = 0;
    int bit = 0;
    for (size_t i = 0; i < n; ++i) {  // LSB-first bitmap
      if (board.occupancy[i]) acc |= static_cast<uint8_t>(1u << bit);
      if (++bit == 8) {
        w.u8(acc);
        acc = 0;
        bit = 0;
      }
    }
    if (bit != 0) w.u8(acc);
    w.u16(static_cast<uint16_t>(board.start.row));
    w.u16(static_cast<uint16_t>(board.start.col));
    w.u16(static_cast<uint16_t>(board.goal.row));
    w.u16(static_cast<uint16_t>(board.goal.col));
  }
  w.finish_with_crc();
  w.write_file(path);
}

ProblemSet load_problem_set(const std::filesystem::path& path) {
  io::ByteReader r = io::ByteReader::from_file(path);
  r.verify_trailing_crc();
  r.expect_magic(kPopsetMagic);
  ProblemSet set;
  set.family = r.str();
  set.size = r.u16();
  const uint8_t split = r.u8();
  if (split > 1) throw io::FormatError("bad split tag");
  set.split = static_cast<Split>(split);
  set.seed = r.u64();
  const uint32_t count = r.u32();
  set.instances.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    GridBoard board;
    board.size = r.u16();
    const int n = board.size * board.size;
    board.occupancy.resize(static_cast<size_t>(n));
    uint8_t acc = 0;
    int bit = 8;
    for (int j = 0; j < n; ++j) {
      if (bit == 8) {
        acc = r.u8();
        bit = 0;
      }
      board.occupancy[static_cast<size_t>(j)] = (acc >> bit) & 1u;
      ++bit;
    }
    board.start.row = static_cast<int16_t>(r.u16());
    board.start.col = static_cast<int16_t>(r.u16());
    board.goal.row = static_cast<int16_t>(r.u16());
    board.goal.col = static_cast<int16_t>(r.u16());
    set.instances.push_back(std::move(board));
  }
  if (!r.at_end()) throw io::FormatError("trailing bytes after instance data");
  return set;
}

}  // namespace planopt
