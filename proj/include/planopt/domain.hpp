#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "planopt/grid_board.hpp"
#include "planopt/param_space.hpp"
#include "planopt/rng.hpp"

namespace planopt {

/// User-facing configuration problem: bad domain specs, flag combinations,
/// incompatible files. Mapped to exit code 2 by the CLI.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split : uint8_t { train = 0, test = 1 };

std::string_view split_name(Split s);

/// One sample of the planning objective plus named diagnostics.
struct PlannerResult {
  double objective = 0.0;
  std::vector<std::pair<std::string, double>> extras;
};

/// A planner optimization problem: instance distribution, parameter space,
/// and black-box planner. The extras argument mirrors the planner invocation
/// contract; the built-in domains ignore it.
struct DomainDefinition {
  using Planner = std::function<PlannerResult(
      const GridBoard&, const Assignment&, RngState&,
      const std::vector<std::pair<std::string, double>>& extras)>;

  std::string family;  // "RandomWalk2D" or "Maze2D"
  int size = 0;
  CompositeSpace space;
  int instance_dim = 0;
  int default_set_size = 1000;
  std::function<GridBoard(RngState&)> sample_instance;
  Planner planner;

  std::string spec_string() const { return family + "[" + std::to_string(size) + "]"; }
};

struct ProblemSet {
  std::string family;
  int size = 0;
  Split split = Split::train;
  uint64_t seed = 0;
  std::vector<GridBoard> instances;
};

DomainDefinition make_randomwalk2d(int size);
DomainDefinition make_maze2d(int size);

/// Parse a "Name[size]" domain spec. Throws ConfigError on unknown names or
/// invalid sizes (Maze2D requires odd size; both require size >= 5).
DomainDefinition make_domain(const std::string& spec);

/// Deterministic instance set. Train and test use disjoint derived streams;
/// instance i depends only on (domain, split, seed, i).
/// count < 0 selects the domain default (1000).
ProblemSet create_problem_set(const DomainDefinition& domain, Split split, uint64_t seed,
                              int count = -1);

/// Validates the assignment against the domain's space before invoking the
/// planner; throws std::invalid_argument on violation.
PlannerResult planner_call(const DomainDefinition& domain, const GridBoard& instance,
                           const Assignment& x, RngState& rng,
                           const std::vector<std::pair<std::string, double>>& extras = {});

/// Feature vector of length instance_dim = size^2 + 4: row-major occupancy
/// flags, then (start_row, start_col, goal_row, goal_col) / (size - 1).
std::vector<double> encode_instance(const DomainDefinition& domain, const GridBoard& instance);

/// POPSET1 container: magic, domain name, size, split, seed, count,
/// per-instance boards (size, occupancy bitmap, start, goal), trailing CRC32.
void save_problem_set(const ProblemSet& set, const std::filesystem::path& path);
ProblemSet load_problem_set(const std::filesystem::path& path);

}  // namespace planopt
