#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "planopt/grid2d.hpp"
#include "planopt/thread_pool.hpp"

namespace planopt {

struct OracleCheck {
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  std::string detail;  // summary statistic, or the first failure found
};

struct OracleSuiteOptions {
  uint64_t seed = 0;
  std::vector<int> sizes = {5, 11};
  int mazes_per_size = 1000;   // search-equivalence and maze-structure checks
  int walk_pairs = 20;         // (board, probs) pairs, split across sizes
  int64_t walk_samples = 100'000;  // Monte-Carlo rollouts per pair
  grid2d::TieBreak tie_break = grid2d::TieBreak::standard;
  std::string family_filter;   // "", "RandomWalk2D", or "Maze2D"
};

/// Cross-checks the fast implementations against the exact oracles:
///   - search equivalence: zero-heuristic best-first search matches the
///     independent uniform-cost reference on random mazes;
///   - walk statistics: Monte-Carlo mean steps within 3 standard errors of
///     the absorbing-chain expectation;
///   - maze structure: every generated maze is a spanning tree of its free
///     cells;
///   - exact-heuristic search expands exactly the unique path.
std::vector<OracleCheck> run_oracle_suite(const OracleSuiteOptions& options, ThreadPool& pool);

}  // namespace planopt
