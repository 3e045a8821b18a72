#include "planopt/oracle_suite.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>

#include "planopt/oracles.hpp"
#include "planopt/param_space.hpp"

namespace planopt {

namespace {

using grid2d::astar_expansions;
using grid2d::generate_maze_instance;
using grid2d::generate_randomwalk_instance;
using grid2d::simulate_random_walk;

/// Collects pass/fail across parallel iterations, keeping the first failure
/// message for the report.
struct FailureSink {
  std::atomic<int> failures{0};
  std::mutex mu;
  std::string first;

  void fail(const std::string& message) {
    if (failures.fetch_add(1) == 0) {
      std::lock_guard lock(mu);
      first = message;
    }
  }
};

std::string format_count(int failures, int total, const std::string& first) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%d/%d failed", failures, total);
  return failures ? std::string(buf) + ": " + first : "all " + std::to_string(total) + " ok";
}

OracleCheck timed(const std::string& name, const std::function<void(OracleCheck&)>& body) {
  OracleCheck check;
  check.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  body(check);
  check.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return check;
}

OracleCheck check_search_equivalence(const OracleSuiteOptions& opt, int size, ThreadPool& pool) {
  return timed("search-equivalence[" + std::to_string(size) + "]", [&](OracleCheck& check) {
    const uint64_t base = derive_seed(opt.seed, "search-equivalence");
    FailureSink sink;
    pool.parallel_for(opt.mazes_per_size, [&](int64_t i) {
      RngState rng(derive_seed(derive_seed(base, static_cast<uint64_t>(size)), i));
      const GridBoard board = generate_maze_instance(size, rng);
      const std::vector<double> zero_h(static_cast<size_t>(size) * size, 0.0);
      const int astar = astar_expansions(board, zero_h, opt.tie_break).expansions;
      const int reference = oracles::dijkstra_expansions_reference(board);
      if (astar != reference) {
        sink.fail("maze " + std::to_string(i) + ": search expanded " + std::to_string(astar) +
                  ", reference " + std::to_string(reference));
      }
    });
    check.passed = sink.failures == 0;
    check.detail = format_count(sink.failures, opt.mazes_per_size, sink.first);
  });
}

OracleCheck check_walk_statistics(const OracleSuiteOptions& opt, int size, int pairs,
                                  ThreadPool& pool) {
  return timed("walk-chain-expectation[" + std::to_string(size) + "]", [&](OracleCheck& check) {
    const uint64_t base =
        derive_seed(derive_seed(opt.seed, "walk-statistics"), static_cast<uint64_t>(size));
    FailureSink sink;
    std::atomic<double> worst_z{0.0};
    const CompositeSpace simplex4({ParamBlock::simplex(4)});
    pool.parallel_for(pairs, [&](int64_t i) {
      RngState rng(derive_seed(base, static_cast<uint64_t>(i)));
      const GridBoard board = generate_randomwalk_instance(size, rng);
      const Assignment probs = sample_uniform(simplex4, 1, rng).front();
      const std::span<const double> p(probs.values.front());

      const double oracle = oracles::expected_truncated_steps(board, p);
      double sum = 0.0, sum_sq = 0.0;
      for (int64_t k = 0; k < opt.walk_samples; ++k) {
        const double steps = simulate_random_walk(board, p, rng).steps;
        sum += steps;
        sum_sq += steps * steps;
      }
      const double n = static_cast<double>(opt.walk_samples);
      const double mc_mean = sum / n;
      const double variance = std::max(sum_sq / n - mc_mean * mc_mean, 0.0);
      const double standard_error = std::sqrt(variance / n);
      const double tolerance = std::max(3.0 * standard_error, 1e-9);
      const double z = standard_error > 0 ? std::abs(mc_mean - oracle) / standard_error : 0.0;
      for (double cur = worst_z.load(); z > cur && !worst_z.compare_exchange_weak(cur, z);) {
      }
      if (std::abs(mc_mean - oracle) > tolerance) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "pair %lld: monte-carlo mean %.6f vs oracle %.6f (%.2f standard errors)",
                      static_cast<long long>(i), mc_mean, oracle, z);
        sink.fail(buf);
      }
    });
    check.passed = sink.failures == 0;
    if (check.passed) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "all %d pairs within 3 standard errors (worst %.2f)", pairs,
                    worst_z.load());
      check.detail = buf;
    } else {
      check.detail = format_count(sink.failures, pairs, sink.first);
    }
  });
}

OracleCheck check_maze_structure(const OracleSuiteOptions& opt, int size, ThreadPool& pool) {
  return timed("maze-spanning-tree[" + std::to_string(size) + "]", [&](OracleCheck& check) {
    const uint64_t base =
        derive_seed(derive_seed(opt.seed, "maze-structure"), static_cast<uint64_t>(size));
    FailureSink sink;
    pool.parallel_for(opt.mazes_per_size, [&](int64_t i) {
      RngState rng(derive_seed(base, static_cast<uint64_t>(i)));
      const GridBoard board = generate_maze_instance(size, rng);
      if (auto bad = oracles::maze_validate(board)) {
        sink.fail("maze " + std::to_string(i) + ": " + *bad);
      }
    });
    check.passed = sink.failures == 0;
    check.detail = format_count(sink.failures, opt.mazes_per_size, sink.first);
  });
}

OracleCheck check_perfect_heuristic(const OracleSuiteOptions& opt, int size, ThreadPool& pool) {
  return timed("perfect-heuristic-path[" + std::to_string(size) + "]", [&](OracleCheck& check) {
    const uint64_t base =
        derive_seed(derive_seed(opt.seed, "perfect-heuristic"), static_cast<uint64_t>(size));
    FailureSink sink;
    pool.parallel_for(opt.mazes_per_size, [&](int64_t i) {
      RngState rng(derive_seed(base, static_cast<uint64_t>(i)));
      const GridBoard board = generate_maze_instance(size, rng);
      const std::vector<int> field = oracles::exact_distance_field(board, board.goal);
      std::vector<double> h(field.size());
      for (size_t c = 0; c < field.size(); ++c) h[c] = field[c] < 0 ? 0.0 : field[c];
      const int expansions = astar_expansions(board, h, opt.tie_break).expansions;
      const int distance = field[board.cell_index(board.start.row, board.start.col)];
      if (distance < 0 || expansions != distance) {
        sink.fail("maze " + std::to_string(i) + ": expanded " + std::to_string(expansions) +
                  ", unique path length " + std::to_string(distance));
      }
    });
    check.passed = sink.failures == 0;
    check.detail = format_count(sink.failures, opt.mazes_per_size, sink.first);
  });
}

}  // namespace

std::vector<OracleCheck> run_oracle_suite(const OracleSuiteOptions& options, ThreadPool& pool) {
  const bool walks = options.family_filter.empty() || options.family_filter == "RandomWalk2D";
  const bool mazes = options.family_filter.empty() || options.family_filter == "Maze2D";

  std::vector<OracleCheck> report;
  if (walks) {
    const int n_sizes = static_cast<int>(options.sizes.size());
    for (int s = 0; s < n_sizes; ++s) {
      const int pairs =
          options.walk_pairs / n_sizes + (s < options.walk_pairs % n_sizes ? 1 : 0);
      if (pairs > 0) {
        report.push_back(check_walk_statistics(options, options.sizes[s], pairs, pool));
      }
    }
  }
  if (mazes) {
    for (int size : options.sizes) {
      report.push_back(check_search_equivalence(options, size, pool));
      report.push_back(check_maze_structure(options, size, pool));
      report.push_back(check_perfect_heuristic(options, size, pool));
    }
  }
  return report;
}

}  // namespace planopt
