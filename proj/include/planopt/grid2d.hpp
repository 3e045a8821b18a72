#pragma once

#include <span>

#include "planopt/grid_board.hpp"
#include "planopt/rng.hpp"

namespace planopt::grid2d {

/// Canonical direction order for the random walk: up, down, left, right,
/// i.e. (row-1, row+1, col-1, col+1).
inline constexpr int kDirRow[4] = {-1, 1, 0, 0};
inline constexpr int kDirCol[4] = {0, 0, -1, 1};

struct WalkOutcome {
  int steps = 0;
  bool reached = false;
  double objective = 0.0;  // -steps / (4 * size^2)
};

struct SearchOutcome {
  int expansions = 0;
  int n_empty = 0;
  double objective = 0.0;  // -expansions / n_empty
};

int count_free_cells(const GridBoard& board);

/// BFS reachability start -> goal, 4-connected.
bool goal_reachable(const GridBoard& board);

/// One draw of the RandomWalk2D board sampler before the reachability
/// rejection: cells independently obstacles with probability 0.2, start and
/// goal uniform over distinct free cells. Returns false when the board has
/// fewer than two free cells. Exposed so the sampler itself can be tested.
bool sample_randomwalk_candidate(int size, RngState& rng, GridBoard& out);

/// RandomWalk2D instance: rejection-resamples whole boards until the goal is
/// reachable from the start.
GridBoard generate_randomwalk_instance(int size, RngState& rng);

/// Walk from start under fixed direction probabilities (order up, down,
/// left, right). Blocked moves consume a step without moving. Stops on the
/// goal or after 4*size^2 steps.
WalkOutcome simulate_random_walk(const GridBoard& board, std::span<const double> probs,
                                 RngState& rng);

/// Perfect maze via Wilson's algorithm: loop-erased random walks build a
/// uniform spanning tree over the (even,even) passage lattice; each tree edge
/// clears the wall cell between its endpoints. Start and goal are uniform
/// over distinct free cells. Requires odd size >= 5.
GridBoard generate_maze_instance(int size, RngState& rng);

/// Tie-breaking for equal A* priorities: equal f broken by larger g, then by
/// row-major cell index. `inverted_index` flips the index comparison and
/// exists only as a negative control for the oracle equivalence check.
enum class TieBreak { standard, inverted_index };

/// A* over free cells with unit edge cost and heuristic h indexed row-major
/// over all size^2 cells (obstacle entries ignored). A node counts as
/// expanded when popped, excluding the goal pop; no reopening.
SearchOutcome astar_expansions(const GridBoard& board, std::span<const double> h,
                               TieBreak tie_break = TieBreak::standard);

}  // namespace planopt::grid2d
