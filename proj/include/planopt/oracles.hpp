#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planopt/grid_board.hpp"

namespace planopt::oracles {

/// Exact E[min(T, cap)] for the random walk's absorption time T, computed by
/// iterating the occupancy distribution of the induced absorbing chain for
/// cap steps (honors the step cap exactly; no matrix inversion).
/// cap < 0 selects the simulator's cap of 4 * size^2.
double expected_truncated_steps(const GridBoard& board, std::span<const double> probs,
                                int cap = -1);

/// Uniform-cost search written independently of the A* implementation
/// (linear min-scan instead of a heap) with the same tie-breaking rule.
/// Returns expansions excluding the goal pop.
int dijkstra_expansions_reference(const GridBoard& board);

/// Perfect-maze check: free-cell graph must be connected with
/// edge count == free cells - 1 (tree, hence unique paths).
/// Returns nullopt when the board passes, otherwise a description.
std::optional<std::string> maze_validate(const GridBoard& board);

/// BFS distances from the goal over free cells; -1 marks obstacles and
/// unreachable cells. Index row-major over all size^2 cells.
std::vector<int> exact_distance_field(const GridBoard& board, Cell goal);

}  // namespace planopt::oracles
