#include "planopt/oracles.hpp"

#include <limits>
#include <stdexcept>

#include "planopt/grid2d.hpp"

namespace planopt::oracles {

using grid2d::kDirCol;
using grid2d::kDirRow;

double expected_truncated_steps(const GridBoard& board, std::span<const double> probs, int cap) {
  if (probs.size() != 4) throw std::invalid_argument("need 4 direction probabilities");
  const int size = board.size;
  const int n = size * size;
  if (cap < 0) cap = 4 * n;
  const int goal_idx = board.cell_index(board.goal.row, board.goal.col);

  std::vector<double> mass(static_cast<size_t>(n), 0.0);
  std::vector<double> next(static_cast<size_t>(n), 0.0);
  mass[static_cast<size_t>(board.cell_index(board.start.row, board.start.col))] = 1.0;

  double expected = 0.0;
  for (int t = 0; t < cap; ++t) {
    double surviving = 0.0;
    for (double m : mass) surviving += m;
    expected += surviving;  // P(T > t)
    if (surviving == 0.0) break;

    std::fill(next.begin(), next.end(), 0.0);
    for (int idx = 0; idx < n; ++idx) {
      const double m = mass[static_cast<size_t>(idx)];
      if (m == 0.0) continue;
      const int r = idx / size;
      const int c = idx % size;
      for (int d = 0; d < 4; ++d) {
        const int nr = r + kDirRow[d];
        const int nc = c + kDirCol[d];
        const int target = board.free_cell(nr, nc) ? board.cell_index(nr, nc) : idx;
        if (target == goal_idx) continue;  // absorbed
        next[static_cast<size_t>(target)] += m * probs[static_cast<size_t>(d)];
      }
    }
    mass.swap(next);
  }
  return expected;
}

int dijkstra_expansions_reference(const GridBoard& board) {
  const int size = board.size;
  const int n = size * size;
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> dist(static_cast<size_t>(n), kInf);
  std::vector<uint8_t> done(static_cast<size_t>(n), 0);
  const int start_idx = board.cell_index(board.start.row, board.start.col);
  const int goal_idx = board.cell_index(board.goal.row, board.goal.col);
  dist[static_cast<size_t>(start_idx)] = 0;

  int expansions = 0;
  while (true) {
    // Selection scan in row-major order: smallest distance wins, ties go to
    // the smaller index. Matches the A* rule at h == 0, where the
    // larger-g preference is vacuous.
    int pick = -1;
    int pick_dist = kInf;
    for (int idx = 0; idx < n; ++idx) {
      if (done[static_cast<size_t>(idx)] || dist[static_cast<size_t>(idx)] == kInf) continue;
      if (dist[static_cast<size_t>(idx)] < pick_dist) {
        pick_dist = dist[static_cast<size_t>(idx)];
        pick = idx;
      }
    }
    if (pick < 0 || pick == goal_idx) break;
    done[static_cast<size_t>(pick)] = 1;
    ++expansions;
    const int r = pick / size;
    const int c = pick % size;
    for (int d = 0; d < 4; ++d) {
      const int nr = r + kDirRow[d];
      const int nc = c + kDirCol[d];
      if (!board.free_cell(nr, nc)) continue;
      const int ni = board.cell_index(nr, nc);
      if (done[static_cast<size_t>(ni)]) continue;
      dist[static_cast<size_t>(ni)] = std::min(dist[static_cast<size_t>(ni)], pick_dist + 1);
    }
  }
  return expansions;
}

std::optional<std::string> maze_validate(const GridBoard& board) {
  const int size = board.size;
  int free_count = 0;
  int edge_count = 0;  // horizontal + vertical adjacencies between free cells
  int first_free = -1;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      if (board.obstacle(r, c)) continue;
      ++free_count;
      if (first_free < 0) first_free = board.cell_index(r, c);
      if (board.free_cell(r, c + 1)) ++edge_count;
      if (board.free_cell(r + 1, c)) ++edge_count;
    }
  }
  if (free_count == 0) return "no free cells";

  // Connectivity via BFS from any free cell.
  std::vector<uint8_t> seen(static_cast<size_t>(size) * static_cast<size_t>(size), 0);
  std::vector<int> queue{first_free};
  seen[static_cast<size_t>(first_free)] = 1;
  int visited = 0;
  for (size_t head = 0; head < queue.size(); ++head) {
    const int idx = queue[head];
    ++visited;
    const int r = idx / size;
    const int c = idx % size;
    for (int d = 0; d < 4; ++d) {
      const int nr = r + kDirRow[d];
      const int nc = c + kDirCol[d];
      if (!board.free_cell(nr, nc)) continue;
      const int ni = board.cell_index(nr, nc);
      if (!seen[static_cast<size_t>(ni)]) {
        seen[static_cast<size_t>(ni)] = 1;
        queue.push_back(ni);
      }
    }
  }
  if (visited != free_count) {
    return "disconnected: reached " + std::to_string(visited) + " of " +
           std::to_string(free_count) + " free cells";
  }
  if (edge_count != free_count - 1) {
    return "edge count " + std::to_string(edge_count) + " != free cells - 1 = " +
           std::to_string(free_count - 1);
  }
  return std::nullopt;
}

std::vector<int> exact_distance_field(const GridBoard& board, Cell goal) {
  const int size = board.size;
  const int n = size * size;
  std::vector<int> dist(static_cast<size_t>(n), -1);
  if (!board.free_cell(goal.row, goal.col)) return dist;
  std::vector<int> queue;
  queue.reserve(static_cast<size_t>(n));
  const int goal_idx = board.cell_index(goal.row, goal.col);
  dist[static_cast<size_t>(goal_idx)] = 0;
  queue.push_back(goal_idx);
  for (size_t head = 0; head < queue.size(); ++head) {
    const int idx = queue[head];
    const int r = idx / size;
    const int c = idx % size;
    for (int d = 0; d < 4; ++d) {
      const int nr = r + kDirRow[d];
      const int nc = c + kDirCol[d];
      if (!board.free_cell(nr, nc)) continue;
      const int ni = board.cell_index(nr, nc);
      if (dist[static_cast<size_t>(ni)] < 0) {
        dist[static_cast<size_t>(ni)] = dist[static_cast<size_t>(idx)] + 1;
        queue.push_back(ni);
      }
    }
  }
  return dist;
}

}  // namespace planopt::oracles
