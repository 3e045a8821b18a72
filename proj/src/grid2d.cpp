#include "planopt/grid2d.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <vector>

namespace planopt::grid2d {

namespace {

constexpr double kObstacleProbability = 0.2;

void check_probs(std::span<const double> probs) {
  if (probs.size() != 4) throw std::invalid_argument("walk requires 4 direction probabilities");
}

}  // namespace

int count_free_cells(const GridBoard& board) {
  int n = 0;
  for (uint8_t c : board.occupancy) n += (c == 0);
  return n;
}

bool goal_reachable(const GridBoard& board) {
  const int n = board.size * board.size;
  std::vector<uint8_t> seen(static_cast<size_t>(n), 0);
  std::vector<int> queue;
  queue.reserve(static_cast<size_t>(n));
  queue.push_back(board.cell_index(board.start.row, board.start.col));
  seen[static_cast<size_t>(queue[0])] = 1;
  const int goal_idx = board.cell_index(board.goal.row, board.goal.col);
  for (size_t head = 0; head < queue.size(); ++head) {
    const int idx = queue[head];
    if (idx == goal_idx) return true;
    const int r = idx / board.size;
    const int c = idx % board.size;
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
  return false;
}

bool sample_randomwalk_candidate(int size, RngState& rng, GridBoard& out) {
  out.size = size;
  out.occupancy.assign(static_cast<size_t>(size) * static_cast<size_t>(size), 0);
  for (auto& cell : out.occupancy) cell = rng.uniform() < kObstacleProbability ? 1 : 0;

  std::vector<int> free_cells;
  free_cells.reserve(out.occupancy.size());
  for (int i = 0; i < size * size; ++i) {
    if (out.occupancy[static_cast<size_t>(i)] == 0) free_cells.push_back(i);
  }
  if (free_cells.size() < 2) return false;

  const auto si = rng.uniform_below(free_cells.size());
  auto gi = rng.uniform_below(free_cells.size() - 1);
  if (gi >= si) ++gi;  // uniform over distinct pairs
  const int s = free_cells[si];
  const int g = free_cells[gi];
  out.start = {static_cast<int16_t>(s / size), static_cast<int16_t>(s % size)};
  out.goal = {static_cast<int16_t>(g / size), static_cast<int16_t>(g % size)};
  return true;
}

GridBoard generate_randomwalk_instance(int size, RngState& rng) {
  if (size < 5) throw std::invalid_argument("RandomWalk2D size must be >= 5");
  GridBoard board;
  while (true) {
    if (!sample_randomwalk_candidate(size, rng, board)) continue;
    if (goal_reachable(board)) return board;
  }
}

WalkOutcome simulate_random_walk(const GridBoard& board, std::span<const double> probs,
                                 RngState& rng) {
  check_probs(probs);
  const int cap = 4 * board.size * board.size;
  const double c0 = probs[0];
  const double c1 = c0 + probs[1];
  const double c2 = c1 + probs[2];
  int r = board.start.row;
  int c = board.start.col;
  for (int step = 1; step <= cap; ++step) {
    const double u = rng.uniform();
    const int d = u < c0 ? 0 : u < c1 ? 1 : u < c2 ? 2 : 3;
    const int nr = r + kDirRow[d];
    const int nc = c + kDirCol[d];
    if (board.free_cell(nr, nc)) {
      r = nr;
      c = nc;
    }
    if (r == board.goal.row && c == board.goal.col) {
      return {step, true, -static_cast<double>(step) / cap};
    }
  }
  return {cap, false, -1.0};
}

GridBoard generate_maze_instance(int size, RngState& rng) {
  if (size < 5 || size % 2 == 0) throw std::invalid_argument("Maze2D size must be odd and >= 5");
  const int k = (size + 1) / 2;  // passage lattice is k x k at (even, even) cells
  const int n = k * k;

  GridBoard board;
  board.size = size;
  board.occupancy.assign(static_cast<size_t>(size) * static_cast<size_t>(size), 1);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      board.occupancy[static_cast<size_t>(board.cell_index(2 * i, 2 * j))] = 0;
    }
  }

  // Wilson's algorithm over the lattice. The walk records the last exit
  // direction from each visited node; retracing those directions from the
  // walk's origin is the loop-erased path.
  std::vector<uint8_t> in_tree(static_cast<size_t>(n), 0);
  std::vector<int8_t> exit_dir(static_cast<size_t>(n), -1);
  in_tree[0] = 1;
  const auto lattice_neighbor = [k](int node, int d) {
    const int i = node / k;
    const int j = node % k;
    const int ni = i + kDirRow[d];
    const int nj = j + kDirCol[d];
    if (ni < 0 || ni >= k || nj < 0 || nj >= k) return -1;
    return ni * k + nj;
  };
  for (int origin = 1; origin < n; ++origin) {
    if (in_tree[static_cast<size_t>(origin)]) continue;
    int u = origin;
    while (!in_tree[static_cast<size_t>(u)]) {
      int dirs[4];
      int n_dirs = 0;
      for (int d = 0; d < 4; ++d) {
        if (lattice_neighbor(u, d) >= 0) dirs[n_dirs++] = d;
      }
      const int d = dirs[rng.uniform_below(static_cast<uint64_t>(n_dirs))];
      exit_dir[static_cast<size_t>(u)] = static_cast<int8_t>(d);
      u = lattice_neighbor(u, d);
    }
    u = origin;
    while (!in_tree[static_cast<size_t>(u)]) {
      in_tree[static_cast<size_t>(u)] = 1;
      const int d = exit_dir[static_cast<size_t>(u)];
      const int v = lattice_neighbor(u, d);
      // Clear the wall cell between lattice nodes u and v.
      const int wall_r = 2 * (u / k) + kDirRow[d];
      const int wall_c = 2 * (u % k) + kDirCol[d];
      board.occupancy[static_cast<size_t>(board.cell_index(wall_r, wall_c))] = 0;
      u = v;
    }
  }

  std::vector<int> free_cells;
  free_cells.reserve(static_cast<size_t>(2 * n - 1));
  for (int i = 0; i < size * size; ++i) {
    if (board.occupancy[static_cast<size_t>(i)] == 0) free_cells.push_back(i);
  }
  const auto si = rng.uniform_below(free_cells.size());
  auto gi = rng.uniform_below(free_cells.size() - 1);
  if (gi >= si) ++gi;
  const int s = free_cells[si];
  const int g = free_cells[gi];
  board.start = {static_cast<int16_t>(s / size), static_cast<int16_t>(s % size)};
  board.goal = {static_cast<int16_t>(g / size), static_cast<int16_t>(g % size)};
  return board;
}

SearchOutcome astar_expansions(const GridBoard& board, std::span<const double> h,
                               TieBreak tie_break) {
  const int size = board.size;
  if (static_cast<int>(h.size()) != size * size) {
    throw std::invalid_argument("heuristic must cover all size^2 cells");
  }
  struct Entry {
    double f;
    int g;
    int idx;
  };
  const bool standard = tie_break == TieBreak::standard;
  const auto worse = [standard](const Entry& a, const Entry& b) {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g < b.g;  // prefer deeper nodes
    return standard ? a.idx > b.idx : a.idx < b.idx;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);

  const int n = size * size;
  std::vector<int> best_g(static_cast<size_t>(n), -1);
  std::vector<uint8_t> closed(static_cast<size_t>(n), 0);
  const int start_idx = board.cell_index(board.start.row, board.start.col);
  const int goal_idx = board.cell_index(board.goal.row, board.goal.col);
  best_g[static_cast<size_t>(start_idx)] = 0;
  open.push({h[static_cast<size_t>(start_idx)], 0, start_idx});

  int expansions = 0;
  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    if (closed[static_cast<size_t>(e.idx)]) continue;  // stale duplicate
    if (e.idx == goal_idx) break;                      // goal pop not counted
    closed[static_cast<size_t>(e.idx)] = 1;
    ++expansions;
    const int r = e.idx / size;
    const int c = e.idx % size;
    for (int d = 0; d < 4; ++d) {
      const int nr = r + kDirRow[d];
      const int nc = c + kDirCol[d];
      if (!board.free_cell(nr, nc)) continue;
      const int ni = board.cell_index(nr, nc);
      if (closed[static_cast<size_t>(ni)]) continue;
      const int ng = e.g + 1;
      if (best_g[static_cast<size_t>(ni)] < 0 || ng < best_g[static_cast<size_t>(ni)]) {
        best_g[static_cast<size_t>(ni)] = ng;
        open.push({ng + h[static_cast<size_t>(ni)], ng, ni});
      }
    }
  }

  const int n_empty = count_free_cells(board);
  return {expansions, n_empty, -static_cast<double>(expansions) / n_empty};
}

}  // namespace planopt::grid2d
