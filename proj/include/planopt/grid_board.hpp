#pragma once

#include <cstdint>
#include <vector>

namespace planopt {

struct Cell {
  int16_t row = 0;
  int16_t col = 0;
  bool operator==(const Cell&) const = default;
};

/// A problem instance for the grid domains: square occupancy grid plus
/// distinct free start and goal cells with the goal reachable (4-connected).
struct GridBoard {
  int size = 0;
  std::vector<uint8_t> occupancy;  // row-major, 1 = obstacle
  Cell start{};
  Cell goal{};

  bool in_bounds(int r, int c) const { return r >= 0 && r < size && c >= 0 && c < size; }
  bool obstacle(int r, int c) const {
    return occupancy[static_cast<size_t>(r) * static_cast<size_t>(size) + static_cast<size_t>(c)] != 0;
  }
  bool free_cell(int r, int c) const { return in_bounds(r, c) && !obstacle(r, c); }
  int cell_index(int r, int c) const { return r * size + c; }

  bool operator==(const GridBoard&) const = default;
};

}  // namespace planopt
