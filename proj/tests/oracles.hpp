#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "dualnav/gridmap.hpp"
#include "dualnav/worldsim.hpp"

namespace oracle {

using dualnav::Action;
using dualnav::CellState;
using dualnav::GridCoord;

inline double dist(double r0, double c0, double r1, double c1) {
  return std::sqrt((r0 - r1) * (r0 - r1) + (c0 - c1) * (c0 - c1));
}

// Exhaustive search over every cell of the 10x10 ring.
inline GridCoord target_cell(GridCoord agent_global, GridCoord goal_global) {
  const int r0 = agent_global.row - 5;
  const int c0 = agent_global.col - 5;
  const int gr = goal_global.row - r0;
  const int gc = goal_global.col - c0;
  if (gr >= 0 && gr < 10 && gc >= 0 && gc < 10) return {gr, gc};
  GridCoord best{-1, -1};
  double best_d = std::numeric_limits<double>::max();
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 10; ++c) {
      const bool ring = r == 0 || r == 9 || c == 0 || c == 9;
      if (!ring) continue;
      const double d = dist(r0 + r, c0 + c, goal_global.row, goal_global.col);
      if (d < best_d) {
        best_d = d;
        best = {r, c};
      }
    }
  }
  return best;
}

inline GridCoord neighbour(GridCoord p, int action_index) {
  static const int dr[4] = {-1, 1, 0, 0};
  static const int dc[4] = {0, 0, 1, -1};
  return {p.row + dr[action_index], p.col + dc[action_index]};
}

// Valid destinations are in-window cells that are free, visited or the target.
inline std::optional<int> corrected_action(int predicted, GridCoord pos, const std::vector<bool>& valid,
                                           GridCoord target) {
  if (valid[static_cast<std::size_t>(predicted)]) return predicted;
  std::optional<int> best;
  double best_d = 0.0;
  for (int a = 0; a < 4; ++a) {
    if (!valid[static_cast<std::size_t>(a)]) continue;
    const auto d = neighbour(pos, a);
    const double dd = dist(d.row, d.col, target.row, target.col);
    if (!best || dd < best_d) {
      best = a;
      best_d = dd;
    }
  }
  return best;
}

// Closest point of the cell square to the disc centre, computed per axis.
inline bool disc_touches_cell(double x, double y, double radius, GridCoord cell) {
  const double gx = std::max({cell.col - x, 0.0, x - (cell.col + 1.0)});
  const double gy = std::max({cell.row - y, 0.0, y - (cell.row + 1.0)});
  return gx * gx + gy * gy < radius * radius;
}

inline std::set<GridCoord> sensed(const dualnav::World& world, GridCoord agent) {
  std::set<GridCoord> out;
  const double cx = agent.col + 0.5;
  const double cy = agent.row + 0.5;
  for (const auto& o : world.obstacles()) {
    if (dist(o.y, o.x, cy, cx) - o.radius >= 1.0) continue;
    for (int a = 0; a < 4; ++a) {
      const auto n = neighbour(agent, a);
      if (!world.contains(n)) continue;
      if (disc_touches_cell(o.x, o.y, o.radius, n)) out.insert(n);
    }
  }
  return out;
}

}  // namespace oracle
