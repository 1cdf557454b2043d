#pragma once

// Dual-map representation: the 10x10 egocentric decision map and the
// search-area map it is merged into.

#include <array>
#include <bitset>
#include <compare>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dualnav {

struct GridCoord {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const GridCoord&, const GridCoord&) = default;
};

GridCoord operator+(GridCoord a, GridCoord b);
GridCoord operator-(GridCoord a, GridCoord b);
double euclidean(GridCoord a, GridCoord b);

enum class CellState : std::uint8_t { Free, Visited, Blocked, Current, TargetCell };

std::string_view to_string(CellState s);
CellState cell_state_from_string(std::string_view s);

// Grid-frame moves. North decreases the row index.
enum class Action : std::uint8_t { North, South, East, West };

inline constexpr int kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kActions{Action::North, Action::South, Action::East,
                                                           Action::West};
using ActionMask = std::bitset<kNumActions>;

constexpr int index_of(Action a) { return static_cast<int>(a); }
std::string_view to_string(Action a);
GridCoord step(GridCoord from, Action a);

enum class ConstraintClass { Hard, Soft, None };

namespace rewards {
inline constexpr double kReached = 1.0;
inline constexpr double kBlocked = -1.50;
inline constexpr double kVisited = -0.25;
inline constexpr double kValid = -0.04;
inline constexpr double kInvalid = -0.75;
}  // namespace rewards

class GlobalMap {
 public:
  GlobalMap(int width, int height, GridCoord start, GridCoord goal);

  int width() const { return width_; }
  int height() const { return height_; }
  GridCoord start() const { return start_; }
  GridCoord goal() const { return goal_; }

  bool contains(GridCoord c) const;
  CellState at(GridCoord c) const;
  // Blocked is absorbing: writes over a Blocked cell are ignored.
  void set(GridCoord c, CellState s);
  std::size_t count(CellState s) const;

  friend bool operator==(const GlobalMap&, const GlobalMap&) = default;

 private:
  int width_;
  int height_;
  GridCoord start_;
  GridCoord goal_;
  std::vector<CellState> cells_;
};

void to_json(nlohmann::json& j, const GlobalMap& m);
GlobalMap global_map_from_json(const nlohmann::json& j);

class LocalMap {
 public:
  static constexpr int kSize = 10;
  static constexpr int kCells = kSize * kSize;
  static constexpr GridCoord kAgentHome{5, 5};

  static bool in_window(GridCoord local) {
    return local.row >= 0 && local.row < kSize && local.col >= 0 && local.col < kSize;
  }

  CellState at(GridCoord local) const { return cells_[flat(local)]; }
  // True for window cells that fall outside the search area.
  bool outside_search_area(GridCoord local) const { return outside_[flat(local)]; }

  GridCoord agent() const { return agent_; }
  GridCoord origin() const { return origin_; }
  GridCoord target() const { return target_; }
  GridCoord goal() const { return goal_; }
  GridCoord agent_global() const { return to_global(agent_); }
  GridCoord target_global() const { return to_global(target_); }
  bool target_reached() const { return agent_ == target_; }

  GridCoord to_global(GridCoord local) const { return local + origin_; }
  GridCoord to_local(GridCoord global) const { return global - origin_; }

  // Marks a sensed obstacle. Ignored for the agent's own cell. Blocking the
  // target cell moves the target to the nearest open boundary cell.
  void mark_blocked(GridCoord local);

  std::size_t count(CellState s) const;

  friend bool operator==(const LocalMap&, const LocalMap&) = default;

 private:
  friend LocalMap spawn_local_map(const GlobalMap&, GridCoord, GridCoord);
  friend std::optional<LocalMap> apply_move(const LocalMap&, Action);

  static int flat(GridCoord c) { return c.row * kSize + c.col; }
  void set_target(GridCoord local);
  void reselect_target();

  std::array<CellState, kCells> cells_{};
  std::bitset<kCells> outside_;
  GridCoord agent_ = kAgentHome;
  GridCoord origin_;
  GridCoord target_;
  GridCoord goal_;
};

LocalMap spawn_local_map(const GlobalMap& global, GridCoord agent_global, GridCoord goal_global);

// Local coordinate of the goal if it lies inside the window, otherwise the
// boundary cell whose global position is closest to the goal (first in
// row-major order on ties).
GridCoord select_target_cell(const LocalMap& local, GridCoord goal_global);

// The 36 boundary cells of the window, row-major.
const std::array<GridCoord, 36>& boundary_cells();

ConstraintClass classify_action(const LocalMap& local, Action a);
ActionMask valid_actions(const LocalMap& local);

// Empty when the action is Hard-constrained; the input map is left as is.
std::optional<LocalMap> apply_move(const LocalMap& local, Action a);

// Reward for landing on (or attempting) outcome_cell, with
// precedence reached > blocked > visited > valid > invalid.
double reward(GridCoord outcome_cell_global, const LocalMap& local, GridCoord goal_global);

GlobalMap merge_into_global(GlobalMap global, const LocalMap& local);

namespace pixel {
inline constexpr double kFree = 1.0;
inline constexpr double kTarget = 0.5;
inline constexpr double kVisited = 0.0;
inline constexpr double kCurrent = -0.5;
inline constexpr double kBlocked = -1.0;
}  // namespace pixel

using MapRaster = std::array<double, LocalMap::kCells>;
MapRaster render_decision_map(const LocalMap& local);

}  // namespace dualnav
