#include "dualnav/gridmap.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dualnav {

GridCoord operator+(GridCoord a, GridCoord b) { return {a.row + b.row, a.col + b.col}; }
GridCoord operator-(GridCoord a, GridCoord b) { return {a.row - b.row, a.col - b.col}; }

double euclidean(GridCoord a, GridCoord b) {
  const double dr = a.row - b.row;
  const double dc = a.col - b.col;
  return std::sqrt(dr * dr + dc * dc);
}

std::string_view to_string(CellState s) {
  switch (s) {
    case CellState::Free: return "free";
    case CellState::Visited: return "visited";
    case CellState::Blocked: return "blocked";
    case CellState::Current: return "current";
    case CellState::TargetCell: return "target";
  }
  return "free";
}

CellState cell_state_from_string(std::string_view s) {
  if (s == "free") return CellState::Free;
  if (s == "visited") return CellState::Visited;
  if (s == "blocked") return CellState::Blocked;
  if (s == "current") return CellState::Current;
  if (s == "target") return CellState::TargetCell;
  throw std::invalid_argument("unknown cell state '" + std::string(s) + "'");
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::North: return "north";
    case Action::South: return "south";
    case Action::East: return "east";
    case Action::West: return "west";
  }
  return "north";
}

GridCoord step(GridCoord from, Action a) {
  switch (a) {
    case Action::North: return {from.row - 1, from.col};
    case Action::South: return {from.row + 1, from.col};
    case Action::East: return {from.row, from.col + 1};
    case Action::West: return {from.row, from.col - 1};
  }
  return from;
}

// ---------------------------------------------------------------- GlobalMap

GlobalMap::GlobalMap(int width, int height, GridCoord start, GridCoord goal)
    : width_(width), height_(height), start_(start), goal_(goal) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("GlobalMap: empty dimensions");
  if (!contains(start) || !contains(goal)) {
    throw std::invalid_argument("GlobalMap: start and goal must lie inside the map");
  }
  cells_.assign(static_cast<std::size_t>(width) * height, CellState::Free);
}

bool GlobalMap::contains(GridCoord c) const {
  return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
}

CellState GlobalMap::at(GridCoord c) const {
  if (!contains(c)) throw std::out_of_range("GlobalMap::at: outside map");
  return cells_[static_cast<std::size_t>(c.row) * width_ + c.col];
}

void GlobalMap::set(GridCoord c, CellState s) {
  if (!contains(c)) throw std::out_of_range("GlobalMap::set: outside map");
  auto& cell = cells_[static_cast<std::size_t>(c.row) * width_ + c.col];
  if (cell != CellState::Blocked) cell = s;
}

std::size_t GlobalMap::count(CellState s) const {
  std::size_t n = 0;
  for (auto c : cells_) n += (c == s);
  return n;
}

void to_json(nlohmann::json& j, const GlobalMap& m) {
  auto cells = nlohmann::json::array();
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      const auto s = m.at({r, c});
      if (s != CellState::Free) cells.push_back({{"r", r}, {"c", c}, {"state", to_string(s)}});
    }
  }
  j = {{"width", m.width()},
       {"height", m.height()},
       {"start", {m.start().row, m.start().col}},
       {"goal", {m.goal().row, m.goal().col}},
       {"cells", std::move(cells)}};
}

GlobalMap global_map_from_json(const nlohmann::json& j) {
  GlobalMap m(j.at("width").get<int>(), j.at("height").get<int>(),
              {j.at("start").at(0).get<int>(), j.at("start").at(1).get<int>()},
              {j.at("goal").at(0).get<int>(), j.at("goal").at(1).get<int>()});
  for (const auto& cell : j.at("cells")) {
    m.set({cell.at("r").get<int>(), cell.at("c").get<int>()},
          cell_state_from_string(cell.at("state").get<std::string>()));
  }
  return m;
}

// ----------------------------------------------------------------- LocalMap

const std::array<GridCoord, 36>& boundary_cells() {
  static const auto cells = [] {
    std::array<GridCoord, 36> out{};
    std::size_t i = 0;
    for (int r = 0; r < LocalMap::kSize; ++r) {
      for (int c = 0; c < LocalMap::kSize; ++c) {
        if (r == 0 || r == LocalMap::kSize - 1 || c == 0 || c == LocalMap::kSize - 1) {
          out[i++] = {r, c};
        }
      }
    }
    return out;
  }();
  return cells;
}

std::size_t LocalMap::count(CellState s) const {
  std::size_t n = 0;
  for (auto c : cells_) n += (c == s);
  return n;
}

void LocalMap::set_target(GridCoord local) {
  if (cells_[flat(target_)] == CellState::TargetCell) cells_[flat(target_)] = CellState::Free;
  target_ = local;
  if (cells_[flat(local)] == CellState::Free) cells_[flat(local)] = CellState::TargetCell;
}

void LocalMap::reselect_target() {
  const GridCoord goal_local = to_local(goal_);
  if (in_window(goal_local) && at(goal_local) != CellState::Blocked) {
    set_target(goal_local);
    return;
  }
  std::optional<GridCoord> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (auto cell : boundary_cells()) {
    const auto s = at(cell);
    if (s == CellState::Blocked || s == CellState::Current) continue;
    const double d = euclidean(to_global(cell), goal_);
    if (d < best_d) {
      best_d = d;
      best = cell;
    }
  }
  // A fully walled-in window keeps its blocked target; the mission budget
  // then ends the flight.
  if (best) set_target(*best);
}

void LocalMap::mark_blocked(GridCoord local) {
  if (!in_window(local)) return;
  auto& cell = cells_[flat(local)];
  if (cell == CellState::Current) return;
  const bool was_target = (local == target_) && !target_reached();
  cell = CellState::Blocked;
  if (was_target) reselect_target();
}

LocalMap spawn_local_map(const GlobalMap& global, GridCoord agent_global, GridCoord goal_global) {
  if (!global.contains(agent_global)) {
    throw std::invalid_argument("spawn_local_map: agent outside the search area");
  }
  LocalMap m;
  m.origin_ = agent_global - LocalMap::kAgentHome;
  m.agent_ = LocalMap::kAgentHome;
  m.goal_ = goal_global;
  for (int r = 0; r < LocalMap::kSize; ++r) {
    for (int c = 0; c < LocalMap::kSize; ++c) {
      if (!global.contains(m.to_global({r, c}))) {
        m.cells_[LocalMap::flat({r, c})] = CellState::Blocked;
        m.outside_.set(static_cast<std::size_t>(LocalMap::flat({r, c})));
      }
    }
  }
  m.cells_[LocalMap::flat(m.agent_)] = CellState::Current;
  const GridCoord target = select_target_cell(m, goal_global);
  m.target_ = target;
  if (m.at(target) == CellState::Blocked) {
    m.reselect_target();
  } else {
    m.set_target(target);
  }
  return m;
}

GridCoord select_target_cell(const LocalMap& local, GridCoord goal_global) {
  const GridCoord goal_local = local.to_local(goal_global);
  if (LocalMap::in_window(goal_local)) return goal_local;
  GridCoord best = boundary_cells().front();
  double best_d = std::numeric_limits<double>::infinity();
  for (auto cell : boundary_cells()) {
    const double d = euclidean(local.to_global(cell), goal_global);
    if (d < best_d) {
      best_d = d;
      best = cell;
    }
  }
  return best;
}

ConstraintClass classify_action(const LocalMap& local, Action a) {
  const GridCoord dest = step(local.agent(), a);
  if (!LocalMap::in_window(dest)) return ConstraintClass::Hard;
  switch (local.at(dest)) {
    case CellState::Blocked:
    case CellState::Current: return ConstraintClass::Hard;
    case CellState::Visited: return ConstraintClass::Soft;
    case CellState::Free:
    case CellState::TargetCell: return ConstraintClass::None;
  }
  return ConstraintClass::Hard;
}

ActionMask valid_actions(const LocalMap& local) {
  ActionMask mask;
  for (auto a : kActions) {
    if (classify_action(local, a) != ConstraintClass::Hard) mask.set(index_of(a));
  }
  return mask;
}

std::optional<LocalMap> apply_move(const LocalMap& local, Action a) {
  if (classify_action(local, a) == ConstraintClass::Hard) return std::nullopt;
  LocalMap next = local;
  const GridCoord dest = step(local.agent(), a);
  next.cells_[LocalMap::flat(local.agent())] = CellState::Visited;
  next.cells_[LocalMap::flat(dest)] = CellState::Current;
  next.agent_ = dest;
  return next;
}

double reward(GridCoord outcome_cell_global, const LocalMap& local, GridCoord goal_global) {
  if (outcome_cell_global == goal_global) return rewards::kReached;
  const GridCoord cell = local.to_local(outcome_cell_global);
  if (!LocalMap::in_window(cell) || local.outside_search_area(cell)) return rewards::kInvalid;
  switch (local.at(cell)) {
    case CellState::Blocked: return rewards::kBlocked;
    case CellState::Visited: return rewards::kVisited;
    case CellState::Free:
    case CellState::TargetCell: return rewards::kValid;
    case CellState::Current: break;
  }
  return rewards::kInvalid;
}

GlobalMap merge_into_global(GlobalMap global, const LocalMap& local) {
  for (int r = 0; r < LocalMap::kSize; ++r) {
    for (int c = 0; c < LocalMap::kSize; ++c) {
      const GridCoord cell{r, c};
      if (local.outside_search_area(cell)) continue;
      const auto s = local.at(cell);
      if (s != CellState::Visited && s != CellState::Blocked) continue;
      const GridCoord g = local.to_global(cell);
      if (global.contains(g)) global.set(g, s);
    }
  }
  return global;
}

MapRaster render_decision_map(const LocalMap& local) {
  MapRaster out{};
  for (int r = 0; r < LocalMap::kSize; ++r) {
    for (int c = 0; c < LocalMap::kSize; ++c) {
      double v = pixel::kFree;
      switch (local.at({r, c})) {
        case CellState::Free: v = pixel::kFree; break;
        case CellState::TargetCell: v = pixel::kTarget; break;
        case CellState::Visited: v = pixel::kVisited; break;
        case CellState::Current: v = pixel::kCurrent; break;
        case CellState::Blocked: v = pixel::kBlocked; break;
      }
      out[static_cast<std::size_t>(r * LocalMap::kSize + c)] = v;
    }
  }
  return out;
}

}  // namespace dualnav
