#pragma once

// One agent flying through a world: the decision map, the search-area map,
// proximity sensing, the camera and obstacle motion, advanced one move at a
// time.

#include <cstdint>
#include <set>
#include <vector>

#include "dualnav/agents.hpp"
#include "dualnav/gridmap.hpp"
#include "dualnav/worldsim.hpp"

namespace dualnav {

struct MoveOutcome {
  Action action = Action::North;
  GridCoord attempted;  // global cell the move aimed at
  ConstraintClass constraint = ConstraintClass::None;
  double reward = 0.0;
  bool moved = false;
  bool target_reached = false;
  bool goal_reached = false;
};

class FlightSession {
 public:
  // Throws std::invalid_argument when start or goal lies outside the world.
  FlightSession(World world, GridCoord start, GridCoord goal, WeatherCondition weather,
                std::uint64_t frame_seed);

  const World& world() const { return world_; }
  const GlobalMap& global() const { return global_; }
  const LocalMap& local() const { return local_; }
  GridCoord position() const { return local_.agent_global(); }
  GridCoord goal() const { return global_.goal(); }
  Action facing() const { return facing_; }
  std::int64_t steps() const { return steps_; }
  bool at_goal() const { return position() == goal(); }

  ActionMask valid() const { return valid_actions(local_); }

  // Camera frame (with weather) plus decision-map raster for the current
  // state. Cached until the next move.
  ObservationPtr observe();

  // Hard-constrained moves are voided: the agent stays and only the reward
  // is produced. Movers then advance one second and the new surroundings are
  // sensed.
  MoveOutcome execute(Action a);

  // Writes the decision map into the search-area map and centres a fresh one
  // on the agent.
  void respawn();
  // Writes the decision map into the search-area map without respawning.
  void merge();

  // Distinct global cells marked Blocked by sensing so far.
  const std::set<GridCoord>& sensed_obstacles() const { return sensed_; }
  // Every position occupied, starting with the start cell.
  const std::vector<GridCoord>& route() const { return route_; }

 private:
  void sense();

  World world_;
  GlobalMap global_;
  LocalMap local_;
  WeatherCondition weather_;
  std::uint64_t frame_seed_;
  Action facing_ = Action::North;
  std::int64_t steps_ = 0;
  std::uint64_t frames_ = 0;
  ObservationPtr cached_;
  std::set<GridCoord> sensed_;
  std::vector<GridCoord> route_;
};

}  // namespace dualnav
