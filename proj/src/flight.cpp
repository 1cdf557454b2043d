#include "dualnav/flight.hpp"

#include <stdexcept>

namespace dualnav {

FlightSession::FlightSession(World world, GridCoord start, GridCoord goal, WeatherCondition weather,
                             std::uint64_t frame_seed)
    : world_(std::move(world)),
      global_(world_.width_cells(), world_.height_cells(), start, goal),
      local_(spawn_local_map(global_, start, goal)),
      weather_(weather),
      frame_seed_(frame_seed) {
  route_.push_back(start);
  sense();
}

void FlightSession::sense() {
  for (GridCoord cell : sense_obstacles(world_, position())) {
    if (cell == goal()) continue;
    const GridCoord l = local_.to_local(cell);
    if (!LocalMap::in_window(l) || local_.outside_search_area(l)) continue;
    local_.mark_blocked(l);
    if (local_.at(l) == CellState::Blocked) sensed_.insert(cell);
  }
  cached_.reset();
}

ObservationPtr FlightSession::observe() {
  if (cached_) return cached_;
  auto obs = std::make_shared<Observation>();
  const CameraFrame raw = render_frame(world_, position(), facing_);
  obs->frame = apply_weather(raw, weather_, derive_seed(frame_seed_, frames_++));
  obs->map = render_decision_map(local_);
  cached_ = std::move(obs);
  return cached_;
}

MoveOutcome FlightSession::execute(Action a) {
  MoveOutcome out;
  out.action = a;
  out.attempted = step(position(), a);
  out.constraint = classify_action(local_, a);
  out.reward = reward(out.attempted, local_, local_.target_global());
  if (auto next = apply_move(local_, a)) {
    local_ = *next;
    facing_ = a;
    out.moved = true;
    route_.push_back(position());
  }
  ++steps_;
  out.target_reached = local_.target_reached();
  out.goal_reached = at_goal();
  if (!world_.movers().empty()) world_ = step_dynamics(world_, 1.0);
  sense();
  return out;
}

void FlightSession::merge() { global_ = merge_into_global(std::move(global_), local_); }

void FlightSession::respawn() {
  merge();
  local_ = spawn_local_map(global_, position(), goal());
  sense();
}

}  // namespace dualnav
