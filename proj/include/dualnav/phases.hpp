#pragma once

// The two training regimes: episodic exploration with free resets, and
// continuous exploitation flights that keep learning online.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dualnav/agents.hpp"
#include "dualnav/flight.hpp"
#include "dualnav/worldsim.hpp"

namespace dualnav {

struct TrainingEnv {
  World world;
  GridCoord goal;
  WeatherCondition weather;
};

struct EpisodeLog {
  int episode = 0;
  int steps = 0;
  double reward_sum = 0.0;
  bool success = false;
  int streak = 0;
  std::optional<double> loss_mean;

  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;
};

struct ExplorationResult {
  std::vector<EpisodeLog> episodes;
  bool converged = false;
};

// Cells an episode may start from: obstacle-free and not the goal.
std::vector<GridCoord> start_cells(const TrainingEnv& env);

// Runs episodes from random free cells until success_streak consecutive
// target-cell arrivals or max_episodes. Greedy actions are taken over all
// four outputs and never corrected; random actions come from the valid set.
ExplorationResult run_exploration_phase(Learner& learner, const TrainingEnv& env, std::uint64_t seed);

std::string training_log_csv(const std::vector<EpisodeLog>& log);
void write_training_log(const std::vector<EpisodeLog>& log, const std::filesystem::path& path);

struct MissionEnv {
  World world;
  GridCoord start;
  GridCoord goal;
  WeatherCondition weather;
};

struct MissionReport {
  std::string label;
  std::string method;
  Domain domain = Domain::Forest;
  WeatherCondition weather;
  double distance_m = 0.0;
  double time_s = 0.0;
  bool completed = false;
  int obstacles = 0;
  int predictions = 0;
  int corrections = 0;
  int random = 0;
  std::vector<GridCoord> route;
  // "", "boxed_in" or "step_budget".
  std::string failure;
  // Executed moves whose destination was not free or visited.
  int safety_violations = 0;

  int decisions() const { return predictions + corrections + random; }
  // Decision counts sum to the executed steps and time matches the route.
  bool consistent() const;

  friend bool operator==(const MissionReport&, const MissionReport&) = default;
};

// Called before every executed move with the decision map it is taken on.
using MoveAudit = std::function<void(const LocalMap& before, const ActionChoice& choice)>;

// Flies start -> goal with epsilon_test, correcting invalid predictions toward
// the target cell, learning after every move, and respawning the decision map
// at each target cell. Fails when boxed in or out of steps.
MissionReport run_exploitation_phase(Learner& learner, const MissionEnv& env, std::uint64_t seed,
                                     const MoveAudit& audit = {});

}  // namespace dualnav
