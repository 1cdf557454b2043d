#pragma once

// Mission definitions, the ten-test evaluation sequence, and the scalar
// Q-value decay experiment.

#include <cstdint>
#include <string>
#include <vector>

#include "dualnav/agents.hpp"
#include "dualnav/phases.hpp"
#include "dualnav/worldsim.hpp"

namespace dualnav {

struct MissionSpec {
  std::string label;
  WorldSpec world;
  WeatherCondition weather;
  GridCoord start;
  GridCoord goal;
  double target_distance = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const MissionSpec&, const MissionSpec&) = default;
};

// Start and goal on a diagonal, `margin` cells in from the world edge, with
// the goal round(distance / sqrt 2) cells along each axis. The world is
// sized to fit and seeded from `seed`; the domain's default density applies.
MissionSpec diagonal_mission(std::string label, Domain domain, double distance,
                             WeatherCondition weather, std::uint64_t seed, int margin = 5);

MissionEnv build_mission_env(const MissionSpec& spec);

// Flies the mission with the learner's current parameters (which keep
// training online) and reports against spec.target_distance.
MissionReport run_mission(const MissionSpec& spec, Learner& learner, const MoveAudit& audit = {});

// F100, F400, s15, d15, f15, s30, d30, f30, P400, S400. `scale` multiplies
// the 100 m and 400 m target distances.
std::vector<MissionSpec> test_sequence(std::uint64_t seed, double scale = 1.0);

// Runs the sequence in order on one learner, so online updates carry over
// from each test to the next. Failures are recorded and the sequence goes on.
std::vector<MissionReport> run_test_sequence(Learner& learner, std::uint64_t seed, double scale = 1.0,
                                             const MoveAudit& audit = {});

// ------------------------------------------------------------------ decay

struct DecayConfig {
  int population = 100;
  double reward = -0.04;
  double gamma = 0.95;
  double initial = -0.04;
  int updates = 500;
  // Step size of q <- q + alpha * (target(q) - q).
  double alpha = 1.0;
  // Chance that a given state is replayed at a given update index.
  double replay_probability = 0.5;
  std::uint64_t seed = 0;

  friend bool operator==(const DecayConfig&, const DecayConfig&) = default;
};

struct DecayQuartiles {
  int update = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;

  friend bool operator==(const DecayQuartiles&, const DecayQuartiles&) = default;
};

struct DecayResult {
  UpdateRule rule = UpdateRule::EDDQN;
  // One row per update index 1..K.
  std::vector<DecayQuartiles> rows;
  // values[k][i]: state i after update index k; values[0] is the initial
  // population.
  std::vector<std::vector<double>> values;

  const std::vector<double>& final_values() const { return values.back(); }
};

// Each state bootstraps from its own stored value, as if the same transition
// were replayed over and over. Throws on K < 0 or an empty population.
DecayResult decay_experiment(UpdateRule rule, const DecayConfig& config);

// Linear-interpolated quantile of an unsorted sample (p in [0, 1]).
double quantile(std::vector<double> sample, double p);

}  // namespace dualnav
