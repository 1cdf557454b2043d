#pragma once

// Run configuration: a plain key = value file, overridable key by key.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "dualnav/agents.hpp"
#include "dualnav/missions.hpp"
#include "dualnav/worldsim.hpp"

namespace dualnav {

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  AgentConfig agent;
  Domain domain = Domain::Forest;
  double width_m = 10.0;
  double height_m = 10.0;
  // Domain default when unset.
  std::optional<double> obstacle_density;
  int dynamic_count = 0;
  double obstacle_radius = 0.3;
  // Training goal; defaults to the top-right cell.
  std::optional<GridCoord> goal;
  WeatherCondition weather;
  // "sequence" runs the ten-test sequence, "single" one diagonal mission.
  std::string mission = "sequence";
  double distance_m = 100.0;
  double scale = 1.0;
  int repeats = 1;
  int workers = 1;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  std::filesystem::path world_file;
  std::filesystem::path checkpoint;
  DecayConfig decay;

  std::uint64_t master_seed() const { return seed.value_or(0); }
  WorldSpec world_spec() const;
  GridCoord training_goal() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Sets one key; throws ConfigError on an unknown key or a bad value.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

// Lines are "key = value"; blank lines and lines starting with # are
// skipped.
void apply_config_text(RunConfig& cfg, std::string_view text);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

// Every key with its effective value, in a form apply_config_text accepts.
std::string dump_config(const RunConfig& cfg);

}  // namespace dualnav
