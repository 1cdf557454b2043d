#include "dualnav/missions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dualnav {

MissionSpec diagonal_mission(std::string label, Domain domain, double distance,
                             WeatherCondition weather, std::uint64_t seed, int margin) {
  if (!(distance > 0.0)) throw std::invalid_argument("mission distance must be positive");
  if (margin < 0) throw std::invalid_argument("margin must be non-negative");
  const int k = std::max(1, static_cast<int>(std::lround(distance / std::sqrt(2.0))));
  const int side = k + 2 * margin + 1;

  MissionSpec m;
  m.label = std::move(label);
  m.weather = weather;
  m.start = {margin + k, margin};
  m.goal = {margin, margin + k};
  m.target_distance = distance;
  m.seed = seed;
  m.world.domain = domain;
  m.world.width_m = side;
  m.world.height_m = side;
  m.world.obstacle_density = default_density(domain);
  if (domain == Domain::Savanna) {
    m.world.dynamic_count = std::max(1, static_cast<int>(std::lround(side * side / 2000.0)));
  }
  m.world.seed = derive_seed(seed, 0);
  m.world.start = m.start;
  m.world.goal = m.goal;
  return m;
}

MissionEnv build_mission_env(const MissionSpec& spec) {
  return {generate_world(spec.world), spec.start, spec.goal, spec.weather};
}

MissionReport run_mission(const MissionSpec& spec, Learner& learner, const MoveAudit& audit) {
  auto report = run_exploitation_phase(learner, build_mission_env(spec), spec.seed, audit);
  report.label = spec.label;
  report.distance_m = spec.target_distance;
  return report;
}

std::vector<MissionSpec> test_sequence(std::uint64_t seed, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
  struct Row {
    const char* label;
    Domain domain;
    double distance;
    WeatherKind weather;
    double intensity;
    std::uint64_t world_stream;
  };
  // The forest 400 m tests share one forest so the weather runs are paired.
  const Row rows[] = {
      {"F100", Domain::Forest, 100, WeatherKind::Clear, 0.0, 1},
      {"F400", Domain::Forest, 400, WeatherKind::Clear, 0.0, 2},
      {"s15", Domain::Forest, 400, WeatherKind::Snow, 0.15, 2},
      {"d15", Domain::Forest, 400, WeatherKind::Dust, 0.15, 2},
      {"f15", Domain::Forest, 400, WeatherKind::Fog, 0.15, 2},
      {"s30", Domain::Forest, 400, WeatherKind::Snow, 0.30, 2},
      {"d30", Domain::Forest, 400, WeatherKind::Dust, 0.30, 2},
      {"f30", Domain::Forest, 400, WeatherKind::Fog, 0.30, 2},
      {"P400", Domain::Plain, 400, WeatherKind::Clear, 0.0, 3},
      {"S400", Domain::Savanna, 400, WeatherKind::Clear, 0.0, 4},
  };
  std::vector<MissionSpec> out;
  std::uint64_t i = 0;
  for (const auto& r : rows) {
    auto m = diagonal_mission(r.label, r.domain, r.distance * scale, make_weather(r.weather, r.intensity),
                              derive_seed(seed, 10 + i++));
    m.world.seed = derive_seed(seed, r.world_stream);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<MissionReport> run_test_sequence(Learner& learner, std::uint64_t seed, double scale,
                                             const MoveAudit& audit) {
  std::vector<MissionReport> reports;
  for (const auto& spec : test_sequence(seed, scale)) reports.push_back(run_mission(spec, learner, audit));
  return reports;
}

// ------------------------------------------------------------------ decay

double quantile(std::vector<double> sample, double p) {
  if (sample.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sample.size() - 1);
  return sample[lo] + (pos - static_cast<double>(lo)) * (sample[hi] - sample[lo]);
}

DecayResult decay_experiment(UpdateRule rule, const DecayConfig& config) {
  if (config.population <= 0) throw std::invalid_argument("population must be positive");
  if (config.updates < 0) throw std::invalid_argument("update count must be non-negative");

  DecayResult result;
  result.rule = rule;
  std::vector<double> q(static_cast<std::size_t>(config.population), config.initial);
  result.values.push_back(q);
  Rng rng(config.seed);
  const ActionMask only_first(1);
  for (int k = 1; k <= config.updates; ++k) {
    for (auto& v : q) {
      if (rng.uniform() >= config.replay_probability) continue;
      const nn::QValues self{v, 0.0, 0.0, 0.0};
      const double target = td_target(rule, config.reward, false, config.gamma, self, self, only_first);
      v += config.alpha * (target - v);
    }
    result.values.push_back(q);
    result.rows.push_back({k, quantile(q, 0.0), quantile(q, 0.25), quantile(q, 0.5), quantile(q, 0.75),
                           quantile(q, 1.0)});
  }
  return result;
}

}  // namespace dualnav
