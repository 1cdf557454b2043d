#include "dualnav/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace dualnav {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, v));
  }
  return out;
}

std::array<int, 3> triple(std::string_view key, std::string_view v) {
  std::array<int, 3> out{};
  std::size_t i = 0;
  while (true) {
    const auto comma = v.find(',');
    if (i == 3) throw ConfigError(fmt::format("{}: expected three comma-separated values", key));
    out[i++] = number<int>(key, trim(v.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (i != 3) throw ConfigError(fmt::format("{}: expected three comma-separated values", key));
  return out;
}

template <class F>
auto wrap(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

}  // namespace

WorldSpec RunConfig::world_spec() const {
  WorldSpec s;
  s.domain = domain;
  s.width_m = width_m;
  s.height_m = height_m;
  s.obstacle_density = obstacle_density.value_or(default_density(domain));
  s.dynamic_count = dynamic_count;
  s.obstacle_radius = obstacle_radius;
  s.seed = master_seed();
  s.goal = training_goal();
  return s;
}

GridCoord RunConfig::training_goal() const {
  if (goal) return *goal;
  return {0, static_cast<int>(width_m) - 1};
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  auto& a = cfg.agent;
  const auto v = trim(value);
  if (key == "epsilon_train") a.epsilon_train = number<double>(key, v);
  else if (key == "epsilon_test") a.epsilon_test = number<double>(key, v);
  else if (key == "gamma") a.gamma = number<double>(key, v);
  else if (key == "replay_capacity") a.replay_capacity = number<std::size_t>(key, v);
  else if (key == "target_sync_every") a.target_sync_every = number<int>(key, v);
  else if (key == "learning_rate") a.learning_rate = number<double>(key, v);
  else if (key == "batch_size") a.batch_size = number<int>(key, v);
  else if (key == "method") wrap(key, [&] { apply_method(a, v); });
  else if (key == "trace_length") a.trace_length = number<int>(key, v);
  else if (key == "max_episodes") a.max_episodes = number<int>(key, v);
  else if (key == "success_streak") a.success_streak = number<int>(key, v);
  else if (key == "max_steps_per_episode") a.max_steps_per_episode = number<int>(key, v);
  else if (key == "max_steps_per_mission") a.max_steps_per_mission = number<int>(key, v);
  else if (key == "train_every") a.train_every = number<int>(key, v);
  else if (key == "epsilon_branch") {
    if (v == "random_when_below") a.epsilon_branch = EpsilonBranch::RandomWhenBelow;
    else if (v == "greedy_when_below") a.epsilon_branch = EpsilonBranch::GreedyWhenBelow;
    else throw ConfigError("epsilon_branch: expected random_when_below or greedy_when_below");
  } else if (key == "network") {
    if (v == "table1") a.network = nn::NetworkShape::table1();
    else if (v == "compact") a.network = nn::NetworkShape::compact();
    else throw ConfigError("network: expected table1 or compact");
  } else if (key == "image_side") a.network.image_side = number<int>(key, v);
  else if (key == "filters") a.network.filters = triple(key, v);
  else if (key == "kernels") a.network.kernels = triple(key, v);
  else if (key == "dense_units") a.network.dense_units = number<int>(key, v);
  else if (key == "dropout") a.network.dropout = number<double>(key, v);
  else if (key == "domain") cfg.domain = wrap(key, [&] { return domain_from_string(v); });
  else if (key == "width_m") cfg.width_m = number<double>(key, v);
  else if (key == "height_m") cfg.height_m = number<double>(key, v);
  else if (key == "obstacle_density") {
    if (v == "auto") cfg.obstacle_density.reset();
    else cfg.obstacle_density = number<double>(key, v);
  } else if (key == "dynamic_count") cfg.dynamic_count = number<int>(key, v);
  else if (key == "obstacle_radius") cfg.obstacle_radius = number<double>(key, v);
  else if (key == "goal") {
    if (v == "auto") {
      cfg.goal.reset();
    } else {
      const auto comma = v.find(',');
      if (comma == std::string_view::npos) throw ConfigError("goal: expected row,col or auto");
      cfg.goal = GridCoord{number<int>(key, trim(v.substr(0, comma))), number<int>(key, trim(v.substr(comma + 1)))};
    }
  } else if (key == "weather") {
    cfg.weather.kind = wrap(key, [&] { return weather_kind_from_string(v); });
    if (cfg.weather.kind == WeatherKind::Clear) cfg.weather.intensity = 0.0;
  } else if (key == "intensity") cfg.weather.intensity = number<double>(key, v);
  else if (key == "mission") {
    if (v != "sequence" && v != "single") throw ConfigError("mission: expected sequence or single");
    cfg.mission = std::string(v);
  } else if (key == "distance_m") cfg.distance_m = number<double>(key, v);
  else if (key == "scale") cfg.scale = number<double>(key, v);
  else if (key == "repeats") cfg.repeats = number<int>(key, v);
  else if (key == "workers") cfg.workers = number<int>(key, v);
  else if (key == "seed") cfg.seed = number<std::uint64_t>(key, v);
  else if (key == "out") cfg.out = std::string(v);
  else if (key == "world_file") cfg.world_file = std::string(v);
  else if (key == "checkpoint") cfg.checkpoint = std::string(v);
  else if (key == "decay_population") cfg.decay.population = number<int>(key, v);
  else if (key == "decay_reward") cfg.decay.reward = number<double>(key, v);
  else if (key == "decay_gamma") cfg.decay.gamma = number<double>(key, v);
  else if (key == "decay_initial") cfg.decay.initial = number<double>(key, v);
  else if (key == "decay_updates") cfg.decay.updates = number<int>(key, v);
  else if (key == "decay_alpha") cfg.decay.alpha = number<double>(key, v);
  else if (key == "decay_replay_probability") cfg.decay.replay_probability = number<double>(key, v);
  else throw ConfigError(fmt::format("unknown configuration key '{}'", key));
}

void apply_config_text(RunConfig& cfg, std::string_view text) {
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  apply_config_text(cfg, ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  const auto& a = cfg.agent;
  const auto& n = a.network;
  std::string o;
  auto kv = [&](std::string_view k, const auto& v) { o += fmt::format("{} = {}\n", k, v); };
  kv("epsilon_train", a.epsilon_train);
  kv("epsilon_test", a.epsilon_test);
  kv("gamma", a.gamma);
  kv("replay_capacity", a.replay_capacity);
  kv("target_sync_every", a.target_sync_every);
  kv("learning_rate", a.learning_rate);
  kv("batch_size", a.batch_size);
  kv("method", method_name(a));
  kv("max_episodes", a.max_episodes);
  kv("success_streak", a.success_streak);
  kv("max_steps_per_episode", a.max_steps_per_episode);
  kv("max_steps_per_mission", a.max_steps_per_mission);
  kv("train_every", a.train_every);
  kv("epsilon_branch",
     a.epsilon_branch == EpsilonBranch::RandomWhenBelow ? "random_when_below" : "greedy_when_below");
  kv("image_side", n.image_side);
  kv("filters", fmt::format("{},{},{}", n.filters[0], n.filters[1], n.filters[2]));
  kv("kernels", fmt::format("{},{},{}", n.kernels[0], n.kernels[1], n.kernels[2]));
  kv("dense_units", n.dense_units);
  kv("dropout", n.dropout);
  kv("domain", to_string(cfg.domain));
  kv("width_m", cfg.width_m);
  kv("height_m", cfg.height_m);
  kv("obstacle_density", cfg.obstacle_density ? fmt::format("{}", *cfg.obstacle_density) : "auto");
  kv("dynamic_count", cfg.dynamic_count);
  kv("obstacle_radius", cfg.obstacle_radius);
  kv("goal", cfg.goal ? fmt::format("{},{}", cfg.goal->row, cfg.goal->col) : "auto");
  kv("weather", to_string(cfg.weather.kind));
  kv("intensity", cfg.weather.intensity);
  kv("mission", cfg.mission);
  kv("distance_m", cfg.distance_m);
  kv("scale", cfg.scale);
  kv("repeats", cfg.repeats);
  kv("workers", cfg.workers);
  if (cfg.seed) kv("seed", *cfg.seed);
  kv("out", cfg.out.string());
  kv("world_file", cfg.world_file.string());
  kv("checkpoint", cfg.checkpoint.string());
  kv("decay_population", cfg.decay.population);
  kv("decay_reward", cfg.decay.reward);
  kv("decay_gamma", cfg.decay.gamma);
  kv("decay_initial", cfg.decay.initial);
  kv("decay_updates", cfg.decay.updates);
  kv("decay_alpha", cfg.decay.alpha);
  kv("decay_replay_probability", cfg.decay.replay_probability);
  return o;
}

}  // namespace dualnav
