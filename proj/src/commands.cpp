#include "dualnav/commands.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dualnav/checkpoint.hpp"
#include "dualnav/phases.hpp"
#include "dualnav/reports.hpp"

namespace dualnav::cli {

namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(f);
}

World training_world(const RunConfig& cfg) {
  if (!cfg.world_file.empty()) return world_from_json(read_json(cfg.world_file));
  return generate_world(cfg.world_spec());
}

fs::path checkpoint_path(const RunConfig& cfg) {
  return cfg.checkpoint.empty() ? cfg.out / "checkpoint.bin" : cfg.checkpoint;
}

}  // namespace

int cmd_generate_world(const RunConfig& cfg, std::ostream& log) {
  const World world = generate_world(cfg.world_spec());
  fs::create_directories(cfg.out);
  const auto path = cfg.out / "world.json";
  write_text(path, world_to_json(world).dump(2) + "\n");
  log << fmt::format("obstacles {} seed {} -> {}\n", world.obstacle_count(), cfg.master_seed(), path.string());
  return kOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
  const std::uint64_t seed = cfg.master_seed();
  const TrainingEnv env{training_world(cfg), cfg.training_goal(), make_weather(cfg.weather.kind, cfg.weather.intensity)};
  Learner learner(cfg.agent, derive_seed(seed, 1));
  const auto result = run_exploration_phase(learner, env, derive_seed(seed, 2));

  fs::create_directories(cfg.out);
  const nlohmann::json meta = {{"method", method_name(learner.config())},
                               {"seed", seed},
                               {"episodes", result.episodes.size()},
                               {"converged", result.converged},
                               {"updates", learner.updates()}};
  nn::save_checkpoint(cfg.out / "checkpoint.bin", learner.online(), &learner.adam(), meta);
  write_training_log(result.episodes, cfg.out / "training_log.csv");
  log << fmt::format("{}: {} after {} episodes ({} updates)\n", method_name(learner.config()),
                     result.converged ? "converged" : "episode cap reached", result.episodes.size(),
                     learner.updates());
  return result.converged ? kOk : kCapHit;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const auto path = checkpoint_path(cfg);
  if (!fs::exists(path)) throw std::runtime_error("checkpoint not found: " + path.string());
  const auto ckpt = nn::load_checkpoint(path);

  AgentConfig agent = cfg.agent;
  if (ckpt.meta.contains("method")) apply_method(agent, ckpt.meta.at("method").get<std::string>());
  agent.network = ckpt.params.shape;
  agent.network.recurrent = false;
  const std::uint64_t seed = cfg.master_seed();
  const auto weather = make_weather(cfg.weather.kind, cfg.weather.intensity);

  std::vector<MissionSpec> specs;
  if (cfg.mission == "single") {
    auto m = diagonal_mission("single", cfg.domain, cfg.distance_m, weather, seed);
    if (cfg.obstacle_density) m.world.obstacle_density = *cfg.obstacle_density;
    if (cfg.dynamic_count > 0) m.world.dynamic_count = cfg.dynamic_count;
    m.world.obstacle_radius = cfg.obstacle_radius;
    specs.push_back(m);
  }
  if (cfg.repeats <= 0 || cfg.workers <= 0) throw std::invalid_argument("repeats and workers must be positive");

  // Each repeat is an independent run from the checkpoint with its own
  // derived seed; workers only change how they are scheduled.
  const auto repeats = static_cast<std::size_t>(cfg.repeats);
  std::vector<std::vector<MissionSpec>> plans(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto rseed = repeats == 1 ? seed : derive_seed(seed, 1000 + r);
    plans[r] = specs.empty() ? test_sequence(rseed, cfg.scale) : specs;
    if (!specs.empty() && repeats > 1) {
      for (auto& m : plans[r]) {
        m.seed = derive_seed(rseed, 10);
      }
    }
  }
  std::vector<std::vector<MissionReport>> results(repeats);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < repeats; r = next++) {
      Learner learner(agent, ckpt.params, ckpt.adam, derive_seed(seed, 2000 + r));
      for (const auto& spec : plans[r]) results[r].push_back(run_mission(spec, learner));
    }
  };
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), repeats);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }

  fs::create_directories(cfg.out / "routes");
  std::vector<MissionReport> all;
  for (std::size_t r = 0; r < repeats; ++r) {
    for (std::size_t i = 0; i < results[r].size(); ++i) {
      auto rep = results[r][i];
      const auto& spec = plans[r][i];
      const auto env = build_mission_env(spec);
      const auto stem = repeats == 1 ? fmt::format("{:02}_{}", i, spec.label)
                                     : fmt::format("r{}_{:02}_{}", r, i, spec.label);
      write_text(cfg.out / "routes" / (stem + ".svg"), route_svg(rep, env.world, spec.start, spec.goal));
      if (repeats > 1) rep.label = fmt::format("r{}/{}", r, rep.label);
      log << fmt::format("{:<10} {:<8} {:>8} {:>6}s completed={} obstacles={} P/C/R={}/{}/{}\n", rep.label,
                         rep.method, weather_label(rep.weather), rep.time_s, rep.completed, rep.obstacles,
                         rep.predictions, rep.corrections, rep.random);
      all.push_back(std::move(rep));
    }
  }
  write_text(cfg.out / "reports.csv", reports_csv(all));
  write_text(cfg.out / "reports.json", reports_to_json(all).dump(2) + "\n");
  return kOk;
}

int cmd_decay(const RunConfig& cfg, std::ostream& log) {
  DecayConfig dc = cfg.decay;
  dc.seed = cfg.master_seed();
  const std::vector<DecayResult> results{decay_experiment(UpdateRule::DDQN, dc),
                                         decay_experiment(UpdateRule::EDDQN, dc)};
  fs::create_directories(cfg.out);
  write_text(cfg.out / "decay.csv", decay_csv(results));
  for (const auto& r : results) {
    const double median = r.rows.empty() ? dc.initial : r.rows.back().median;
    log << fmt::format("{}: median after {} updates {:.6f}\n", to_string(r.rule), dc.updates, median);
  }
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-map deep Q-learning navigation workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> overrides;
  struct Flag {
    const char* name;
    const char* key;
    const char* help;
  };
  const Flag flags[] = {
      {"--seed", "seed", "master seed (falls back to NAV_SEED)"},
      {"--out", "out", "output directory"},
      {"--rule", "method", "dqn|ddqn|eddqn|drqn100|drqn1000"},
      {"--weather", "weather", "clear|snow|dust|fog"},
      {"--intensity", "intensity", "0|0.15|0.30"},
      {"--domain", "domain", "forest|plain|savanna"},
      {"--workers", "workers", "parallel evaluation workers"},
      {"--repeats", "repeats", "independent evaluation repeats"},
      {"--width", "width_m", "world width in metres"},
      {"--height", "height_m", "world height in metres"},
      {"--density", "obstacle_density", "obstacles per 100 m^2"},
      {"--episodes", "max_episodes", "exploration episode cap"},
      {"--network", "network", "table1|compact"},
      {"--world", "world_file", "world JSON to train in"},
      {"--checkpoint", "checkpoint", "checkpoint to evaluate"},
      {"--mission", "mission", "sequence|single"},
      {"--distance", "distance_m", "single-mission target distance"},
      {"--scale", "scale", "distance scale for the test sequence"},
      {"--updates", "decay_updates", "decay experiment update count"},
  };
  std::vector<std::pair<std::string, std::string>> values(std::size(flags));
  std::vector<std::pair<const char*, CLI::Option*>> options;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value configuration file");
    for (std::size_t i = 0; i < std::size(flags); ++i) {
      options.emplace_back(flags[i].key, sub->add_option(flags[i].name, values[i].second, flags[i].help));
    }
  };
  auto* gen = app.add_subcommand("generate-world", "write a seeded world file");
  auto* train = app.add_subcommand("train", "run the exploration phase and save a checkpoint");
  auto* eval = app.add_subcommand("evaluate", "fly the test sequence or one mission");
  auto* decay = app.add_subcommand("decay", "scalar Q-value decay experiment");
  for (auto* sub : {gen, train, eval, decay}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  RunConfig cfg;
  try {
    if (const char* env = std::getenv("NAV_SEED")) set_config_value(cfg, "seed", env);
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (options[i].second->count() > 0) {
        set_config_value(cfg, options[i].first, values[i % std::size(flags)].second);
      }
    }
    cfg.agent.validate();
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate_world(cfg, out);
    if (train->parsed()) return cmd_train(cfg, out);
    if (eval->parsed()) return cmd_evaluate(cfg, out);
    return cmd_decay(cfg, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
}

}  // namespace dualnav::cli
