#include "dualnav/phases.hpp"

#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace dualnav {

std::vector<GridCoord> start_cells(const TrainingEnv& env) {
  std::vector<GridCoord> cells;
  for (int r = 0; r < env.world.height_cells(); ++r) {
    for (int c = 0; c < env.world.width_cells(); ++c) {
      const GridCoord cell{r, c};
      if (cell != env.goal && cell_is_clear(env.world, cell)) cells.push_back(cell);
    }
  }
  return cells;
}

ExplorationResult run_exploration_phase(Learner& learner, const TrainingEnv& env, std::uint64_t seed) {
  const auto starts = start_cells(env);
  if (starts.empty()) throw std::invalid_argument("training world has no free start cell");
  if (!env.world.contains(env.goal)) throw std::invalid_argument("training goal outside the world");
  const AgentConfig cfg = learner.config();
  Rng policy(derive_seed(seed, 0));

  ExplorationResult result;
  int streak = 0;
  for (int episode = 1; episode <= cfg.max_episodes; ++episode) {
    const auto ep_seed = derive_seed(seed, static_cast<std::uint64_t>(episode));
    Rng placement(ep_seed);
    const GridCoord start = starts[placement.below(starts.size())];
    FlightSession flight(env.world, start, env.goal, env.weather, derive_seed(ep_seed, 1));
    const auto episode_id = learner.begin_episode();

    EpisodeLog log;
    log.episode = episode;
    double loss_sum = 0.0;
    int loss_count = 0;
    auto obs = flight.observe();
    while (log.steps < cfg.max_steps_per_episode) {
      const ActionMask valid = flight.valid();
      if (valid.none()) break;
      const auto q = learner.act_values(*obs);
      const auto choice = epsilon_greedy(q, valid, cfg.epsilon_train, policy, GreedyScope::AllActions,
                                         cfg.epsilon_branch);
      const auto out = flight.execute(choice.action);
      ++log.steps;
      log.reward_sum += out.reward;
      auto next = flight.observe();
      learner.remember({obs, choice.action, out.reward, cfg.gamma, next, out.target_reached,
                        flight.valid(), episode_id});
      if (log.steps % cfg.train_every == 0) {
        if (auto loss = learner.learn()) {
          loss_sum += *loss;
          ++loss_count;
        }
      }
      obs = std::move(next);
      if (out.target_reached) {
        log.success = true;
        break;
      }
    }
    streak = log.success ? streak + 1 : 0;
    log.streak = streak;
    if (loss_count > 0) log.loss_mean = loss_sum / loss_count;
    result.episodes.push_back(log);
    if (streak >= cfg.success_streak) {
      result.converged = true;
      break;
    }
  }
  return result;
}

std::string training_log_csv(const std::vector<EpisodeLog>& log) {
  std::string out = "episode,steps,reward_sum,success,streak,loss_mean\n";
  for (const auto& e : log) {
    out += fmt::format("{},{},{},{},{},{}\n", e.episode, e.steps, e.reward_sum, e.success ? 1 : 0,
                       e.streak, e.loss_mean ? fmt::format("{}", *e.loss_mean) : std::string());
  }
  return out;
}

void write_training_log(const std::vector<EpisodeLog>& log, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << training_log_csv(log);
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

bool MissionReport::consistent() const {
  if (route.empty()) return false;
  const auto moves = static_cast<int>(route.size()) - 1;
  return decisions() == moves && time_s == static_cast<double>(moves);
}

namespace {

bool lands_on_open_cell(const LocalMap& local, Action a) {
  const GridCoord dest = step(local.agent(), a);
  if (!LocalMap::in_window(dest) || local.outside_search_area(dest)) return false;
  const auto s = local.at(dest);
  return s == CellState::Free || s == CellState::Visited || s == CellState::TargetCell;
}

}  // namespace

MissionReport run_exploitation_phase(Learner& learner, const MissionEnv& env, std::uint64_t seed,
                                     const MoveAudit& audit) {
  const AgentConfig cfg = learner.config();
  FlightSession flight(env.world, env.start, env.goal, env.weather, derive_seed(seed, 1));
  Rng policy(derive_seed(seed, 2));

  MissionReport report;
  report.method = method_name(cfg);
  report.domain = env.world.spec().domain;
  report.weather = env.weather;
  report.distance_m = euclidean(env.start, env.goal);

  auto episode_id = learner.begin_episode();
  auto obs = flight.observe();
  while (!flight.at_goal()) {
    if (flight.steps() >= cfg.max_steps_per_mission) {
      report.failure = "step_budget";
      break;
    }
    const ActionMask valid = flight.valid();
    if (valid.none()) {
      report.failure = "boxed_in";
      break;
    }
    const auto q = learner.act_values(*obs);
    auto choice = epsilon_greedy(q, valid, cfg.epsilon_test, policy, GreedyScope::AllActions,
                                 cfg.epsilon_branch);
    if (choice.decision != PolicyDecision::Random) {
      const auto fixed = correct_action(choice.action, flight.local());
      if (!fixed) {
        report.failure = "boxed_in";
        break;
      }
      choice = *fixed;
    }
    if (audit) audit(flight.local(), choice);
    if (!lands_on_open_cell(flight.local(), choice.action)) ++report.safety_violations;

    const auto out = flight.execute(choice.action);
    switch (choice.decision) {
      case PolicyDecision::Random: ++report.random; break;
      case PolicyDecision::Predicted: ++report.predictions; break;
      case PolicyDecision::Corrected: ++report.corrections; break;
    }
    auto next = flight.observe();
    learner.remember({obs, choice.action, out.reward, cfg.gamma, next, out.target_reached,
                      flight.valid(), episode_id});
    if (flight.steps() % cfg.train_every == 0) learner.learn();
    if (out.target_reached && !out.goal_reached) {
      flight.respawn();
      episode_id = learner.begin_episode();
      next = flight.observe();
    }
    obs = std::move(next);
  }
  flight.merge();

  report.completed = flight.at_goal();
  report.time_s = static_cast<double>(flight.steps());
  report.obstacles = static_cast<int>(flight.sensed_obstacles().size());
  report.route = flight.route();
  return report;
}

}  // namespace dualnav
