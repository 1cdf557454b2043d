#include <doctest.h>

#include <map>
#include <set>

#include "dualnav/agents.hpp"
#include "dualnav/phases.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace dualnav;

namespace {

ActionMask mask(const char* bits) { return ActionMask(std::string(bits)); }

Transition dummy(double reward, std::uint64_t episode) {
  auto obs = std::make_shared<Observation>();
  Transition t;
  t.state = obs;
  t.next = obs;
  t.reward = reward;
  t.episode = episode;
  t.terminal = true;
  return t;
}

AgentConfig compact_config() {
  AgentConfig c;
  c.network = nn::NetworkShape::compact();
  return c;
}

World empty_world(double w, double h) {
  WorldSpec s;
  s.width_m = w;
  s.height_m = h;
  s.obstacle_density = 0;
  return World(s, {});
}

// Network that always prefers one action and ignores its inputs.
nn::NetworkParams biased(Action a) {
  auto p = nn::init_params(nn::NetworkShape::compact(), 1).zeros_like();
  p.head_b.data[static_cast<std::size_t>(index_of(a))] = 1.0;
  return p;
}

Observation random_observation(Rng& rng) {
  Observation o;
  for (auto& v : o.frame.pixels) v = rng.uniform(-1, 1);
  for (auto& v : o.map) v = rng.uniform() < 0.5 ? 1.0 : -1.0;
  return o;
}

}  // namespace

TEST_SUITE("agents") {
  TEST_CASE("default hyper-parameters") {
    const AgentConfig c;
    CHECK(c.epsilon_train == 0.1);
    CHECK(c.epsilon_test == 0.05);
    CHECK(c.gamma == 0.95);
    CHECK(c.replay_capacity == 800);
    CHECK(c.target_sync_every == 10);
    CHECK(c.learning_rate == 0.001);
    CHECK(c.batch_size == 32);
    CHECK(c.max_episodes == 1500);
    CHECK(c.success_streak == 50);
    CHECK(c.rule == UpdateRule::EDDQN);
    CHECK(c.network == nn::NetworkShape::table1());
  }

  TEST_CASE("method names") {
    AgentConfig c;
    apply_method(c, "drqn100");
    CHECK(c.trace_length == 100);
    CHECK(c.rule == UpdateRule::DQN);
    CHECK(method_name(c) == "drqn100");
    apply_method(c, "ddqn");
    CHECK(c.trace_length == 0);
    CHECK(method_name(c) == "ddqn");
    CHECK_THROWS(apply_method(c, "sarsa"));
    CHECK_THROWS(apply_method(c, "drqn0"));
  }

  TEST_CASE("epsilon extremes") {
    Rng rng(1);
    const nn::QValues q{0.1, 0.9, 0.3, 0.2};
    for (int i = 0; i < 200; ++i) {
      CHECK(epsilon_greedy(q, mask("1111"), 0.0, rng) == ActionChoice{Action::South, PolicyDecision::Predicted});
      CHECK(epsilon_greedy(q, mask("0101"), 1.0, rng).decision == PolicyDecision::Random);
    }
    // The literal reading flips which side is random.
    CHECK(epsilon_greedy(q, mask("1111"), 1.0, rng, GreedyScope::ValidOnly, EpsilonBranch::GreedyWhenBelow)
              .decision == PolicyDecision::Predicted);
  }

  TEST_CASE("greedy scope and ties") {
    Rng rng(2);
    const nn::QValues q{0.1, 0.9, 0.3, 0.2};
    // South invalid: ValidOnly skips it, AllActions keeps it.
    CHECK(epsilon_greedy(q, mask("1101"), 0.0, rng).action == Action::East);
    CHECK(epsilon_greedy(q, mask("1101"), 0.0, rng, GreedyScope::AllActions).action == Action::South);
    CHECK(epsilon_greedy({0.5, 0.5, 0.5, 0.5}, mask("1111"), 0.0, rng).action == Action::North);
    CHECK_THROWS_AS(epsilon_greedy(q, ActionMask{}, 0.1, rng), std::invalid_argument);
  }

  TEST_CASE("random branch is uniform over valid actions") {
    Rng rng(3);
    std::map<Action, int> hits;
    const int n = 40000;
    for (int i = 0; i < n; ++i) hits[epsilon_greedy({}, mask("1011"), 1.0, rng).action]++;
    CHECK(hits.count(Action::East) == 0);
    for (auto a : {Action::North, Action::South, Action::West}) CHECK(std::abs(hits[a] - n / 3.0) < 600);
  }

  TEST_CASE("random rate follows epsilon") {
    Rng rng(4);
    int random = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) random += epsilon_greedy({}, mask("1111"), 0.1, rng).decision == PolicyDecision::Random;
    CHECK(std::abs(random - 0.1 * n) < 300);
  }

  TEST_CASE("correction examples") {
    // Agent at (5,5), target to the east; north is invalid.
    auto c = correct_action(Action::North, {5, 5}, mask("1110"), {5, 9});
    REQUIRE(c);
    CHECK(*c == ActionChoice{Action::East, PolicyDecision::Corrected});
    c = correct_action(Action::West, {5, 5}, mask("1000"), {5, 9});
    CHECK(*c == ActionChoice{Action::West, PolicyDecision::Predicted});
    // Equal distances go to the first in N, S, E, W order.
    c = correct_action(Action::East, {5, 5}, mask("0011"), {5, 9});
    CHECK(c->action == Action::North);
    CHECK_FALSE(correct_action(Action::East, {5, 5}, ActionMask{}, {5, 9}));
  }

  TEST_CASE("correction matches the exhaustive oracle") {
    Rng rng(5);
    for (int i = 0; i < 3000; ++i) {
      const auto local = testutil::random_local_map(rng);
      const auto valid = valid_actions(local);
      std::vector<bool> v(4);
      for (int a = 0; a < 4; ++a) v[a] = valid.test(static_cast<std::size_t>(a));
      const int predicted = static_cast<int>(rng.below(4));
      const auto got = correct_action(kActions[predicted], local);
      const auto want = oracle::corrected_action(predicted, local.agent(), v, local.target());
      REQUIRE(got.has_value() == want.has_value());
      if (!got) continue;
      CHECK(index_of(got->action) == *want);
      CHECK((got->decision == PolicyDecision::Predicted) == (*want == predicted));
    }
  }

  TEST_CASE("valid actions are exactly the open neighbours") {
    Rng rng(6);
    for (int i = 0; i < 2000; ++i) {
      const auto local = testutil::random_local_map(rng);
      const auto valid = valid_actions(local);
      for (int a = 0; a < 4; ++a) {
        const auto d = oracle::neighbour(local.agent(), a);
        bool open = LocalMap::in_window(d) && !local.outside_search_area(d);
        if (open) {
          const auto s = local.at(d);
          open = s == CellState::Free || s == CellState::Visited || s == CellState::TargetCell;
        }
        CHECK(valid.test(static_cast<std::size_t>(a)) == open);
      }
    }
  }

  TEST_CASE("temporal-difference targets") {
    const nn::QValues online{0.1, 0.2, 0.9, 0.0};
    const nn::QValues target{0.7, 0.3, 0.5, 0.1};
    const double r = -0.04, g = 0.95;
    CHECK(td_target(UpdateRule::DQN, r, false, g, online, target, mask("1111")) == doctest::Approx(r + g * 0.7));
    CHECK(td_target(UpdateRule::DDQN, r, false, g, online, target, mask("1111")) == doctest::Approx(r + g * 0.5));
    CHECK(td_target(UpdateRule::EDDQN, r, false, g, online, target, mask("1111")) == doctest::Approx(r - g * 0.5));
    // Only valid next actions are considered.
    CHECK(td_target(UpdateRule::DQN, r, false, g, online, target, mask("1010")) == doctest::Approx(r + g * 0.3));
    CHECK(td_target(UpdateRule::DDQN, r, false, g, online, target, mask("1010")) == doctest::Approx(r + g * 0.3));
    CHECK(td_target(UpdateRule::EDDQN, 1.0, true, g, online, target, mask("1111")) == 1.0);
    CHECK(td_target(UpdateRule::DDQN, -1.5, false, g, online, target, ActionMask{}) == -1.5);
  }

  TEST_CASE("self-bootstrapped fixed points") {
    for (auto [rule, fixed] : {std::pair{UpdateRule::DDQN, -0.8}, std::pair{UpdateRule::EDDQN, -0.04 / 1.95}}) {
      double q = -0.04;
      for (int i = 0; i < 2000; ++i) {
        const nn::QValues v{q, q, q, q};
        q = td_target(rule, -0.04, false, 0.95, v, v, mask("0001"));
      }
      CHECK(q == doctest::Approx(fixed).epsilon(1e-9));
    }
    CHECK(-0.04 / 1.95 == doctest::Approx(-0.0205128).epsilon(1e-6));
  }

  TEST_CASE("replay memory is a bounded FIFO") {
    ReplayBuffer b(800);
    for (int i = 0; i < 801; ++i) b.push(dummy(i, 1));
    CHECK(b.size() == 800);
    CHECK(b[0].reward == 1.0);
    CHECK(b[799].reward == 800.0);
    Rng rng(7);
    const auto idx = b.sample_indices(32, rng);
    CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 32);
    for (auto i : idx) CHECK(i < 800);
    CHECK_THROWS(b.sample_indices(801, rng));
  }

  TEST_CASE("sequences never cross an episode boundary") {
    ReplayBuffer b(200);
    Rng rng(8);
    std::uint64_t ep = 1;
    for (int i = 0; i < 500; ++i) {
      if (rng.uniform() < 0.1) ++ep;
      b.push(dummy(i, ep));
    }
    for (int k = 0; k < 2000; ++k) {
      const auto seq = b.sample_sequence(10, rng);
      REQUIRE_FALSE(seq.empty());
      CHECK(seq.size() <= 10);
      for (std::size_t j = 1; j < seq.size(); ++j) {
        CHECK(seq[j] == seq[j - 1] + 1);
        CHECK(b[seq[j]].episode == b[seq[0]].episode);
      }
    }
  }

  TEST_CASE("training waits for a full batch") {
    auto cfg = compact_config();
    ReplayBuffer b(800);
    Rng rng(9);
    auto online = nn::init_params(cfg.network, 1);
    const auto before = online;
    auto adam = nn::AdamState::for_params(online);
    for (int i = 0; i < 31; ++i) b.push(dummy(-0.04, 1));
    CHECK_FALSE(train_step(b, online, online, adam, cfg, rng).has_value());
    CHECK(online == before);
    b.push(dummy(-0.04, 1));
    CHECK(train_step(b, online, before, adam, cfg, rng).has_value());
    CHECK_FALSE(online == before);
  }

  TEST_CASE("loss falls on a fixed batch") {
    auto cfg = compact_config();
    ReplayBuffer b(32);
    Rng rng(10);
    for (int i = 0; i < 32; ++i) {
      auto t = dummy(rng.uniform(-1, 1), 1);
      t.state = std::make_shared<Observation>(random_observation(rng));
      t.action = kActions[rng.below(4)];
      b.push(t);
    }
    auto online = nn::init_params(cfg.network, 2);
    const auto target = online;
    auto adam = nn::AdamState::for_params(online);
    std::vector<double> losses;
    for (int i = 0; i < 100; ++i) losses.push_back(*train_step(b, online, target, adam, cfg, rng));
    const double early = (losses[0] + losses[1] + losses[2] + losses[3] + losses[4]) / 5;
    const double late = (losses[95] + losses[96] + losses[97] + losses[98] + losses[99]) / 5;
    CHECK(late < 0.5 * early);
  }

  TEST_CASE("target sync cadence") {
    const auto a = nn::init_params(nn::NetworkShape::compact(), 1);
    auto t = nn::init_params(nn::NetworkShape::compact(), 2);
    CHECK_FALSE(sync_target(a, t, 7, 10));
    CHECK_FALSE(t == a);
    CHECK_FALSE(sync_target(a, t, 0, 10));
    CHECK(sync_target(a, t, 10, 10));
    CHECK(t == a);

    auto cfg = compact_config();
    Learner l(cfg, 3);
    for (int i = 0; i < 32; ++i) l.remember(dummy(-0.04, 1));
    for (int i = 0; i < 7; ++i) REQUIRE(l.learn());
    CHECK_FALSE(l.target() == l.online());
    for (int i = 0; i < 3; ++i) REQUIRE(l.learn());
    CHECK(l.updates() == 10);
    CHECK(l.target() == l.online());
  }

  TEST_CASE("recurrent learner trains on traces") {
    auto cfg = compact_config();
    apply_method(cfg, "drqn100");
    cfg.batch_size = 8;
    Learner l(cfg, 4);
    CHECK(l.online().shape.recurrent);
    Rng rng(11);
    const auto obs = std::make_shared<Observation>(random_observation(rng));
    for (int i = 0; i < 99; ++i) {
      auto t = dummy(-0.04, 1);
      t.state = obs;
      l.remember(t);
    }
    CHECK_FALSE(l.learn());
    auto t = dummy(-0.04, 1);
    t.state = obs;
    l.remember(t);
    CHECK(l.learn());
    const auto q1 = l.act_values(*obs);
    const auto q2 = l.act_values(*obs);
    CHECK(q1 != q2);
    l.reset_memory();
    CHECK(l.act_values(*obs) == q1);
  }

  TEST_CASE("exploration stops on the success streak") {
    auto cfg = compact_config();
    cfg.batch_size = 4;
    cfg.success_streak = 3;
    Learner l(cfg, 5);
    const TrainingEnv env{empty_world(2, 1), {0, 1}, {}};
    const auto res = run_exploration_phase(l, env, 6);
    REQUIRE(res.converged);
    REQUIRE(res.episodes.size() >= 3);
    CHECK(res.episodes.back().streak == 3);
    for (std::size_t i = res.episodes.size() - 3; i < res.episodes.size(); ++i) CHECK(res.episodes[i].success);
    for (std::size_t i = 0; i + 1 < res.episodes.size(); ++i) CHECK(res.episodes[i].streak < 3);
  }

  TEST_CASE("exploration honours the episode cap") {
    auto cfg = compact_config();
    cfg.batch_size = 4;
    cfg.max_episodes = 4;
    cfg.max_steps_per_episode = 5;
    Learner l(cfg, 5);
    const TrainingEnv env{empty_world(30, 30), {0, 29}, {}};
    const auto res = run_exploration_phase(l, env, 7);
    CHECK_FALSE(res.converged);
    CHECK(res.episodes.size() == 4);
    for (const auto& e : res.episodes) CHECK(e.steps <= 5);
  }

  TEST_CASE("exploration is bit-reproducible") {
    auto cfg = compact_config();
    cfg.batch_size = 4;
    cfg.max_episodes = 6;
    cfg.max_steps_per_episode = 20;
    WorldSpec s;
    s.width_m = 10;
    s.height_m = 10;
    s.obstacle_density = 10;
    s.seed = 4;
    s.goal = GridCoord{0, 9};
    const TrainingEnv env{generate_world(s), {0, 9}, make_weather(WeatherKind::Dust, 0.15)};
    Learner a(cfg, 8), b(cfg, 8);
    const auto ra = run_exploration_phase(a, env, 9);
    const auto rb = run_exploration_phase(b, env, 9);
    CHECK(ra.episodes == rb.episodes);
    CHECK(a.online() == b.online());
    CHECK(training_log_csv(ra.episodes) == training_log_csv(rb.episodes));
  }

  TEST_CASE("adjacent goal takes one second") {
    auto cfg = compact_config();
    cfg.epsilon_test = 0.0;
    Learner l(cfg, biased(Action::East), std::nullopt, 1);
    const MissionEnv env{empty_world(12, 12), {5, 5}, {5, 6}, {}};
    const auto rep = run_exploitation_phase(l, env, 2);
    CHECK(rep.completed);
    CHECK(rep.time_s == 1.0);
    CHECK(rep.predictions == 1);
    CHECK(rep.consistent());
  }

  TEST_CASE("straight hundred metre flight") {
    auto cfg = compact_config();
    cfg.epsilon_test = 0.0;
    Learner l(cfg, biased(Action::East), std::nullopt, 1);
    const MissionEnv env{empty_world(111, 11), {5, 5}, {5, 105}, {}};
    const auto rep = run_exploitation_phase(l, env, 3);
    CHECK(rep.completed);
    CHECK(rep.time_s == 100.0);
    CHECK(rep.route.size() == 101);
    CHECK(rep.corrections == 0);
    CHECK(rep.safety_violations == 0);
    CHECK(rep.obstacles == 0);
  }

  TEST_CASE("an invalid prediction is corrected toward the target") {
    auto cfg = compact_config();
    cfg.epsilon_test = 0.0;
    // Flying along the north edge, North always leaves the world.
    Learner l(cfg, biased(Action::North), std::nullopt, 1);
    const MissionEnv env{empty_world(30, 11), {0, 2}, {0, 27}, {}};
    const auto rep = run_exploitation_phase(l, env, 4);
    CHECK(rep.completed);
    CHECK(rep.time_s == 25.0);
    CHECK(rep.corrections == 25);
    CHECK(rep.predictions == 0);
    CHECK(rep.safety_violations == 0);
    CHECK(rep.consistent());
  }

  TEST_CASE("missions keep the accounting identity and stay on open cells") {
    auto cfg = compact_config();
    cfg.max_steps_per_mission = 400;
    Learner l(cfg, 2);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      WorldSpec s;
      s.width_m = 20;
      s.height_m = 20;
      s.obstacle_density = 10;
      s.seed = seed;
      s.start = GridCoord{17, 2};
      s.goal = GridCoord{2, 17};
      const MissionEnv env{generate_world(s), {17, 2}, {2, 17}, make_weather(WeatherKind::Fog, 0.3)};
      int audited = 0;
      const auto rep = run_exploitation_phase(l, env, seed, [&](const LocalMap& m, const ActionChoice& c) {
        ++audited;
        CHECK(valid_actions(m).test(static_cast<std::size_t>(index_of(c.action))));
      });
      CHECK(rep.consistent());
      CHECK(rep.safety_violations == 0);
      CHECK(audited == rep.decisions());
      CHECK(rep.completed == rep.failure.empty());
      if (rep.completed) CHECK(rep.route.back() == GridCoord{2, 17});
    }
  }
}
