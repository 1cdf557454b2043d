#include <algorithm>
#include <stdexcept>
#include <string>

#include "dualnav/agents.hpp"

namespace dualnav {

std::string_view to_string(UpdateRule r) {
  switch (r) {
    case UpdateRule::DQN: return "dqn";
    case UpdateRule::DDQN: return "ddqn";
    case UpdateRule::EDDQN: return "eddqn";
  }
  return "eddqn";
}

UpdateRule update_rule_from_string(std::string_view s) {
  if (s == "dqn") return UpdateRule::DQN;
  if (s == "ddqn") return UpdateRule::DDQN;
  if (s == "eddqn") return UpdateRule::EDDQN;
  throw std::invalid_argument("unknown update rule '" + std::string(s) + "'");
}

nn::NetworkShape AgentConfig::effective_network() const {
  nn::NetworkShape s = network;
  s.recurrent = recurrent();
  return s;
}

void AgentConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(what); };
  if (!(epsilon_train >= 0.0 && epsilon_train <= 1.0)) fail("epsilon_train must be in [0, 1]");
  if (!(epsilon_test >= 0.0 && epsilon_test <= 1.0)) fail("epsilon_test must be in [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must be in [0, 1]");
  if (replay_capacity == 0) fail("replay_capacity must be positive");
  if (target_sync_every <= 0) fail("target_sync_every must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (trace_length < 0) fail("trace_length must be non-negative");
  if (max_episodes <= 0 || success_streak <= 0) fail("episode limits must be positive");
  if (max_steps_per_episode <= 0 || max_steps_per_mission <= 0) fail("step limits must be positive");
  if (train_every <= 0) fail("train_every must be positive");
  network.validate();
}

std::string method_name(const AgentConfig& c) {
  if (c.recurrent()) return "drqn" + std::to_string(c.trace_length);
  return std::string(to_string(c.rule));
}

void apply_method(AgentConfig& c, std::string_view method) {
  if (method.starts_with("drqn")) {
    const std::string len(method.substr(4));
    const bool digits = !len.empty() && len.size() < 7 &&
                        std::all_of(len.begin(), len.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
    if (!digits || std::stoi(len) <= 0) throw std::invalid_argument("recurrent methods are drqn<trace length>, e.g. drqn100");
    c.trace_length = std::stoi(len);
    c.rule = UpdateRule::DQN;
    return;
  }
  c.rule = update_rule_from_string(method);
  c.trace_length = 0;
}

// -------------------------------------------------------------- TD target

namespace {

std::optional<std::size_t> argmax_valid(const nn::QValues& q, ActionMask valid) {
  std::optional<std::size_t> best;
  for (std::size_t a = 0; a < q.size(); ++a) {
    if (!valid.test(a)) continue;
    if (!best || q[a] > q[*best]) best = a;
  }
  return best;
}

}  // namespace

double td_target(UpdateRule rule, double reward, bool terminal, double gamma,
                 const nn::QValues& q_online_next, const nn::QValues& q_target_next,
                 ActionMask valid_next) {
  if (terminal || valid_next.none()) return reward;
  switch (rule) {
    case UpdateRule::DQN: {
      const auto a = *argmax_valid(q_target_next, valid_next);
      return reward + gamma * q_target_next[a];
    }
    case UpdateRule::DDQN: {
      const auto a = *argmax_valid(q_online_next, valid_next);
      return reward + gamma * q_target_next[a];
    }
    case UpdateRule::EDDQN: {
      const auto a = *argmax_valid(q_online_next, valid_next);
      return reward - gamma * q_target_next[a];
    }
  }
  return reward;
}

double td_target(UpdateRule rule, const Transition& t, const nn::NetworkParams& online,
                 const nn::NetworkParams& target) {
  if (t.terminal || t.valid_next.none()) return t.reward;
  const auto in = t.next->input();
  return td_target(rule, t.reward, false, t.gamma, nn::forward(online, in, nn::Mode::Eval),
                   nn::forward(target, in, nn::Mode::Eval), t.valid_next);
}

// ------------------------------------------------------------ train step

namespace {

std::optional<double> train_feedforward(const ReplayBuffer& buffer, nn::NetworkParams& online,
                                        const nn::NetworkParams& target, nn::AdamState& adam,
                                        const AgentConfig& config, Rng& rng) {
  const auto batch = static_cast<std::size_t>(config.batch_size);
  if (buffer.size() < batch) return std::nullopt;
  const auto idx = buffer.sample_indices(batch, rng);

  std::vector<nn::Input> states, nexts;
  std::vector<std::size_t> next_of(batch, SIZE_MAX);
  states.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto& t = buffer[idx[i]];
    states.push_back(t.state->input());
    if (!t.terminal && t.valid_next.any()) {
      next_of[i] = nexts.size();
      nexts.push_back(t.next->input());
    }
  }
  std::vector<nn::QValues> q_online_next, q_target_next;
  if (!nexts.empty()) {
    q_target_next = nn::forward_batch(target, nexts, nn::Mode::Eval).q;
    if (config.rule != UpdateRule::DQN) q_online_next = nn::forward_batch(online, nexts, nn::Mode::Eval).q;
  }

  const auto pass = nn::forward_batch(online, states, nn::Mode::Train, rng.next());
  std::vector<nn::QValues> targets = pass.q;
  std::vector<int> taken(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto& t = buffer[idx[i]];
    const auto a = static_cast<std::size_t>(index_of(t.action));
    taken[i] = static_cast<int>(a);
    if (next_of[i] == SIZE_MAX) {
      targets[i][a] = t.reward;
    } else {
      const auto k = next_of[i];
      const auto& qo = config.rule == UpdateRule::DQN ? q_target_next[k] : q_online_next[k];
      targets[i][a] = td_target(config.rule, t.reward, false, t.gamma, qo, q_target_next[k], t.valid_next);
    }
  }
  const double loss = nn::mse_loss(pass.q, targets, taken);
  auto grads = online.zeros_like();
  nn::backward(online, pass, nn::mse_loss_gradient(pass.q, targets, taken), grads);
  nn::adam_step(online, grads, adam);
  return loss;
}

std::optional<double> train_recurrent(const ReplayBuffer& buffer, nn::NetworkParams& online,
                                      const nn::NetworkParams& target, nn::AdamState& adam,
                                      const AgentConfig& config, Rng& rng) {
  const auto trace = std::min(static_cast<std::size_t>(config.trace_length), buffer.capacity());
  if (buffer.size() < trace || buffer.empty()) return std::nullopt;

  struct Segment {
    nn::SequencePass pass;
    std::vector<nn::QValues> targets;
    std::vector<int> taken;
  };
  std::vector<Segment> segments;
  std::size_t total = 0;
  while (total < static_cast<std::size_t>(config.batch_size)) {
    const auto seq = buffer.sample_sequence(static_cast<std::size_t>(config.trace_length), rng);
    std::vector<nn::Input> states, nexts;
    for (auto i : seq) {
      states.push_back(buffer[i].state->input());
      nexts.push_back(buffer[i].next->input());
    }
    const auto q_target_next = nn::forward_recurrent(target, nexts, {}, nn::Mode::Eval);
    const auto q_online_next = config.rule == UpdateRule::DQN
                                   ? q_target_next
                                   : nn::forward_recurrent(online, nexts, {}, nn::Mode::Eval);
    Segment s;
    s.pass = nn::forward_sequence(online, states, {}, nn::Mode::Train, rng.next());
    s.targets = s.pass.q;
    for (std::size_t k = 0; k < seq.size(); ++k) {
      const auto& t = buffer[seq[k]];
      const auto a = static_cast<std::size_t>(index_of(t.action));
      s.taken.push_back(static_cast<int>(a));
      s.targets[k][a] = td_target(config.rule, t.reward, t.terminal, t.gamma, q_online_next[k],
                                  q_target_next[k], t.valid_next);
    }
    total += seq.size();
    segments.push_back(std::move(s));
  }

  // Loss is the mean over every timestep of every segment.
  double loss = 0.0;
  auto grads = online.zeros_like();
  for (const auto& s : segments) {
    const double w = static_cast<double>(s.taken.size()) / static_cast<double>(total);
    loss += w * nn::mse_loss(s.pass.q, s.targets, s.taken);
    auto dq = nn::mse_loss_gradient(s.pass.q, s.targets, s.taken);
    for (auto& d : dq) {
      for (auto& x : d) x *= w;
    }
    nn::backward_sequence(online, s.pass, dq, grads);
  }
  nn::adam_step(online, grads, adam);
  return loss;
}

}  // namespace

std::optional<double> train_step(const ReplayBuffer& buffer, nn::NetworkParams& online,
                                 const nn::NetworkParams& target, nn::AdamState& adam,
                                 const AgentConfig& config, Rng& rng) {
  if (online.shape.recurrent) return train_recurrent(buffer, online, target, adam, config, rng);
  return train_feedforward(buffer, online, target, adam, config, rng);
}

bool sync_target(const nn::NetworkParams& online, nn::NetworkParams& target, std::int64_t step, int every) {
  if (every <= 0 || step <= 0 || step % every != 0) return false;
  target = nn::clone_params(online);
  return true;
}

// ---------------------------------------------------------------- Learner

Learner::Learner(AgentConfig config, std::uint64_t seed)
    : Learner(config, nn::init_params(config.effective_network(), derive_seed(seed, 1)), std::nullopt,
              seed) {}

Learner::Learner(AgentConfig config, nn::NetworkParams params, std::optional<nn::AdamState> adam,
                 std::uint64_t seed)
    : config_(std::move(config)),
      online_(std::move(params)),
      target_(nn::clone_params(online_)),
      buffer_(config_.replay_capacity),
      rng_(derive_seed(seed, 2)) {
  config_.validate();
  if (online_.shape.recurrent != config_.recurrent()) {
    throw std::invalid_argument("network architecture does not match the configured method");
  }
  config_.network = online_.shape;
  config_.network.recurrent = false;
  adam_ = adam ? std::move(*adam) : nn::AdamState::for_params(online_, {config_.learning_rate});
  adam_.config.learning_rate = config_.learning_rate;
}

nn::QValues Learner::act_values(const Observation& obs) {
  const auto in = obs.input();
  if (!online_.shape.recurrent) return nn::forward(online_, in, nn::Mode::Eval);
  auto pass = nn::forward_sequence(online_, std::span(&in, 1), memory_, nn::Mode::Eval);
  memory_ = std::move(pass.final_state);
  return pass.q.front();
}

std::optional<double> Learner::learn() {
  auto loss = train_step(buffer_, online_, target_, adam_, config_, rng_);
  if (!loss) return std::nullopt;
  ++updates_;
  sync_target(online_, target_, updates_, config_.target_sync_every);
  return loss;
}

}  // namespace dualnav
