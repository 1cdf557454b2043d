#pragma once

// Reinforcement-learning core: configuration, replay memory, action
// selection, TD targets and the mini-batch update.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualnav/gridmap.hpp"
#include "dualnav/neuralnet.hpp"
#include "dualnav/rng.hpp"
#include "dualnav/worldsim.hpp"

namespace dualnav {

enum class UpdateRule { DQN, DDQN, EDDQN };
std::string_view to_string(UpdateRule r);
UpdateRule update_rule_from_string(std::string_view s);

// Which side of the epsilon draw takes the random action. The default is
// random when mu <= epsilon; GreedyWhenBelow swaps the branches.
enum class EpsilonBranch { RandomWhenBelow, GreedyWhenBelow };

struct AgentConfig {
  double epsilon_train = 0.1;
  double epsilon_test = 0.05;
  // Bootstrap coefficient of the TD target.
  double gamma = 0.95;
  std::size_t replay_capacity = 800;
  int target_sync_every = 10;
  double learning_rate = 0.001;
  int batch_size = 32;
  UpdateRule rule = UpdateRule::EDDQN;
  // 0 selects the feedforward network; otherwise the recurrent network is
  // trained on segments of up to this many consecutive transitions.
  int trace_length = 0;
  int max_episodes = 1500;
  int success_streak = 50;
  int max_steps_per_episode = 150;
  int max_steps_per_mission = 5000;
  int train_every = 1;
  EpsilonBranch epsilon_branch = EpsilonBranch::RandomWhenBelow;
  nn::NetworkShape network = nn::NetworkShape::table1();

  bool recurrent() const { return trace_length > 0; }
  nn::NetworkShape effective_network() const;
  void validate() const;

  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

// Method names used on the command line and in reports:
// dqn | ddqn | eddqn | drqn100 | drqn1000.
std::string method_name(const AgentConfig& c);
void apply_method(AgentConfig& c, std::string_view method);

struct Observation {
  CameraFrame frame;
  MapRaster map{};

  nn::Input input() const { return {frame.pixels, map}; }
};
using ObservationPtr = std::shared_ptr<const Observation>;

struct Transition {
  ObservationPtr state;
  Action action = Action::North;
  double reward = 0.0;
  double gamma = 0.95;
  ObservationPtr next;
  bool terminal = false;
  ActionMask valid_next;
  std::uint64_t episode = 0;
};

// Fixed-capacity FIFO replay memory.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 800);

  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return slots_.size(); }
  bool empty() const { return size_ == 0; }
  // 0 is the oldest stored transition.
  const Transition& operator[](std::size_t i) const;

  // n distinct indices drawn uniformly (partial Fisher-Yates).
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  // Consecutive indices starting at a uniformly drawn position, stopping at
  // max_len, the end of the buffer, or the end of the start's episode.
  std::vector<std::size_t> sample_sequence(std::size_t max_len, Rng& rng) const;

 private:
  std::vector<Transition> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

enum class PolicyDecision { Random, Predicted, Corrected };
std::string_view to_string(PolicyDecision d);

enum class GreedyScope { ValidOnly, AllActions };

struct ActionChoice {
  Action action = Action::North;
  PolicyDecision decision = PolicyDecision::Predicted;

  friend bool operator==(const ActionChoice&, const ActionChoice&) = default;
};

// Draws mu uniformly from (0, 1]. Random branch: uniform over the valid set.
// Greedy branch: argmax over the valid set (ValidOnly) or over all four
// actions (AllActions); ties go to the first action in N, S, E, W order.
// Throws std::invalid_argument on an empty valid set.
ActionChoice epsilon_greedy(const nn::QValues& q, ActionMask valid, double epsilon, Rng& rng,
                            GreedyScope scope = GreedyScope::ValidOnly,
                            EpsilonBranch branch = EpsilonBranch::RandomWhenBelow);

// Keeps a predicted action whose destination is valid; otherwise returns the
// valid action whose destination is closest to the target cell. Empty when
// the agent is boxed in.
std::optional<ActionChoice> correct_action(Action predicted, GridCoord position, ActionMask valid,
                                           GridCoord target_cell);
std::optional<ActionChoice> correct_action(Action predicted, const LocalMap& local);

// Bootstrapped target for one transition given next-state values of the
// online and target networks. Terminal transitions, or ones with no valid
// next action, return the reward.
double td_target(UpdateRule rule, double reward, bool terminal, double gamma,
                 const nn::QValues& q_online_next, const nn::QValues& q_target_next,
                 ActionMask valid_next);

// Same, evaluating both networks on the transition's next observation
// (feedforward networks only).
double td_target(UpdateRule rule, const Transition& t, const nn::NetworkParams& online,
                 const nn::NetworkParams& target);

// One mini-batch update of `online`. Empty (no-op) while the buffer holds
// fewer than batch_size transitions (feedforward) or one full trace
// (recurrent). Returns the loss before the update.
std::optional<double> train_step(const ReplayBuffer& buffer, nn::NetworkParams& online,
                                 const nn::NetworkParams& target, nn::AdamState& adam,
                                 const AgentConfig& config, Rng& rng);

// Copies online into target when step is a positive multiple of every.
bool sync_target(const nn::NetworkParams& online, nn::NetworkParams& target, std::int64_t step,
                 int every);

// Owns the value network, its target copy, the optimiser and the replay
// memory. Single-threaded.
class Learner {
 public:
  Learner(AgentConfig config, std::uint64_t seed);
  Learner(AgentConfig config, nn::NetworkParams params, std::optional<nn::AdamState> adam,
          std::uint64_t seed);

  const AgentConfig& config() const { return config_; }
  AgentConfig& mutable_config() { return config_; }

  // Eval-mode Q-values; advances the recurrent state for DRQN.
  nn::QValues act_values(const Observation& obs);
  // Clears the recurrent state (new decision map).
  void reset_memory() { memory_ = nn::LstmState{}; }
  // Starts a new decision map: clears the recurrent state and returns a fresh
  // episode id for the transitions that follow.
  std::uint64_t begin_episode() {
    reset_memory();
    return ++episodes_;
  }

  void remember(Transition t) { buffer_.push(std::move(t)); }
  // One train_step plus the periodic target sync.
  std::optional<double> learn();

  const nn::NetworkParams& online() const { return online_; }
  nn::NetworkParams& online() { return online_; }
  const nn::NetworkParams& target() const { return target_; }
  const nn::AdamState& adam() const { return adam_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::int64_t updates() const { return updates_; }

 private:
  AgentConfig config_;
  nn::NetworkParams online_;
  nn::NetworkParams target_;
  nn::AdamState adam_;
  ReplayBuffer buffer_;
  nn::LstmState memory_;
  Rng rng_;
  std::int64_t updates_ = 0;
  std::uint64_t episodes_ = 0;
};

}  // namespace dualnav
