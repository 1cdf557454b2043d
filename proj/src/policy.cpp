#include <limits>
#include <stdexcept>

#include "dualnav/agents.hpp"

namespace dualnav {

std::string_view to_string(PolicyDecision d) {
  switch (d) {
    case PolicyDecision::Random: return "random";
    case PolicyDecision::Predicted: return "predicted";
    case PolicyDecision::Corrected: return "corrected";
  }
  return "predicted";
}

ActionChoice epsilon_greedy(const nn::QValues& q, ActionMask valid, double epsilon, Rng& rng,
                            GreedyScope scope, EpsilonBranch branch) {
  if (valid.none()) throw std::invalid_argument("epsilon_greedy: no valid action");
  const double mu = 1.0 - rng.uniform();
  const bool below = mu <= epsilon;
  const bool explore = branch == EpsilonBranch::RandomWhenBelow ? below : !below;
  if (explore) {
    auto pick = rng.below(valid.count());
    for (auto a : kActions) {
      if (!valid.test(static_cast<std::size_t>(index_of(a)))) continue;
      if (pick-- == 0) return {a, PolicyDecision::Random};
    }
  }
  std::optional<Action> best;
  for (auto a : kActions) {
    if (scope == GreedyScope::ValidOnly && !valid.test(static_cast<std::size_t>(index_of(a)))) continue;
    if (!best || q[static_cast<std::size_t>(index_of(a))] > q[static_cast<std::size_t>(index_of(*best))]) {
      best = a;
    }
  }
  return {*best, PolicyDecision::Predicted};
}

std::optional<ActionChoice> correct_action(Action predicted, GridCoord position, ActionMask valid,
                                           GridCoord target_cell) {
  if (valid.test(static_cast<std::size_t>(index_of(predicted)))) {
    return ActionChoice{predicted, PolicyDecision::Predicted};
  }
  std::optional<Action> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (auto a : kActions) {
    if (!valid.test(static_cast<std::size_t>(index_of(a)))) continue;
    const double d = euclidean(step(position, a), target_cell);
    if (d < best_d) {
      best_d = d;
      best = a;
    }
  }
  if (!best) return std::nullopt;
  return ActionChoice{*best, PolicyDecision::Corrected};
}

std::optional<ActionChoice> correct_action(Action predicted, const LocalMap& local) {
  return correct_action(predicted, local.agent(), valid_actions(local), local.target());
}

}  // namespace dualnav
