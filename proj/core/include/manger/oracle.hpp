#pragma once

#include <vector>

#include "manger/envs.hpp"
#include "manger/episode.hpp"
#include "manger/rollout.hpp"

namespace manger {

struct OracleResult {
  bool reachable = false;
  double optimal_return = 0.0;
  std::size_t minimal_steps = 0;
  std::vector<std::vector<std::size_t>> plan;  // joint action per step
  std::size_t states_explored = 0;
};

/// Centralized breadth-first search over the joint state (keyed by the
/// environment's state vector) for the shortest successful joint-action
/// sequence. The return is obtained by replaying that plan. Valid for the
/// bundled environments, whose rewards are a per-step cost plus a one-off
/// success payoff.
OracleResult oracle_optimal(const Env& prototype);

/// Replays the episode's actions on a fresh copy of the environment and
/// returns the cumulative reward.
double resimulate_return(const Env& prototype, const Episode& episode);

/// Open-loop policy replaying a fixed joint-action plan.
class PlanPolicy final : public Policy {
 public:
  explicit PlanPolicy(std::vector<std::vector<std::size_t>> plan) : plan_(std::move(plan)) {}
  void begin_episode() override { t_ = 0; }
  std::vector<std::size_t> act(const EnvView& view) override;

 private:
  std::vector<std::vector<std::size_t>> plan_;
  std::size_t t_ = 0;
};

}  // namespace manger
