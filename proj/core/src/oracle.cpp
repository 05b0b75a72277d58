#include "manger/oracle.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <memory>

#include "manger/errors.hpp"

namespace manger {

namespace {

std::vector<std::vector<std::size_t>> all_joint_actions(const EnvSpec& spec) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur(spec.n_agents, 0);
  while (true) {
    out.push_back(cur);
    std::size_t i = 0;
    while (i < spec.n_agents && ++cur[i] == spec.n_actions) cur[i++] = 0;
    if (i == spec.n_agents) break;
  }
  return out;
}

struct Node {
  std::unique_ptr<Env> env;
  long parent;
  std::size_t action;  // index into the joint-action table
};

}  // namespace

OracleResult oracle_optimal(const Env& prototype) {
  const EnvSpec& spec = prototype.spec();
  const auto joint = all_joint_actions(spec);
  std::vector<Node> nodes;
  std::map<std::vector<double>, bool> seen;

  auto root = prototype.clone();
  const EnvView start = root->reset(0);
  seen[start.state] = true;
  nodes.push_back(Node{std::move(root), -1, 0});

  OracleResult result;
  long goal = -1;
  for (std::size_t head = 0; head < nodes.size() && goal < 0; ++head) {
    for (std::size_t j = 0; j < joint.size(); ++j) {
      auto child = nodes[head].env->clone();
      const StepOutcome out = child->step(joint[j]);
      if (out.success) {
        nodes.push_back(Node{std::move(child), static_cast<long>(head), j});
        goal = static_cast<long>(nodes.size() - 1);
        break;
      }
      if (out.terminated || seen.contains(out.view.state)) continue;
      seen[out.view.state] = true;
      nodes.push_back(Node{std::move(child), static_cast<long>(head), j});
    }
  }
  result.states_explored = seen.size();
  if (goal < 0) return result;

  for (long n = goal; nodes[n].parent >= 0; n = nodes[n].parent) result.plan.push_back(joint[nodes[n].action]);
  std::reverse(result.plan.begin(), result.plan.end());
  result.reachable = true;
  result.minimal_steps = result.plan.size();

  auto env = prototype.clone();
  env->reset(0);
  for (const auto& a : result.plan) result.optimal_return += env->step(a).reward;
  return result;
}

double resimulate_return(const Env& prototype, const Episode& episode) {
  auto env = prototype.clone();
  env->reset(episode.seed);
  double total = 0.0;
  for (std::size_t t = 0; t < episode.length; ++t) total += env->step(episode.joint_action(t)).reward;
  return total;
}

std::vector<std::size_t> PlanPolicy::act(const EnvView&) {
  if (t_ >= plan_.size()) throw ContractError("PlanPolicy: plan exhausted");
  return plan_[t_++];
}

}  // namespace manger
