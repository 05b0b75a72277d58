#include "manger/rollout.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include "manger/action.hpp"
#include "manger/errors.hpp"

namespace manger {

double epsilon_at(double t, const EpsSchedule& s) {
  if (t < 0.0) throw ContractError("epsilon_at: negative time");
  if (t >= s.anneal_steps) return s.finish;
  const double frac = t / s.anneal_steps;
  return s.start + (s.finish - s.start) * frac;
}

std::size_t agent_input_dim(std::size_t obs_dim, std::size_t n_agents, bool with_agent_id) {
  return obs_dim + (with_agent_id ? n_agents : 0);
}

std::vector<double> agent_input(std::span<const double> obs, std::size_t agent, std::size_t n_agents,
                                bool with_agent_id) {
  std::vector<double> x(obs.begin(), obs.end());
  if (with_agent_id) {
    x.resize(obs.size() + n_agents, 0.0);
    x[obs.size() + agent] = 1.0;
  }
  return x;
}

NetPolicy::NetPolicy(const AgentNet& net, const EnvSpec& spec, bool obs_agent_id, double epsilon, RngStream* rng)
    : net_(net), spec_(spec), obs_agent_id_(obs_agent_id), epsilon_(epsilon), rng_(rng) {
  if (net.config().n_agents != spec.n_agents || net.config().n_actions != spec.n_actions ||
      net.config().input_dim != agent_input_dim(spec.obs_dim, spec.n_agents, obs_agent_id))
    throw DimensionError("agent network does not match environment '" + spec.name + "'");
  if (epsilon > 0.0 && rng == nullptr) throw ContractError("NetPolicy: epsilon > 0 needs an rng");
}

void NetPolicy::begin_episode() { hidden_.assign(spec_.n_agents, net_.initial_hidden()); }

std::vector<std::size_t> NetPolicy::act(const EnvView& view) {
  if (hidden_.size() != spec_.n_agents) begin_episode();
  std::vector<std::size_t> joint(spec_.n_agents);
  for (std::size_t i = 0; i < spec_.n_agents; ++i) {
    const auto in = agent_input(view.agent_obs(i, spec_.obs_dim), i, spec_.n_agents, obs_agent_id_);
    auto out = net_.forward(Tensor::vector(in), hidden_[i], i);
    hidden_[i] = std::move(out.h_next);
    const auto avail = view.agent_avail(i, spec_.n_actions);
    joint[i] = epsilon_ > 0.0 ? select_action(out.q_sum.data(), avail, epsilon_, *rng_)
                              : greedy_action(out.q_sum.data(), avail);
  }
  return joint;
}

Episode run_policy_episode(Env& env, Policy& policy, std::uint64_t seed) {
  const EnvSpec& spec = env.spec();
  Episode ep = Episode::begin(spec, seed);
  EnvView view = env.reset(seed);
  policy.begin_episode();
  for (std::size_t t = 0; t < spec.horizon; ++t) {
    ep.push_view(view);
    const auto joint = policy.act(view);
    StepOutcome out = env.step(joint);
    ep.push_step(joint, out.reward, out.terminated);
    ep.success = ep.success || out.success;
    view = std::move(out.view);
    if (out.terminated) break;
  }
  ep.push_view(view);
  return ep;
}

Episode run_episode(Env& env, const AgentNet& net, double epsilon, RngStream& rng, bool greedy, bool obs_agent_id) {
  const std::uint64_t seed = rng.next_u64();
  NetPolicy policy(net, env.spec(), obs_agent_id, greedy ? 0.0 : epsilon, &rng);
  return run_policy_episode(env, policy, seed);
}

std::vector<Episode> collect_interval(std::span<const std::unique_ptr<Env>> envs, const AgentNet& net,
                                      double epsilon, std::span<RngStream> streams, bool obs_agent_id,
                                      std::size_t threads) {
  if (envs.empty()) throw ContractError("collect_interval: need at least one environment");
  if (streams.size() != envs.size()) throw ContractError("collect_interval: one rng stream per environment");
  std::vector<Episode> out(envs.size());
  auto work = [&](std::size_t k) { out[k] = run_episode(*envs[k], net, epsilon, streams[k], false, obs_agent_id); };

  threads = std::clamp<std::size_t>(threads, 1, envs.size());
  if (threads == 1) {
    for (std::size_t k = 0; k < envs.size(); ++k) work(k);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < envs.size(); k += threads) work(k);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace manger
