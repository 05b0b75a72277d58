#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "manger/agent_net.hpp"
#include "manger/envs.hpp"
#include "manger/episode.hpp"
#include "manger/rng.hpp"

namespace manger {

struct EpsSchedule {
  double start = 1.0;
  double finish = 0.05;
  double anneal_steps = 100000;
};

/// Linear interpolation from start to finish over anneal_steps, then flat.
double epsilon_at(double t, const EpsSchedule& schedule);

/// Network input for one agent: its observation, optionally followed by a
/// one-hot agent id.
std::vector<double> agent_input(std::span<const double> obs, std::size_t agent, std::size_t n_agents,
                                bool with_agent_id);
std::size_t agent_input_dim(std::size_t obs_dim, std::size_t n_agents, bool with_agent_id);

/// Anything that maps the current view to a joint action.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode() {}
  virtual std::vector<std::size_t> act(const EnvView& view) = 0;
};

/// Epsilon-greedy decentralized execution of an AgentNet; each agent keeps
/// its own hidden state, reset at episode start.
class NetPolicy final : public Policy {
 public:
  NetPolicy(const AgentNet& net, const EnvSpec& spec, bool obs_agent_id, double epsilon, RngStream* rng);
  void begin_episode() override;
  std::vector<std::size_t> act(const EnvView& view) override;

 private:
  const AgentNet& net_;
  EnvSpec spec_;
  bool obs_agent_id_;
  double epsilon_;
  RngStream* rng_;
  std::vector<Tensor> hidden_;
};

/// Runs one episode of `policy` from reset(seed) until termination or the horizon.
Episode run_policy_episode(Env& env, Policy& policy, std::uint64_t seed);

/// Draws the reset seed from rng, then plays epsilon-greedy (epsilon = 0 when
/// greedy). With greedy set, rng supplies only the reset seed.
Episode run_episode(Env& env, const AgentNet& net, double epsilon, RngStream& rng, bool greedy,
                    bool obs_agent_id);

/// One episode per environment; env k draws from streams[k]. The result is
/// ordered by environment index, independent of `threads`.
std::vector<Episode> collect_interval(std::span<const std::unique_ptr<Env>> envs, const AgentNet& net,
                                      double epsilon, std::span<RngStream> streams, bool obs_agent_id,
                                      std::size_t threads = 1);

}  // namespace manger
