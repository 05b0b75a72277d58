#pragma once

#include "manger/agent_net.hpp"
#include "manger/mixer.hpp"

namespace manger {

/// Frozen copies of the agent network and mixer used for bootstrapping.
struct TargetSet {
  AgentNet agent;
  Mixer mixer;
};

TargetSet make_targets(const AgentNet& agent, const Mixer& mixer);

struct SyncMode {
  enum class Kind { hard, soft } kind = Kind::hard;
  double tau = 1.0;

  static SyncMode hard() { return {Kind::hard, 1.0}; }
  static SyncMode soft(double tau) { return {Kind::soft, tau}; }
};

/// hard: bitwise copy of the live values. soft: target <- tau*live + (1-tau)*target.
void sync_targets(const AgentNet& live_agent, const Mixer& live_mixer, TargetSet& targets, SyncMode mode);

}  // namespace manger
