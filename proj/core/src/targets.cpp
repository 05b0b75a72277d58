#include "manger/targets.hpp"

#include "manger/errors.hpp"

namespace manger {

TargetSet make_targets(const AgentNet& agent, const Mixer& mixer) { return TargetSet{agent, mixer}; }

void sync_targets(const AgentNet& live_agent, const Mixer& live_mixer, TargetSet& targets, SyncMode mode) {
  if (mode.kind == SyncMode::Kind::hard) {
    targets.agent.params().copy_values_from(live_agent.params());
    targets.mixer.params().copy_values_from(live_mixer.params());
  } else {
    if (!(mode.tau >= 0.0 && mode.tau <= 1.0)) throw ContractError("soft sync requires tau in [0, 1]");
    targets.agent.params().blend_values_from(live_agent.params(), mode.tau);
    targets.mixer.params().blend_values_from(live_mixer.params(), mode.tau);
  }
  targets.agent.set_lambda(live_agent.lambda());
}

}  // namespace manger
