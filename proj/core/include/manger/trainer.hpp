#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "manger/agent_net.hpp"
#include "manger/checkpoint.hpp"
#include "manger/config.hpp"
#include "manger/envs.hpp"
#include "manger/episode.hpp"
#include "manger/metrics.hpp"
#include "manger/mixer.hpp"
#include "manger/rnd.hpp"
#include "manger/rollout.hpp"
#include "manger/targets.hpp"

namespace manger {

/// Live networks plus their frozen targets.
struct Learner {
  AgentNet agent;
  Mixer mixer;
  RndNet rnd;
  TargetSet targets;
  bool obs_agent_id = false;
};

/// Initializes agent network, mixer and RND (in that order) from `rng`.
/// The agent's lambda is forced to 0 for algo=qmix.
Learner make_learner(const EnvSpec& spec, const TrainConfig& cfg, RngStream& rng);

// Stream ids below kReservedStreams belong to the rollout environments.
inline constexpr std::uint64_t kReservedStreams = std::uint64_t{1} << 32;
inline constexpr std::uint64_t kInitStream = kReservedStreams + 1;
inline constexpr std::uint64_t kSampleStream = kReservedStreams + 2;
inline constexpr std::uint64_t kEvalStream = kReservedStreams + 3;

struct BatchStats {
  double loss = 0.0;
  std::optional<double> rnd_loss;
  std::vector<double> novelty;  // per-agent mean; empty unless algo=manger
  std::vector<int> extra;       // budget handed to the extra phase
  std::vector<std::size_t> applications;
  double mean_extra = 0.0;
};

/// One training step on a sampled batch: targets, novelty budget, global
/// passes, extra phase and (every m_rnd-th step) the RND update.
/// `step` is the 1-based index of this training step. Target sync is left
/// to the caller.
BatchStats train_on_batch(Learner& learner, const EpisodeBatch& batch, const TrainConfig& cfg, std::size_t step);

struct EvalResult {
  double mean_return = 0.0;
  double success_rate = 0.0;
  std::vector<std::vector<double>> observations;  // distinct per-agent observations seen
};

/// Greedy rollouts; reset seeds come from `rng`. Rejects episodes == 0.
EvalResult evaluate_policy(Env& env, Policy& policy, std::size_t episodes, RngStream& rng);
EvalResult evaluate(const AgentNet& net, Env& env, std::size_t episodes, RngStream& rng, bool obs_agent_id);

struct TrainResult {
  std::vector<MetricsRow> rows;
  std::optional<Learner> learner;
  std::size_t env_steps = 0;
  std::size_t episodes = 0;
  std::vector<Episode> last_interval;
};

struct TrainHooks {
  std::function<void(const MetricsRow&)> on_row;
  /// Sees every collected episode before it enters the replay buffer.
  std::function<void(const Episode&)> on_episode;
};

/// Runs a full training job. Writes <outdir>/config.txt before starting and
/// <outdir>/metrics.csv and <outdir>/checkpoint.mngr when done.
TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Names used in checkpoints: agent.*, mixer.*, rnd.target.*,
/// rnd.predictor.*, target.agent.*, target.mixer.*, plus meta.lambda and
/// meta.obs_agent_id.
std::vector<NamedTensor> learner_entries(const Learner& learner);
void save_learner(const Learner& learner, const std::filesystem::path& path);
/// Overwrites every tensor of an existing learner; throws ShapeError before
/// touching anything when an architecture differs.
void restore_learner(const std::vector<NamedTensor>& entries, Learner& learner);
/// Rebuilds the architecture from tensor shapes.
Learner learner_from_entries(const std::vector<NamedTensor>& entries);
Learner load_learner(const std::filesystem::path& path);

}  // namespace manger
