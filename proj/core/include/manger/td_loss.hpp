#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "manger/agent_net.hpp"
#include "manger/episode.hpp"
#include "manger/mixer.hpp"
#include "manger/param_store.hpp"
#include "manger/targets.hpp"

namespace manger {

/// Episodes of a batch ordered by decreasing length (stable), and the number
/// of episodes still running at each timestep.
struct SequenceLayout {
  std::vector<std::size_t> order;   // rank -> batch index
  std::vector<std::size_t> active;  // per timestep
};

SequenceLayout layout_by_length(std::span<const std::size_t> lengths);

/// Per-timestep network inputs in AgentNet row layout.
std::vector<Tensor> gather_inputs(const EpisodeBatch& batch, const SequenceLayout& layout, bool obs_agent_id);

/// TD(lambda) targets, one per (episode, step), computed backward:
///   G_t = r_t                                          at a terminal step
///   G_t = r_t + gamma * ((1 - lambda) * Q'(t+1) + lambda * G_{t+1})  otherwise
/// where Q'(t+1) mixes the per-agent argmax of the target q_sum through the
/// target mixer, and G beyond a truncated last step is Q'. Padding holds 0.
std::vector<double> td_lambda_targets(const EpisodeBatch& batch, const TargetSet& targets, double gamma,
                                      double td_lambda, bool obs_agent_id);

/// Forward state of the squared TD loss over every valid (episode, step).
class TdLoss {
 public:
  TdLoss(const EpisodeBatch& batch, std::span<const double> targets, bool obs_agent_id);

  /// Full forward pass through agent network and mixer. Returns the loss
  /// mean((Q_tot - y)^2) over valid cells.
  double forward(const AgentNet& agent, const Mixer& mixer);
  /// Reuses cached trunk activations and recomputes only heads and mixer.
  double forward_heads(const AgentNet& agent, const Mixer& mixer);
  /// Accumulates gradients of the last forward's loss.
  void backward(AgentNet& agent, Mixer& mixer, AgentNet::GradScope scope,
                std::span<const std::uint8_t> head_mask = {});

  double loss() const noexcept { return loss_; }
  std::size_t cells() const noexcept { return cell_t_.size(); }
  /// Q_tot of each valid cell in (t, rank) order.
  const Tensor& q_tot() const noexcept { return mix_.q_tot; }

 private:
  double mix_and_score(const AgentNet& agent, const Mixer& mixer);

  const EpisodeBatch& batch_;
  SequenceLayout layout_;
  std::vector<double> y_;  // per cell
  std::vector<std::size_t> cell_t_, cell_rank_;
  Tensor cell_state_;  // [cells x S]
  AgentNet::Unroll unroll_;
  Mixer::Rows mix_;
  double loss_ = 0.0;
  bool have_forward_ = false;
};

/// Non-finite loss check that reports batch statistics.
void require_finite_loss(double loss, const EpisodeBatch& batch, std::span<const double> targets,
                         const char* phase);

/// `passes` full gradient passes on the TD loss, each followed by an Adam
/// step on the whole agent network and mixer. Targets stay fixed. Returns the
/// loss measured before the first update.
double global_update(const EpisodeBatch& batch, std::span<const double> targets, AgentNet& agent, Mixer& mixer,
                     const AdamOptions& opts, bool obs_agent_id, std::size_t passes = 2);

struct ExtraPhaseResult {
  std::size_t iterations = 0;
  std::vector<std::size_t> applications;  // per agent head
  std::vector<double> losses;             // pre-update loss per iteration
};

/// Called after each extra iteration with the iteration index and the head
/// mask that was applied.
using ExtraIterationHook = std::function<void(std::size_t, std::span<const std::uint8_t>)>;

/// While any T_i > 0: recompute the loss, update the mixer and the heads of
/// agents with T_i > 0 (trunk and other heads untouched), then T <- T - 1.
ExtraPhaseResult extra_update_phase(const EpisodeBatch& batch, std::span<const double> targets, AgentNet& agent,
                                    Mixer& mixer, std::vector<int> budget, const AdamOptions& opts,
                                    bool obs_agent_id, const ExtraIterationHook& hook = {});

}  // namespace manger
