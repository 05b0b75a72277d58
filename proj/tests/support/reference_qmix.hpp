#pragma once

#include <map>
#include <string>
#include <vector>

#include "manger/agent_net.hpp"
#include "manger/episode.hpp"
#include "manger/mixer.hpp"
#include "manger/tensor.hpp"

namespace mtest {

/// Plain QMIX learner written per sample (one agent, one timestep, one mixer
/// row at a time) on top of the single-vector primitives. It shares no code
/// with the batched trainer beyond affine / gru_cell and their backward
/// passes, and runs its own Adam.
class ReferenceQmix {
 public:
  using Params = std::map<std::string, manger::Tensor>;

  ReferenceQmix(const manger::AgentNet& agent, const manger::Mixer& mixer, double lambda, bool obs_agent_id);

  /// TD(lambda) targets, layout b * max_len + t.
  std::vector<double> targets(const manger::EpisodeBatch& batch, double gamma, double td_lambda) const;
  /// Loss of the live networks against fixed targets; fills grads_.
  double loss_and_grads(const manger::EpisodeBatch& batch, const std::vector<double>& y);
  /// targets + one gradient pass + Adam on every parameter. Returns the loss.
  double update(const manger::EpisodeBatch& batch, double gamma, double td_lambda, double lr);
  void sync_targets() { target_ = live_; }

  const Params& live() const { return live_; }
  const Params& grads() const { return grads_; }

 private:
  struct StepCache {
    manger::Tensor x, pre1, a1, h_prev, h, q;
  };
  StepCache agent_step(const Params& p, const manger::Tensor& x, const manger::Tensor& h, std::size_t agent) const;
  double mix(const Params& p, const std::vector<double>& q, std::span<const double> s) const;
  std::vector<double> mix_backward(const std::vector<double>& q, std::span<const double> s, double g);
  manger::Tensor input(const manger::EpisodeBatch& batch, std::size_t b, std::size_t t, std::size_t i) const;

  Params live_, target_, grads_, m_, v_;
  std::int64_t steps_ = 0;
  std::size_t n_agents_, n_actions_, hidden_, embed_;
  double lambda_;
  bool obs_agent_id_;
};

}  // namespace mtest
