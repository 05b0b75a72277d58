#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "manger/param_store.hpp"
#include "manger/rng.hpp"
#include "manger/tensor.hpp"

namespace manger {

struct AgentNetConfig {
  std::size_t input_dim = 0;
  std::size_t hidden = 64;
  std::size_t n_actions = 0;
  std::size_t n_agents = 0;
  double lambda = 0.5;
};

/// Recurrent per-agent Q-network: a trunk shared by all agents
/// (fc1 -> ReLU -> GRU -> fc2_com) and one linear head per agent reading the
/// GRU output. Agent i's utilities are q_sum = q_com + lambda * q_sep_i.
class AgentNet {
 public:
  AgentNet(const AgentNetConfig& config, RngStream& rng);
  /// Builds zero-valued parameters; used when loading checkpoints.
  explicit AgentNet(const AgentNetConfig& config);

  struct StepOutput {
    Tensor q_sum;
    Tensor q_com;
    Tensor q_sep;
    Tensor h_next;
  };

  StepOutput forward(const Tensor& input, const Tensor& h_prev, std::size_t agent) const;
  Tensor initial_hidden() const { return Tensor({config_.hidden}); }

  const AgentNetConfig& config() const noexcept { return config_; }
  double lambda() const noexcept { return config_.lambda; }
  void set_lambda(double lambda);

  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  /// Store indices of the shared trunk and of agent i's head.
  const std::vector<std::size_t>& trunk_indices() const noexcept { return trunk_; }
  std::vector<std::size_t> head_indices(std::size_t agent) const;

  // ---- batched unroll over episodes -------------------------------------
  //
  // Row layout: row = episode_rank * n_agents + agent. Episodes are ordered by
  // decreasing length, so at timestep t the first active[t] * n_agents rows
  // are live and the rest are padding that is never touched.

  struct Unroll {
    std::vector<std::size_t> active;  // episodes live at each timestep
    std::vector<Tensor> input;        // [rows_t x input_dim]
    std::vector<Tensor> a1;           // relu(fc1) output
    std::vector<Tensor> r, z, n, un;  // GRU gates; un = U_n h + b_n
    std::vector<Tensor> h;            // GRU output at t
    std::vector<Tensor> q_com, q_sep, q_sum;

    std::size_t steps() const noexcept { return active.size(); }
  };

  /// `inputs[t]` holds active[t] * n_agents rows. `active` must be
  /// non-increasing and positive.
  Unroll unroll(std::vector<std::size_t> active, std::vector<Tensor> inputs) const;

  /// Recomputes q_sep and q_sum from cached GRU outputs (trunk unchanged).
  void refresh_heads(Unroll& u) const;

  enum class GradScope { full, heads_only };

  /// Backpropagates dq_sum[t] (same shape as u.q_sum[t]) and accumulates
  /// parameter gradients. With heads_only, only the heads of agents whose
  /// head_mask entry is nonzero receive gradient; the trunk receives none.
  void backward(const Unroll& u, const std::vector<Tensor>& dq_sum, GradScope scope,
                std::span<const std::uint8_t> head_mask = {});

 private:
  void build(RngStream* rng);

  AgentNetConfig config_;
  ParamStore params_;
  std::vector<std::size_t> trunk_;
  std::size_t fc1_w_ = 0, fc1_b_ = 0;
  std::size_t w_r_ = 0, w_z_ = 0, w_n_ = 0, u_r_ = 0, u_z_ = 0, u_n_ = 0, b_r_ = 0, b_z_ = 0, b_n_ = 0;
  std::size_t fc2_w_ = 0, fc2_b_ = 0;
  std::vector<std::size_t> head_w_, head_b_;
};

}  // namespace manger
