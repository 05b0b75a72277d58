#pragma once

#include <span>

#include "manger/param_store.hpp"
#include "manger/rng.hpp"
#include "manger/tensor.hpp"

namespace manger {

struct MixerConfig {
  std::size_t n_agents = 0;
  std::size_t state_dim = 0;
  std::size_t embed_dim = 32;       // E
  std::size_t hypernet_embed = 64;  // hidden width of the w1 / w_final hypernetworks
};

/// Monotonic state-conditioned mixer:
///   hidden = elu(q^T |W1(s)| + b1(s)),  q_tot = hidden . |w_final(s)| + V(s)
/// W1 and w_final come from two-layer ReLU hypernetworks, b1 from a single
/// linear layer and V from a two-layer ReLU network with E hidden units.
class Mixer {
 public:
  Mixer(const MixerConfig& config, RngStream& rng);
  explicit Mixer(const MixerConfig& config);

  double forward(std::span<const double> q_agents, std::span<const double> state) const;

  struct Rows {
    Tensor q, state;          // [M x N], [M x S]
    Tensor w1_hidden, w1_raw;  // [M x HE], [M x N*E]
    Tensor b1;                 // [M x E]
    Tensor pre, hidden;        // [M x E]
    Tensor wf_hidden, wf_raw;  // [M x HE], [M x E]
    Tensor v_hidden;           // [M x E]
    Tensor q_tot;              // [M]
  };

  /// Mixes M rows at once; the returned cache feeds backward_rows.
  Rows forward_rows(Tensor q, Tensor states) const;
  /// Accumulates parameter gradients for upstream dq_tot[M] and returns
  /// dq [M x N].
  Tensor backward_rows(const Rows& rows, std::span<const double> dq_tot);

  const MixerConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

 private:
  void build(RngStream* rng);

  MixerConfig config_;
  ParamStore params_;
  std::size_t w1a_w_ = 0, w1a_b_ = 0, w1b_w_ = 0, w1b_b_ = 0;
  std::size_t b1_w_ = 0, b1_b_ = 0;
  std::size_t wfa_w_ = 0, wfa_b_ = 0, wfb_w_ = 0, wfb_b_ = 0;
  std::size_t va_w_ = 0, va_b_ = 0, vb_w_ = 0, vb_b_ = 0;
};

}  // namespace manger
