#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "manger/envs.hpp"
#include "manger/rng.hpp"

namespace manger {

/// One recorded episode. Per-step arrays hold `length` entries; observation,
/// state and availability arrays hold one more (the view after the last step).
struct Episode {
  std::size_t n_agents = 0;
  std::size_t n_actions = 0;
  std::size_t obs_dim = 0;
  std::size_t state_dim = 0;
  std::uint64_t seed = 0;  // reset seed, for re-simulation
  std::size_t length = 0;

  std::vector<double> obs;            // (length+1) x N x obs_dim
  std::vector<double> state;          // (length+1) x state_dim
  std::vector<std::uint8_t> avail;    // (length+1) x N x A
  std::vector<std::size_t> actions;   // length x N
  std::vector<double> reward;         // length
  std::vector<std::uint8_t> terminated;  // length
  bool success = false;

  static Episode begin(const EnvSpec& spec, std::uint64_t seed);
  void push_view(const EnvView& view);
  void push_step(std::span<const std::size_t> joint_action, double r, bool term);

  double total_reward() const;
  std::span<const std::size_t> joint_action(std::size_t t) const {
    return std::span<const std::size_t>(actions).subspan(t * n_agents, n_agents);
  }
};

/// Padded [episode x timestep x agent] batch. T = longest episode length.
/// Per-step arrays are B x T; view arrays are B x (T+1).
struct EpisodeBatch {
  std::size_t batch = 0;
  std::size_t max_len = 0;
  std::size_t n_agents = 0;
  std::size_t n_actions = 0;
  std::size_t obs_dim = 0;
  std::size_t state_dim = 0;

  std::vector<std::size_t> lengths;
  std::vector<double> obs;               // B x (T+1) x N x obs_dim
  std::vector<double> state;             // B x (T+1) x S
  std::vector<std::uint8_t> avail;       // B x (T+1) x N x A
  std::vector<std::size_t> actions;      // B x T x N
  std::vector<double> reward;            // B x T
  std::vector<std::uint8_t> terminated;  // B x T
  std::vector<std::uint8_t> filled;      // B x T

  std::size_t step_index(std::size_t b, std::size_t t) const { return b * max_len + t; }
  std::size_t view_index(std::size_t b, std::size_t t) const { return b * (max_len + 1) + t; }
  std::span<const double> obs_at(std::size_t b, std::size_t t, std::size_t agent) const {
    return std::span<const double>(obs).subspan((view_index(b, t) * n_agents + agent) * obs_dim, obs_dim);
  }
  std::span<const double> state_at(std::size_t b, std::size_t t) const {
    return std::span<const double>(state).subspan(view_index(b, t) * state_dim, state_dim);
  }
  std::span<const std::uint8_t> avail_at(std::size_t b, std::size_t t, std::size_t agent) const {
    return std::span<const std::uint8_t>(avail).subspan((view_index(b, t) * n_agents + agent) * n_actions,
                                                        n_actions);
  }
  std::size_t action_at(std::size_t b, std::size_t t, std::size_t agent) const {
    return actions[step_index(b, t) * n_agents + agent];
  }
  std::size_t valid_steps() const;
};

/// Pads episodes into a batch; padded cells are filled with `pad_value`.
EpisodeBatch make_batch(std::span<const Episode* const> episodes, double pad_value = 0.0);

/// FIFO ring of whole episodes.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void insert(Episode episode);
  std::size_t size() const noexcept { return episodes_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool ready(std::size_t batch_size) const noexcept { return size() >= batch_size; }
  const Episode& operator[](std::size_t i) const { return episodes_[i]; }
  std::size_t total_inserted() const noexcept { return inserted_; }

 private:
  std::size_t capacity_;
  std::size_t inserted_ = 0;
  std::deque<Episode> episodes_;
};

/// Indices of `k` distinct episodes drawn uniformly (partial Fisher-Yates).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, RngStream& rng);

/// Uniform sample without replacement; nullopt while the buffer holds fewer
/// than batch_size episodes.
std::optional<EpisodeBatch> sample(const ReplayBuffer& replay, std::size_t batch_size, RngStream& rng);

}  // namespace manger
