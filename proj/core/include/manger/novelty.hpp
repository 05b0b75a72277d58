#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "manger/episode.hpp"
#include "manger/param_store.hpp"
#include "manger/rnd.hpp"

namespace manger {

/// Novelty of every (episode, timestep, agent) cell of a batch. Padded
/// cells are marked invalid and hold 0.
struct NoveltyMatrix {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::size_t n_agents = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  std::size_t index(std::size_t b, std::size_t t, std::size_t i) const { return (b * steps + t) * n_agents + i; }
  double at(std::size_t b, std::size_t t, std::size_t i) const { return values[index(b, t, i)]; }
  bool is_valid(std::size_t b, std::size_t t, std::size_t i) const { return valid[index(b, t, i)] != 0; }
};

struct NoveltyReport {
  NoveltyMatrix per_obs;
  std::vector<double> agent_mean;  // N_i
  double pooled_mean = 0.0;        // over all valid cells
  double pooled_std = 0.0;         // population standard deviation, same cells
  std::vector<int> extra;          // T_i in [0, beta]
};

/// Below this pooled standard deviation no extra updates are granted.
inline constexpr double kNoveltyStdFloor = 1e-8;

NoveltyMatrix score_batch(const EpisodeBatch& batch, const RndNet& rnd);

/// T_i = floor(alpha * (N_i - mean) / std), clamped to [0, beta].
NoveltyReport extra_updates(NoveltyMatrix per_obs, double alpha, int beta);

/// Elementwise indicator of T_i > 0.
std::vector<std::uint8_t> h_mask(std::span<const int> T);

/// One Adam step of the predictor on the mean squared embedding error over
/// all valid observations of the batch. Returns the pre-step loss.
double rnd_train_step(RndNet& rnd, const EpisodeBatch& batch, const AdamOptions& opts);

/// Valid observation rows of a batch, [valid cells x obs_dim].
Tensor valid_observations(const EpisodeBatch& batch);

}  // namespace manger
