#include "manger/novelty.hpp"

#include <algorithm>
#include <cmath>

#include "manger/errors.hpp"

namespace manger {

Tensor valid_observations(const EpisodeBatch& batch) {
  const std::size_t rows = batch.valid_steps() * batch.n_agents;
  if (rows == 0) throw ContractError("batch has no valid cells");
  Tensor X({rows, batch.obs_dim});
  std::size_t r = 0;
  for (std::size_t b = 0; b < batch.batch; ++b)
    for (std::size_t t = 0; t < batch.lengths[b]; ++t)
      for (std::size_t i = 0; i < batch.n_agents; ++i) {
        const auto o = batch.obs_at(b, t, i);
        std::copy(o.begin(), o.end(), X.row(r++).begin());
      }
  return X;
}

NoveltyMatrix score_batch(const EpisodeBatch& batch, const RndNet& rnd) {
  NoveltyMatrix m;
  m.batch = batch.batch;
  m.steps = batch.max_len;
  m.n_agents = batch.n_agents;
  m.values.assign(m.batch * m.steps * m.n_agents, 0.0);
  m.valid.assign(m.values.size(), 0);
  const Tensor X = valid_observations(batch);
  const std::vector<double> scores = rnd.novelty_rows(X);
  std::size_t r = 0;
  for (std::size_t b = 0; b < batch.batch; ++b)
    for (std::size_t t = 0; t < batch.lengths[b]; ++t)
      for (std::size_t i = 0; i < batch.n_agents; ++i) {
        m.values[m.index(b, t, i)] = scores[r++];
        m.valid[m.index(b, t, i)] = 1;
      }
  return m;
}

NoveltyReport extra_updates(NoveltyMatrix per_obs, double alpha, int beta) {
  if (beta < 0) throw ContractError("beta must be >= 0");
  const std::size_t N = per_obs.n_agents;
  std::vector<double> sum(N, 0.0);
  std::vector<std::size_t> count(N, 0);
  double total = 0.0;
  std::size_t cells = 0;
  for (std::size_t k = 0; k < per_obs.values.size(); ++k) {
    if (!per_obs.valid[k]) continue;
    sum[k % N] += per_obs.values[k];
    ++count[k % N];
    total += per_obs.values[k];
    ++cells;
  }
  if (cells == 0) throw ContractError("extra_updates: batch has no valid cells");

  NoveltyReport rep;
  rep.pooled_mean = total / static_cast<double>(cells);
  double ss = 0.0;
  for (std::size_t k = 0; k < per_obs.values.size(); ++k)
    if (per_obs.valid[k]) ss += (per_obs.values[k] - rep.pooled_mean) * (per_obs.values[k] - rep.pooled_mean);
  rep.pooled_std = std::sqrt(ss / static_cast<double>(cells));

  rep.agent_mean.resize(N);
  rep.extra.assign(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    rep.agent_mean[i] = count[i] ? sum[i] / static_cast<double>(count[i]) : 0.0;
    if (rep.pooled_std < kNoveltyStdFloor || count[i] == 0) continue;
    const double raw = alpha * (rep.agent_mean[i] - rep.pooled_mean) / rep.pooled_std;
    if (!(raw > 0.0)) continue;
    rep.extra[i] = static_cast<int>(std::min(std::floor(raw), static_cast<double>(beta)));
  }
  rep.per_obs = std::move(per_obs);
  return rep;
}

std::vector<std::uint8_t> h_mask(std::span<const int> T) {
  std::vector<std::uint8_t> h(T.size());
  std::transform(T.begin(), T.end(), h.begin(), [](int x) { return x > 0 ? 1 : 0; });
  return h;
}

double rnd_train_step(RndNet& rnd, const EpisodeBatch& batch, const AdamOptions& opts) {
  const Tensor X = valid_observations(batch);
  rnd.predictor().zero_grad();
  const double loss = rnd.predictor_gradient(X);
  adam_step(rnd.predictor(), opts);
  return loss;
}

}  // namespace manger
