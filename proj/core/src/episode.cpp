#include "manger/episode.hpp"

#include <algorithm>
#include <numeric>

#include "manger/errors.hpp"

namespace manger {

Episode Episode::begin(const EnvSpec& spec, std::uint64_t seed) {
  Episode e;
  e.n_agents = spec.n_agents;
  e.n_actions = spec.n_actions;
  e.obs_dim = spec.obs_dim;
  e.state_dim = spec.state_dim;
  e.seed = seed;
  return e;
}

void Episode::push_view(const EnvView& view) {
  if (view.obs.size() != n_agents * obs_dim || view.state.size() != state_dim ||
      view.avail.size() != n_agents * n_actions)
    throw EnvError("environment view does not match its spec");
  obs.insert(obs.end(), view.obs.begin(), view.obs.end());
  state.insert(state.end(), view.state.begin(), view.state.end());
  avail.insert(avail.end(), view.avail.begin(), view.avail.end());
}

void Episode::push_step(std::span<const std::size_t> joint_action, double r, bool term) {
  actions.insert(actions.end(), joint_action.begin(), joint_action.end());
  reward.push_back(r);
  terminated.push_back(term ? 1 : 0);
  ++length;
}

double Episode::total_reward() const { return std::accumulate(reward.begin(), reward.end(), 0.0); }

std::size_t EpisodeBatch::valid_steps() const {
  return static_cast<std::size_t>(std::count(filled.begin(), filled.end(), std::uint8_t{1}));
}

EpisodeBatch make_batch(std::span<const Episode* const> episodes, double pad_value) {
  if (episodes.empty()) throw ContractError("make_batch: no episodes");
  const Episode& first = *episodes.front();
  EpisodeBatch b;
  b.batch = episodes.size();
  b.n_agents = first.n_agents;
  b.n_actions = first.n_actions;
  b.obs_dim = first.obs_dim;
  b.state_dim = first.state_dim;
  for (const Episode* e : episodes) {
    if (e->n_agents != b.n_agents || e->obs_dim != b.obs_dim || e->state_dim != b.state_dim ||
        e->n_actions != b.n_actions)
      throw DimensionError("make_batch: episodes come from different environments");
    if (e->length == 0) throw ContractError("make_batch: empty episode");
    b.max_len = std::max(b.max_len, e->length);
  }
  const std::size_t B = b.batch, T = b.max_len, N = b.n_agents;
  const std::size_t O = b.obs_dim, S = b.state_dim, A = b.n_actions;
  b.lengths.resize(B);
  b.obs.assign(B * (T + 1) * N * O, pad_value);
  b.state.assign(B * (T + 1) * S, pad_value);
  b.avail.assign(B * (T + 1) * N * A, 0);
  b.actions.assign(B * T * N, 0);
  b.reward.assign(B * T, pad_value);
  b.terminated.assign(B * T, 0);
  b.filled.assign(B * T, 0);
  for (std::size_t i = 0; i < B; ++i) {
    const Episode& e = *episodes[i];
    const std::size_t L = e.length;
    b.lengths[i] = L;
    std::copy(e.obs.begin(), e.obs.end(), b.obs.begin() + i * (T + 1) * N * O);
    std::copy(e.state.begin(), e.state.end(), b.state.begin() + i * (T + 1) * S);
    std::copy(e.avail.begin(), e.avail.end(), b.avail.begin() + i * (T + 1) * N * A);
    std::copy(e.actions.begin(), e.actions.end(), b.actions.begin() + i * T * N);
    std::copy(e.reward.begin(), e.reward.end(), b.reward.begin() + i * T);
    std::copy(e.terminated.begin(), e.terminated.end(), b.terminated.begin() + i * T);
    std::fill_n(b.filled.begin() + i * T, L, std::uint8_t{1});
  }
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractError("replay capacity must be positive");
}

void ReplayBuffer::insert(Episode episode) {
  if (episodes_.size() == capacity_) episodes_.pop_front();
  episodes_.push_back(std::move(episode));
  ++inserted_;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, RngStream& rng) {
  if (k > n) throw ContractError("sample_indices: k > n");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

std::optional<EpisodeBatch> sample(const ReplayBuffer& replay, std::size_t batch_size, RngStream& rng) {
  if (batch_size == 0) throw ContractError("batch_size must be positive");
  if (!replay.ready(batch_size)) return std::nullopt;
  const auto idx = sample_indices(replay.size(), batch_size, rng);
  std::vector<const Episode*> picked;
  picked.reserve(idx.size());
  for (std::size_t i : idx) picked.push_back(&replay[i]);
  return make_batch(picked);
}

}  // namespace manger
