#include "manger/td_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "manger/action.hpp"
#include "manger/errors.hpp"
#include "manger/novelty.hpp"
#include "manger/rollout.hpp"

namespace manger {

SequenceLayout layout_by_length(std::span<const std::size_t> lengths) {
  SequenceLayout l;
  l.order.resize(lengths.size());
  std::iota(l.order.begin(), l.order.end(), std::size_t{0});
  std::stable_sort(l.order.begin(), l.order.end(), [&](std::size_t a, std::size_t b) { return lengths[a] > lengths[b]; });
  const std::size_t T = lengths.empty() ? 0 : lengths[l.order.front()];
  l.active.resize(T);
  for (std::size_t t = 0; t < T; ++t)
    l.active[t] = static_cast<std::size_t>(std::count_if(lengths.begin(), lengths.end(), [t](std::size_t L) { return L > t; }));
  return l;
}

std::vector<Tensor> gather_inputs(const EpisodeBatch& batch, const SequenceLayout& layout, bool obs_agent_id) {
  const std::size_t N = batch.n_agents, O = batch.obs_dim;
  const std::size_t D = agent_input_dim(O, N, obs_agent_id);
  std::vector<Tensor> inputs;
  inputs.reserve(layout.active.size());
  for (std::size_t t = 0; t < layout.active.size(); ++t) {
    const std::size_t k = layout.active[t];
    Tensor X({k * N, D});
    for (std::size_t rank = 0; rank < k; ++rank) {
      const std::size_t b = layout.order[rank];
      for (std::size_t i = 0; i < N; ++i) {
        auto dst = X.row(rank * N + i);
        const auto o = batch.obs_at(b, t, i);
        std::copy(o.begin(), o.end(), dst.begin());
        if (obs_agent_id) dst[O + i] = 1.0;
      }
    }
    inputs.push_back(std::move(X));
  }
  return inputs;
}

std::vector<double> td_lambda_targets(const EpisodeBatch& batch, const TargetSet& targets, double gamma,
                                      double td_lambda, bool obs_agent_id) {
  const std::size_t B = batch.batch, N = batch.n_agents, S = batch.state_dim;
  // Views each episode needs for bootstrapping: up to t+1 for every non-terminal step t.
  std::vector<std::size_t> need(B, 1);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < batch.lengths[b]; ++t)
      if (!batch.terminated[batch.step_index(b, t)]) need[b] = std::max(need[b], t + 2);

  const SequenceLayout layout = layout_by_length(need);
  const AgentNet::Unroll u = targets.agent.unroll(layout.active, gather_inputs(batch, layout, obs_agent_id));

  // Greedy joint action per (episode, view t >= 1), mixed by the target mixer.
  std::vector<std::pair<std::size_t, std::size_t>> cells;  // (b, t)
  for (std::size_t t = 1; t < layout.active.size(); ++t)
    for (std::size_t rank = 0; rank < layout.active[t]; ++rank) cells.emplace_back(layout.order[rank], t);
  std::vector<double> q_next(B * (batch.max_len + 1), 0.0);
  if (!cells.empty()) {
    std::vector<std::size_t> rank_of(B);
    for (std::size_t r = 0; r < B; ++r) rank_of[layout.order[r]] = r;
    Tensor q({cells.size(), N});
    Tensor s({cells.size(), S});
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto [b, t] = cells[c];
      const Tensor& qs = u.q_sum[t];
      for (std::size_t i = 0; i < N; ++i) {
        const auto row = qs.row(rank_of[b] * N + i);
        const std::size_t a = greedy_action(row, batch.avail_at(b, t, i));
        q.at(c, i) = row[a];
      }
      const auto st = batch.state_at(b, t);
      std::copy(st.begin(), st.end(), s.row(c).begin());
    }
    const Mixer::Rows mixed = targets.mixer.forward_rows(std::move(q), std::move(s));
    for (std::size_t c = 0; c < cells.size(); ++c) q_next[batch.view_index(cells[c].first, cells[c].second)] = mixed.q_tot[c];
  }

  std::vector<double> y(B * batch.max_len, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t L = batch.lengths[b];
    double G_next = 0.0;
    for (std::size_t t = L; t-- > 0;) {
      const std::size_t k = batch.step_index(b, t);
      double G;
      if (batch.terminated[k]) {
        G = batch.reward[k];
      } else {
        const double boot = q_next[batch.view_index(b, t + 1)];
        const double tail = t + 1 < L ? G_next : boot;
        G = batch.reward[k] + gamma * ((1.0 - td_lambda) * boot + td_lambda * tail);
      }
      y[k] = G;
      G_next = G;
    }
  }
  return y;
}

// ---- TdLoss ----------------------------------------------------------------

TdLoss::TdLoss(const EpisodeBatch& batch, std::span<const double> targets, bool obs_agent_id)
    : batch_(batch), layout_(layout_by_length(batch.lengths)) {
  if (targets.size() != batch.batch * batch.max_len) throw DimensionError("TdLoss: target vector length mismatch");
  for (std::size_t t = 0; t < layout_.active.size(); ++t)
    for (std::size_t rank = 0; rank < layout_.active[t]; ++rank) {
      cell_t_.push_back(t);
      cell_rank_.push_back(rank);
      y_.push_back(targets[batch.step_index(layout_.order[rank], t)]);
    }
  if (cell_t_.empty()) throw ContractError("TdLoss: batch has no valid steps");
  cell_state_ = Tensor({cell_t_.size(), batch.state_dim});
  for (std::size_t c = 0; c < cell_t_.size(); ++c) {
    const auto st = batch.state_at(layout_.order[cell_rank_[c]], cell_t_[c]);
    std::copy(st.begin(), st.end(), cell_state_.row(c).begin());
  }
  unroll_.input = gather_inputs(batch, layout_, obs_agent_id);
}

double TdLoss::forward(const AgentNet& agent, const Mixer& mixer) {
  // Inputs are reused across passes; unroll consumes its arguments.
  std::vector<Tensor> inputs = have_forward_ ? unroll_.input : std::move(unroll_.input);
  unroll_ = agent.unroll(layout_.active, std::move(inputs));
  have_forward_ = true;
  return mix_and_score(agent, mixer);
}

double TdLoss::forward_heads(const AgentNet& agent, const Mixer& mixer) {
  if (!have_forward_) return forward(agent, mixer);
  agent.refresh_heads(unroll_);
  return mix_and_score(agent, mixer);
}

double TdLoss::mix_and_score(const AgentNet&, const Mixer& mixer) {
  const std::size_t N = batch_.n_agents, M = cell_t_.size();
  Tensor q({M, N});
  for (std::size_t c = 0; c < M; ++c) {
    const std::size_t t = cell_t_[c], rank = cell_rank_[c], b = layout_.order[rank];
    const Tensor& qs = unroll_.q_sum[t];
    for (std::size_t i = 0; i < N; ++i) q.at(c, i) = qs.at(rank * N + i, batch_.action_at(b, t, i));
  }
  mix_ = mixer.forward_rows(std::move(q), cell_state_);
  double sum = 0.0;
  for (std::size_t c = 0; c < M; ++c) {
    const double d = mix_.q_tot[c] - y_[c];
    sum += d * d;
  }
  loss_ = sum / static_cast<double>(M);
  return loss_;
}

void TdLoss::backward(AgentNet& agent, Mixer& mixer, AgentNet::GradScope scope, std::span<const std::uint8_t> head_mask) {
  if (!have_forward_) throw ContractError("TdLoss::backward before forward");
  const std::size_t N = batch_.n_agents, A = batch_.n_actions, M = cell_t_.size();
  std::vector<double> dq_tot(M);
  for (std::size_t c = 0; c < M; ++c) dq_tot[c] = 2.0 * (mix_.q_tot[c] - y_[c]) / static_cast<double>(M);
  const Tensor dq = mixer.backward_rows(mix_, dq_tot);

  std::vector<Tensor> dq_sum;
  dq_sum.reserve(unroll_.steps());
  for (std::size_t t = 0; t < unroll_.steps(); ++t) dq_sum.emplace_back(Shape{layout_.active[t] * N, A});
  for (std::size_t c = 0; c < M; ++c) {
    const std::size_t t = cell_t_[c], rank = cell_rank_[c], b = layout_.order[rank];
    for (std::size_t i = 0; i < N; ++i) dq_sum[t].at(rank * N + i, batch_.action_at(b, t, i)) += dq.at(c, i);
  }
  agent.backward(unroll_, dq_sum, scope, head_mask);
}

void require_finite_loss(double loss, const EpisodeBatch& batch, std::span<const double> targets, const char* phase) {
  if (std::isfinite(loss)) return;
  double rmin = INFINITY, rmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (std::size_t k = 0; k < batch.filled.size(); ++k) {
    if (!batch.filled[k]) continue;
    rmin = std::min(rmin, batch.reward[k]);
    rmax = std::max(rmax, batch.reward[k]);
    ymin = std::min(ymin, targets[k]);
    ymax = std::max(ymax, targets[k]);
  }
  std::ostringstream os;
  os << phase << ": loss is not finite (" << loss << "); batch=" << batch.batch << " max_len=" << batch.max_len
     << " valid_steps=" << batch.valid_steps() << " reward=[" << rmin << ", " << rmax << "] target=[" << ymin
     << ", " << ymax << "]";
  throw NumericError(os.str());
}

double global_update(const EpisodeBatch& batch, std::span<const double> targets, AgentNet& agent, Mixer& mixer,
                     const AdamOptions& opts, bool obs_agent_id, std::size_t passes) {
  if (passes == 0) throw ContractError("global_update: passes must be positive");
  TdLoss td(batch, targets, obs_agent_id);
  double first = 0.0;
  for (std::size_t p = 0; p < passes; ++p) {
    const double loss = td.forward(agent, mixer);
    require_finite_loss(loss, batch, targets, "global_update");
    if (p == 0) first = loss;
    agent.params().zero_grad();
    mixer.params().zero_grad();
    td.backward(agent, mixer, AgentNet::GradScope::full);
    adam_step(agent.params(), opts);
    adam_step(mixer.params(), opts);
  }
  return first;
}

ExtraPhaseResult extra_update_phase(const EpisodeBatch& batch, std::span<const double> targets, AgentNet& agent,
                                    Mixer& mixer, std::vector<int> budget, const AdamOptions& opts,
                                    bool obs_agent_id, const ExtraIterationHook& hook) {
  const std::size_t N = agent.config().n_agents;
  if (budget.size() != N) throw DimensionError("extra_update_phase: budget length mismatch");
  ExtraPhaseResult res;
  res.applications.assign(N, 0);
  if (std::none_of(budget.begin(), budget.end(), [](int x) { return x > 0; })) return res;

  TdLoss td(batch, targets, obs_agent_id);
  while (std::any_of(budget.begin(), budget.end(), [](int x) { return x > 0; })) {
    const double loss = res.iterations == 0 ? td.forward(agent, mixer) : td.forward_heads(agent, mixer);
    require_finite_loss(loss, batch, targets, "extra_update_phase");
    res.losses.push_back(loss);
    const auto mask = h_mask(budget);
    agent.params().zero_grad();
    mixer.params().zero_grad();
    td.backward(agent, mixer, AgentNet::GradScope::heads_only, mask);
    std::vector<std::size_t> heads;
    for (std::size_t i = 0; i < N; ++i) {
      if (!mask[i]) continue;
      for (std::size_t idx : agent.head_indices(i)) heads.push_back(idx);
      ++res.applications[i];
    }
    adam_step(mixer.params(), opts);
    adam_step(agent.params(), opts, heads);
    agent.params().zero_grad();
    if (hook) hook(res.iterations, mask);
    ++res.iterations;
    for (int& x : budget) --x;
  }
  return res;
}

}  // namespace manger
