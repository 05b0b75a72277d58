#include "helpers.hpp"

#include <cmath>

#include "manger/envs.hpp"
#include "manger/rollout.hpp"

namespace mtest {

using namespace manger;

Tensor naive_affine(const Tensor& x, const Tensor& W, const Tensor& b) {
  const std::size_t out = W.dim(0), in = W.dim(1);
  Tensor y({out});
  for (std::size_t i = 0; i < out; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < in; ++j) s += W.at(i, j) * x[j];
    y[i] = s + b[i];
  }
  return y;
}

Tensor naive_gru(const Tensor& x, const Tensor& h, const GruWeights& w) {
  const std::size_t H = h.size(), I = x.size();
  auto dot = [](const Tensor& M, std::size_t row, const Tensor& v, std::size_t n) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += M.at(row, j) * v[j];
    return s;
  };
  Tensor out({H});
  for (std::size_t k = 0; k < H; ++k) {
    const double r = 1.0 / (1.0 + std::exp(-(dot(w.w_r, k, x, I) + dot(w.u_r, k, h, H) + w.b_r[k])));
    const double z = 1.0 / (1.0 + std::exp(-(dot(w.w_z, k, x, I) + dot(w.u_z, k, h, H) + w.b_z[k])));
    const double n = std::tanh(dot(w.w_n, k, x, I) + r * (dot(w.u_n, k, h, H) + w.b_n[k]));
    out[k] = (1.0 - z) * n + z * h[k];
  }
  return out;
}

std::vector<Episode> random_episodes(const std::string& env_name, std::size_t count, std::uint64_t seed) {
  auto env = make_env(env_name);
  const EnvSpec spec = env->spec();
  RngStream rng(seed, 77);
  std::vector<Episode> out;
  for (std::size_t e = 0; e < count; ++e) {
    const std::uint64_t s = rng.next_u64();
    Episode ep = Episode::begin(spec, s);
    EnvView view = env->reset(s);
    for (std::size_t t = 0; t < spec.horizon; ++t) {
      ep.push_view(view);
      std::vector<std::size_t> joint(spec.n_agents);
      for (std::size_t i = 0; i < spec.n_agents; ++i) {
        const auto avail = view.agent_avail(i, spec.n_actions);
        do joint[i] = rng.below(spec.n_actions);
        while (!avail[joint[i]]);
      }
      StepOutcome o = env->step(joint);
      ep.push_step(joint, o.reward, o.terminated);
      ep.success = ep.success || o.success;
      view = std::move(o.view);
      if (o.terminated) break;
    }
    ep.push_view(view);
    out.push_back(std::move(ep));
  }
  return out;
}

EpisodeBatch batch_of(const std::vector<Episode>& episodes, double pad_value) {
  std::vector<const Episode*> ptrs;
  for (const auto& e : episodes) ptrs.push_back(&e);
  return make_batch(ptrs, pad_value);
}

std::vector<int> brute_force_budget(const std::vector<double>& values, const std::vector<unsigned char>& valid,
                                    std::size_t n_agents, double alpha, int beta) {
  long double total = 0.0L;
  std::size_t cells = 0;
  std::vector<long double> agent_sum(n_agents, 0.0L);
  std::vector<std::size_t> agent_cells(n_agents, 0);
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!valid[k]) continue;
    total += values[k];
    ++cells;
    agent_sum[k % n_agents] += values[k];
    ++agent_cells[k % n_agents];
  }
  const long double mean = total / cells;
  long double ss = 0.0L;
  for (std::size_t k = 0; k < values.size(); ++k)
    if (valid[k]) ss += (values[k] - mean) * (values[k] - mean);
  const long double sd = std::sqrt(ss / cells);
  std::vector<int> T(n_agents, 0);
  if (sd < 1e-8L) return T;
  for (std::size_t i = 0; i < n_agents; ++i) {
    if (agent_cells[i] == 0) continue;
    const long double Ni = agent_sum[i] / agent_cells[i];
    const long double raw = std::floor(alpha * (Ni - mean) / sd);
    T[i] = static_cast<int>(raw < 0 ? 0 : (raw > beta ? beta : raw));
  }
  return T;
}

std::vector<double> flat_grads(const ParamStore& store) {
  std::vector<double> g;
  for (const auto& p : store)
    for (double v : p.grad.data()) g.push_back(v);
  return g;
}

}  // namespace mtest
