#pragma once

#include <string>
#include <vector>

#include "manger/episode.hpp"
#include "manger/ops.hpp"
#include "manger/param_store.hpp"
#include "manger/tensor.hpp"

namespace mtest {

using manger::Tensor;

/// y = W x + b with explicit loops over every index.
Tensor naive_affine(const Tensor& x, const Tensor& W, const Tensor& b);

/// GRU cell evaluated one hidden unit at a time with scalar math.
Tensor naive_gru(const Tensor& x, const Tensor& h, const manger::GruWeights& w);

/// Episodes from uniformly random joint actions.
std::vector<manger::Episode> random_episodes(const std::string& env, std::size_t count, std::uint64_t seed);

manger::EpisodeBatch batch_of(const std::vector<manger::Episode>& episodes, double pad_value = 0.0);

/// Novelty-budget rule written straight from its definition, with long
/// double accumulators and a two-pass variance.
std::vector<int> brute_force_budget(const std::vector<double>& values, const std::vector<unsigned char>& valid,
                                    std::size_t n_agents, double alpha, int beta);

/// Central differences of `loss` with respect to every entry of `store`,
/// in store order.
template <class LossFn>
std::vector<double> finite_differences(manger::ParamStore& store, LossFn&& loss, double h) {
  std::vector<double> out;
  for (auto& p : store) {
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double keep = p.value[k];
      p.value[k] = keep + h;
      const double up = loss();
      p.value[k] = keep - h;
      const double down = loss();
      p.value[k] = keep;
      out.push_back((up - down) / (2.0 * h));
    }
  }
  return out;
}

std::vector<double> flat_grads(const manger::ParamStore& store);

}  // namespace mtest
