#include <benchmark/benchmark.h>

#include "manger/config.hpp"
#include "manger/envs.hpp"
#include "manger/novelty.hpp"
#include "manger/rollout.hpp"
#include "manger/td_loss.hpp"
#include "manger/trainer.hpp"

namespace {

using namespace manger;

std::vector<Episode> random_episodes(const std::string& env_name, std::size_t count, std::uint64_t seed) {
  auto env = make_env(env_name);
  TrainConfig cfg;
  RngStream init(seed, kInitStream);
  Learner L = make_learner(env->spec(), cfg, init);
  RngStream rng(seed, 0);
  std::vector<Episode> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(run_episode(*env, L.agent, 1.0, rng, false, false));
  return out;
}

EpisodeBatch batch_of(const std::vector<Episode>& eps) {
  std::vector<const Episode*> ptrs;
  for (const auto& e : eps) ptrs.push_back(&e);
  return make_batch(ptrs);
}

void BM_AgentUnroll(benchmark::State& state) {
  const auto eps = random_episodes("role_grid", static_cast<std::size_t>(state.range(0)), 1);
  const EpisodeBatch batch = batch_of(eps);
  TrainConfig cfg;
  RngStream init(1, kInitStream);
  const Learner L = make_learner(make_env("role_grid")->spec(), cfg, init);
  const SequenceLayout layout = layout_by_length(batch.lengths);
  for (auto _ : state) {
    auto u = L.agent.unroll(layout.active, gather_inputs(batch, layout, false));
    benchmark::DoNotOptimize(u.q_sum.back().raw());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.valid_steps()));
}
BENCHMARK(BM_AgentUnroll)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_NoveltyScore(benchmark::State& state) {
  const auto eps = random_episodes("novelty_chain", 32, 2);
  const EpisodeBatch batch = batch_of(eps);
  RngStream rng(2, 9);
  const RndNet rnd(RndConfig{10, 32}, rng);
  for (auto _ : state) {
    auto rep = extra_updates(score_batch(batch, rnd), 1.0, 3);
    benchmark::DoNotOptimize(rep.extra.data());
  }
}
BENCHMARK(BM_NoveltyScore)->Unit(benchmark::kMicrosecond);

// One full training step on a fixed RoleGrid batch; arg 0 = qmix, 1 = manger.
void BM_TrainStep(benchmark::State& state) {
  const auto eps = random_episodes("role_grid", 32, 3);
  const EpisodeBatch batch = batch_of(eps);
  TrainConfig cfg;
  cfg.algo = state.range(0) ? Algo::manger : Algo::qmix;
  cfg.alpha = 2.0;
  RngStream init(3, kInitStream);
  Learner L = make_learner(make_env("role_grid")->spec(), cfg, init);
  std::size_t step = 0;
  for (auto _ : state) {
    auto st = train_on_batch(L, batch, cfg, ++step);
    benchmark::DoNotOptimize(st.loss);
  }
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
