#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "manger/errors.hpp"
#include "manger/oracle.hpp"
#include "manger/td_loss.hpp"
#include "manger/trainer.hpp"
#include "reference_qmix.hpp"

using namespace manger;

namespace {

struct Nets {
  AgentNet agent;
  Mixer mixer;
};

Nets nets_for(const EnvSpec& s, std::uint64_t seed, double lambda = 0.5, std::size_t hidden = 8) {
  RngStream rng(seed, 3);
  AgentNet agent({s.obs_dim, hidden, s.n_actions, s.n_agents, lambda}, rng);
  Mixer mixer({s.n_agents, s.state_dim, 4, 6}, rng);
  return {std::move(agent), std::move(mixer)};
}

// Chain episode that walks right to completion: 9 steps, reward 1 at the end.
Episode chain_success() {
  NoveltyChain env;
  PlanPolicy plan(std::vector<std::vector<std::size_t>>(9, {1, 1}));
  return run_policy_episode(env, plan, 0);
}

// Q'(t) for every view t of episode 0, evaluated step by step.
std::vector<double> target_values(const EpisodeBatch& b, const TargetSet& tg) {
  const std::size_t N = b.n_agents, L = b.lengths[0];
  std::vector<Tensor> h(N, tg.agent.initial_hidden());
  std::vector<double> out;
  for (std::size_t t = 0; t <= L; ++t) {
    std::vector<double> q(N);
    for (std::size_t i = 0; i < N; ++i) {
      auto o = tg.agent.forward(Tensor::vector(b.obs_at(0, t, i)), h[i], i);
      h[i] = o.h_next;
      const auto av = b.avail_at(0, t, i);
      double best = -INFINITY;
      for (std::size_t a = 0; a < b.n_actions; ++a)
        if (av[a]) best = std::max(best, o.q_sum[a]);
      q[i] = best;
    }
    out.push_back(tg.mixer.forward(q, b.state_at(0, t)));
  }
  return out;
}

TrainConfig small_cfg(Algo algo, const std::string& env) {
  TrainConfig c;
  c.algo = algo;
  c.env = env;
  c.hidden = 8;
  c.mixing_embed_dim = 4;
  c.hypernet_embed = 6;
  c.rnd_dim = 8;
  c.batch_size = 4;
  c.batch_size_run = 2;
  c.buffer_size = 16;
  c.lr = 5e-3;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---- targets ------------------------------------------------------------------------------

TEST(TdTargets, FullLambdaUndiscountedIsReturnToGo) {
  const Episode ep = chain_success();
  ASSERT_EQ(ep.length, 9u);
  const auto b = mtest::batch_of({ep});
  const Nets n = nets_for(NoveltyChain().spec(), 1);
  const auto y = td_lambda_targets(b, make_targets(n.agent, n.mixer), 1.0, 1.0, false);
  for (std::size_t t = 0; t < 9; ++t) EXPECT_DOUBLE_EQ(y[t], 1.0);
}

TEST(TdTargets, ZeroLambdaIsOneStepBootstrap) {
  const auto eps = mtest::random_episodes("role_grid", 1, 4);
  const auto b = mtest::batch_of(eps);
  const Nets n = nets_for(RoleGrid().spec(), 2);
  const TargetSet tg = make_targets(n.agent, n.mixer);
  const auto y = td_lambda_targets(b, tg, 0.9, 0.0, false);
  const auto q = target_values(b, tg);
  const std::size_t L = b.lengths[0];
  for (std::size_t t = 0; t < L; ++t) {
    const double want = b.terminated[t] ? b.reward[t] : b.reward[t] + 0.9 * q[t + 1];
    EXPECT_NEAR(y[t], want, 1e-12) << "t=" << t;
  }
}

TEST(TdTargets, MixedLambdaRecursion) {
  const auto eps = mtest::random_episodes("novelty_chain", 1, 8);
  auto b = mtest::batch_of(eps);
  const Nets n = nets_for(NoveltyChain().spec(), 3);
  const TargetSet tg = make_targets(n.agent, n.mixer);
  const double g = 0.95, l = 0.6;
  const auto y = td_lambda_targets(b, tg, g, l, false);
  const auto q = target_values(b, tg);
  const std::size_t L = b.lengths[0];
  double G = 0.0;
  for (std::size_t t = L; t-- > 0;) {
    if (b.terminated[t]) G = b.reward[t];
    else if (t + 1 == L) G = b.reward[t] + g * q[t + 1];
    else G = b.reward[t] + g * ((1 - l) * q[t + 1] + l * G);
    EXPECT_NEAR(y[t], G, 1e-12) << "t=" << t;
  }
}

TEST(TdTargets, TerminalStepIsReward) {
  const auto eps = mtest::random_episodes("symmetry_break", 3, 1);
  const auto b = mtest::batch_of(eps);
  const Nets n = nets_for(SymmetryBreak().spec(), 4);
  const auto y = td_lambda_targets(b, make_targets(n.agent, n.mixer), 0.99, 0.6, false);
  for (std::size_t e = 0; e < 3; ++e) EXPECT_EQ(y[b.step_index(e, 0)], b.reward[b.step_index(e, 0)]);
}

TEST(TdTargets, TruncatedLastStepBootstraps) {
  auto eps = mtest::random_episodes("novelty_chain", 1, 8);
  const std::size_t L = eps[0].length;
  eps[0].terminated[L - 1] = 0;  // pretend the horizon cut the episode short
  const auto b = mtest::batch_of(eps);
  const Nets n = nets_for(NoveltyChain().spec(), 5);
  const TargetSet tg = make_targets(n.agent, n.mixer);
  const auto y = td_lambda_targets(b, tg, 0.9, 0.6, false);
  EXPECT_NEAR(y[L - 1], b.reward[L - 1] + 0.9 * target_values(b, tg)[L], 1e-12);
}

TEST(TdTargets, NanPaddingStaysOutOfLoss) {
  const auto eps = mtest::random_episodes("role_grid", 5, 6);
  const auto b = mtest::batch_of(eps, std::nan(""));
  Nets n = nets_for(RoleGrid().spec(), 6);
  const auto y = td_lambda_targets(b, make_targets(n.agent, n.mixer), 0.99, 0.6, false);
  for (std::size_t e = 0; e < b.batch; ++e)
    for (std::size_t t = 0; t < eps[e].length; ++t) EXPECT_TRUE(std::isfinite(y[b.step_index(e, t)]));
  TdLoss loss(b, y, false);
  EXPECT_TRUE(std::isfinite(loss.forward(n.agent, n.mixer)));
  EXPECT_EQ(loss.cells(), b.valid_steps());
}

// ---- global update -------------------------------------------------------------------------

TEST(GlobalUpdate, TargetsEqualToPredictionGiveZeroGradient) {
  const auto eps = mtest::random_episodes("role_grid", 3, 2);
  const auto b = mtest::batch_of(eps);
  Nets n = nets_for(RoleGrid().spec(), 7);
  std::vector<double> y(b.batch * b.max_len, 0.0);
  TdLoss probe(b, y, false);
  probe.forward(n.agent, n.mixer);
  // q_tot is in (t, rank) order; scatter it back to (episode, t).
  const auto layout = layout_by_length(b.lengths);
  std::size_t c = 0;
  for (std::size_t t = 0; t < b.max_len; ++t)
    for (std::size_t r = 0; r < layout.active[t]; ++r) y[b.step_index(layout.order[r], t)] = probe.q_tot()[c++];
  TdLoss loss(b, y, false);
  EXPECT_EQ(loss.forward(n.agent, n.mixer), 0.0);
  n.agent.params().zero_grad();
  n.mixer.params().zero_grad();
  loss.backward(n.agent, n.mixer, AgentNet::GradScope::full);
  for (double g : mtest::flat_grads(n.agent.params())) EXPECT_EQ(g, 0.0);
  for (double g : mtest::flat_grads(n.mixer.params())) EXPECT_EQ(g, 0.0);
}

TEST(GlobalUpdate, ZeroLearningRateLeavesParameters) {
  const auto b = mtest::batch_of(mtest::random_episodes("role_grid", 3, 3));
  Nets n = nets_for(RoleGrid().spec(), 8);
  const auto y = td_lambda_targets(b, make_targets(n.agent, n.mixer), 0.99, 0.6, false);
  const Nets before = n;
  global_update(b, y, n.agent, n.mixer, AdamOptions{0.0}, false, 2);
  EXPECT_TRUE(n.agent.params().values_identical(before.agent.params()));
  EXPECT_TRUE(n.mixer.params().values_identical(before.mixer.params()));
}

TEST(GlobalUpdate, GradientMatchesFiniteDifferences) {
  const auto b = mtest::batch_of(mtest::random_episodes("role_grid", 2, 5));
  Nets n = nets_for(RoleGrid().spec(), 9, 0.5, 4);
  const auto y = td_lambda_targets(b, make_targets(n.agent, n.mixer), 0.99, 0.6, false);
  TdLoss loss(b, y, false);
  loss.forward(n.agent, n.mixer);
  n.agent.params().zero_grad();
  n.mixer.params().zero_grad();
  loss.backward(n.agent, n.mixer, AgentNet::GradScope::full);
  auto eval = [&] {
    TdLoss l(b, y, false);
    return l.forward(n.agent, n.mixer);
  };
  for (ParamStore* store : {&n.agent.params(), &n.mixer.params()}) {
    const auto analytic = mtest::flat_grads(*store);
    const auto numeric = mtest::finite_differences(*store, eval, 1e-6);
    for (std::size_t k = 0; k < analytic.size(); ++k)
      EXPECT_NEAR(analytic[k], numeric[k], 1e-6 + 1e-5 * std::abs(numeric[k])) << k;
  }
}

TEST(GlobalUpdate, LossFallsOnFixedTargets) {
  const auto b = mtest::batch_of(mtest::random_episodes("role_grid", 4, 1));
  Nets n = nets_for(RoleGrid().spec(), 10);
  const auto y = td_lambda_targets(b, make_targets(n.agent, n.mixer), 0.99, 0.6, false);
  const double first = global_update(b, y, n.agent, n.mixer, AdamOptions{1e-2}, false, 2);
  double last = first;
  for (int k = 0; k < 30; ++k) last = global_update(b, y, n.agent, n.mixer, AdamOptions{1e-2}, false, 2);
  EXPECT_LT(last, first);
}

// ---- extra phase ---------------------------------------------------------------------------

namespace {

struct PhaseRun {
  ExtraPhaseResult result;
  std::vector<std::vector<std::uint8_t>> masks;
  Nets before, after;
};

PhaseRun run_phase(std::vector<int> budget) {
  const auto b = mtest::batch_of(mtest::random_episodes("novelty_chain", 3, 2));
  Nets n = nets_for(NoveltyChain().spec(), 11);
  const auto y = td_lambda_targets(b, make_targets(n.agent, n.mixer), 0.99, 0.6, false);
  PhaseRun run{{}, {}, n, n};
  run.result = extra_update_phase(b, y, run.after.agent, run.after.mixer, std::move(budget), AdamOptions{1e-2}, false,
                                  [&](std::size_t, std::span<const std::uint8_t> m) {
                                    run.masks.emplace_back(m.begin(), m.end());
                                  });
  return run;
}

bool same_values(const ParamStore& a, const ParamStore& b, const std::vector<std::size_t>& idx) {
  for (std::size_t i : idx)
    if (!std::equal(a[i].value.data().begin(), a[i].value.data().end(), b[i].value.data().begin())) return false;
  return true;
}

}  // namespace

TEST(ExtraPhase, ZeroBudgetDoesNothing) {
  const PhaseRun r = run_phase({0, 0});
  EXPECT_EQ(r.result.iterations, 0u);
  EXPECT_TRUE(r.masks.empty());
  EXPECT_TRUE(r.after.agent.params().values_identical(r.before.agent.params()));
  EXPECT_TRUE(r.after.mixer.params().values_identical(r.before.mixer.params()));
}

TEST(ExtraPhase, SingleAgentBudget) {
  const PhaseRun r = run_phase({2, 0});
  EXPECT_EQ(r.result.iterations, 2u);
  EXPECT_EQ(r.result.applications, (std::vector<std::size_t>{2, 0}));
  ASSERT_EQ(r.masks.size(), 2u);
  for (const auto& m : r.masks) EXPECT_EQ(m, (std::vector<std::uint8_t>{1, 0}));
  const auto& A = r.after.agent.params();
  const auto& B = r.before.agent.params();
  EXPECT_TRUE(same_values(A, B, r.before.agent.trunk_indices()));
  EXPECT_TRUE(same_values(A, B, r.before.agent.head_indices(1)));
  EXPECT_FALSE(same_values(A, B, r.before.agent.head_indices(0)));
  EXPECT_FALSE(r.after.mixer.params().values_identical(r.before.mixer.params()));
}

TEST(ExtraPhase, UnevenBudgetsShrinkTheMask) {
  const PhaseRun r = run_phase({3, 1});
  EXPECT_EQ(r.result.iterations, 3u);
  EXPECT_EQ(r.result.applications, (std::vector<std::size_t>{3, 1}));
  ASSERT_EQ(r.masks.size(), 3u);
  EXPECT_EQ(r.masks[0], (std::vector<std::uint8_t>{1, 1}));
  EXPECT_EQ(r.masks[1], (std::vector<std::uint8_t>{1, 0}));
  EXPECT_EQ(r.masks[2], (std::vector<std::uint8_t>{1, 0}));
  EXPECT_EQ(r.result.losses.size(), 3u);
  EXPECT_TRUE(same_values(r.after.agent.params(), r.before.agent.params(), r.before.agent.trunk_indices()));
}

// ---- reference learner ---------------------------------------------------------------------

TEST(Reference, BatchedQmixMatchesPerSampleLearner) {
  TrainConfig cfg = small_cfg(Algo::qmix, "role_grid");
  cfg.global_passes = 1;
  const EnvSpec spec = RoleGrid().spec();
  RngStream rng(cfg.seed, kInitStream);
  Learner L = make_learner(spec, cfg, rng);
  mtest::ReferenceQmix ref(L.agent, L.mixer, 0.0, false);
  for (std::size_t step = 1; step <= 5; ++step) {
    const auto b = mtest::batch_of(mtest::random_episodes("role_grid", 4, 100 + step));
    const BatchStats st = train_on_batch(L, b, cfg, step);
    const double ref_loss = ref.update(b, cfg.gamma, cfg.td_lambda, cfg.lr);
    EXPECT_NEAR(st.loss, ref_loss, 1e-12 * std::max(1.0, std::abs(ref_loss)));
  }
  for (const auto& p : L.agent.params())
    for (std::size_t k = 0; k < p.value.size(); ++k) EXPECT_NEAR(p.value[k], ref.live().at(p.name)[k], 1e-12) << p.name;
  for (const auto& p : L.mixer.params())
    for (std::size_t k = 0; k < p.value.size(); ++k)
      EXPECT_NEAR(p.value[k], ref.live().at("mixer." + p.name)[k], 1e-12) << p.name;
}

// ---- learner & batch step ------------------------------------------------------------------

TEST(Learner, QmixForcesLambdaZero) {
  RngStream rng(1, kInitStream);
  const Learner L = make_learner(RoleGrid().spec(), small_cfg(Algo::qmix, "role_grid"), rng);
  EXPECT_EQ(L.agent.lambda(), 0.0);
  RngStream rng2(1, kInitStream);
  EXPECT_EQ(make_learner(RoleGrid().spec(), small_cfg(Algo::manger, "role_grid"), rng2).agent.lambda(), 0.5);
}

TEST(TrainOnBatch, BudgetsPerAlgorithm) {
  const auto b = mtest::batch_of(mtest::random_episodes("role_grid", 4, 1));
  for (Algo a : {Algo::qmix, Algo::qmix_sep, Algo::qmix_sep_fixed, Algo::manger}) {
    TrainConfig cfg = small_cfg(a, "role_grid");
    RngStream rng(1, kInitStream);
    Learner L = make_learner(RoleGrid().spec(), cfg, rng);
    const BatchStats st = train_on_batch(L, b, cfg, 2);
    EXPECT_TRUE(std::isfinite(st.loss));
    ASSERT_EQ(st.extra.size(), 3u);
    if (a == Algo::qmix_sep_fixed) EXPECT_EQ(st.extra, (std::vector<int>{2, 2, 2}));
    if (a == Algo::qmix || a == Algo::qmix_sep) EXPECT_EQ(st.extra, (std::vector<int>{0, 0, 0}));
    if (a == Algo::manger) {
      EXPECT_EQ(st.novelty.size(), 3u);
      EXPECT_TRUE(st.rnd_loss.has_value());
      for (int e : st.extra) EXPECT_TRUE(e >= 0 && e <= cfg.beta);
    } else {
      EXPECT_TRUE(st.novelty.empty());
      EXPECT_FALSE(st.rnd_loss.has_value());
    }
  }
}

// ---- evaluation ----------------------------------------------------------------------------

TEST(Evaluate, OraclePlanSucceeds) {
  RoleGrid env;
  PlanPolicy plan(oracle_optimal(env).plan);
  RngStream rng(1, kEvalStream);
  const EvalResult r = evaluate_policy(env, plan, 4, rng);
  EXPECT_EQ(r.success_rate, 1.0);
  EXPECT_NEAR(r.mean_return, 9.95, 1e-12);
}

TEST(Evaluate, BoundsAndZeroEpisodes) {
  RoleGrid env;
  const Nets n = nets_for(env.spec(), 12);
  RngStream rng(1, kEvalStream);
  const EvalResult r = evaluate(n.agent, env, 3, rng, false);
  EXPECT_GE(r.success_rate, 0.0);
  EXPECT_LE(r.success_rate, 1.0);
  EXPECT_GE(r.mean_return, -0.5 - 1e-12);
  EXPECT_LE(r.mean_return, 10.0);
  EXPECT_FALSE(r.observations.empty());
  EXPECT_THROW(evaluate(n.agent, env, 0, rng, false), ContractError);
}

// ---- full run ------------------------------------------------------------------------------

TEST(Train, RepeatRunsAreIdentical) {
  const auto root = std::filesystem::temp_directory_path() / "manger_train_repeat";
  std::filesystem::remove_all(root);
  auto run = [&](const char* sub) {
    TrainConfig cfg = small_cfg(Algo::manger, "novelty_chain");
    cfg.total_steps = 600;
    cfg.eval_every = 200;
    cfg.eval_episodes = 2;
    cfg.anneal_steps = 300;
    cfg.m_target = 5;
    cfg.record_timing = false;
    cfg.outdir = (root / sub).string();
    const TrainResult r = train(cfg);
    EXPECT_GE(r.env_steps, 600u);
    EXPECT_FALSE(r.rows.empty());
    return std::make_pair(slurp(root / sub / "metrics.csv"), slurp(root / sub / "checkpoint.mngr"));
  };
  const auto a = run("a"), b = run("b");
  EXPECT_FALSE(a.first.empty());
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_TRUE(std::filesystem::exists(root / "a" / "config.txt"));
  EXPECT_FALSE(std::filesystem::exists(root / "a" / "metrics.csv.tmp"));
  std::filesystem::remove_all(root);
}

TEST(Train, CheckpointRestoresLearner) {
  const auto root = std::filesystem::temp_directory_path() / "manger_train_ckpt";
  std::filesystem::remove_all(root);
  TrainConfig cfg = small_cfg(Algo::qmix_sep, "symmetry_break");
  cfg.total_steps = 40;
  cfg.eval_every = 20;
  cfg.eval_episodes = 1;
  cfg.outdir = root.string();
  const TrainResult r = train(cfg);
  ASSERT_TRUE(r.learner);
  const Learner back = load_learner(root / "checkpoint.mngr");
  EXPECT_TRUE(back.agent.params().values_identical(r.learner->agent.params()));
  EXPECT_TRUE(back.mixer.params().values_identical(r.learner->mixer.params()));
  EXPECT_EQ(back.agent.lambda(), 0.5);
  std::filesystem::remove_all(root);
}
