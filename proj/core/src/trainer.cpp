#include "manger/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <set>

#include "manger/diag.hpp"
#include "manger/errors.hpp"
#include "manger/novelty.hpp"
#include "manger/td_loss.hpp"

namespace manger {

namespace {

bool uses_sep_heads(Algo a) { return a != Algo::qmix; }

const Tensor& entry_value(const std::vector<NamedTensor>& entries, const std::string& name) {
  const NamedTensor* e = find_entry(entries, name);
  if (!e) throw ShapeError("checkpoint has no tensor " + name);
  return e->value;
}

std::size_t dim_of(const std::vector<NamedTensor>& entries, const std::string& name, std::size_t axis) {
  const Tensor& t = entry_value(entries, name);
  if (axis >= t.rank()) throw ShapeError("unexpected rank for " + name);
  return t.dim(axis);
}

}  // namespace

Learner make_learner(const EnvSpec& spec, const TrainConfig& cfg, RngStream& rng) {
  AgentNetConfig ac;
  ac.input_dim = agent_input_dim(spec.obs_dim, spec.n_agents, cfg.obs_agent_id);
  ac.hidden = cfg.hidden;
  ac.n_actions = spec.n_actions;
  ac.n_agents = spec.n_agents;
  ac.lambda = uses_sep_heads(cfg.algo) ? cfg.lambda : 0.0;
  AgentNet agent(ac, rng);
  Mixer mixer(MixerConfig{spec.n_agents, spec.state_dim, cfg.mixing_embed_dim, cfg.hypernet_embed}, rng);
  RndNet rnd(RndConfig{spec.obs_dim, cfg.rnd_dim}, rng);
  TargetSet targets = make_targets(agent, mixer);
  return Learner{std::move(agent), std::move(mixer), std::move(rnd), std::move(targets), cfg.obs_agent_id};
}

BatchStats train_on_batch(Learner& L, const EpisodeBatch& batch, const TrainConfig& cfg, std::size_t step) {
  const std::size_t N = L.agent.config().n_agents;
  const bool id = L.obs_agent_id;
  BatchStats st;

  const std::vector<double> y = td_lambda_targets(batch, L.targets, cfg.gamma, cfg.td_lambda, id);

  st.extra.assign(N, 0);
  if (cfg.algo == Algo::manger) {
    const NoveltyReport rep = extra_updates(score_batch(batch, L.rnd), cfg.alpha, cfg.beta);
    st.novelty = rep.agent_mean;
    st.extra = rep.extra;
  } else if (cfg.algo == Algo::qmix_sep_fixed) {
    st.extra.assign(N, cfg.fixed_extra);
  }

  const AdamOptions opts{cfg.lr};
  st.loss = global_update(batch, y, L.agent, L.mixer, opts, id, cfg.global_passes);
  const ExtraPhaseResult ex = extra_update_phase(batch, y, L.agent, L.mixer, st.extra, opts, id);
  st.applications = ex.applications;
  st.mean_extra = std::accumulate(st.extra.begin(), st.extra.end(), 0.0) / static_cast<double>(N);

  if (cfg.algo == Algo::manger && step % cfg.m_rnd == 0) st.rnd_loss = rnd_train_step(L.rnd, batch, AdamOptions{cfg.lr_rnd});
  return st;
}

EvalResult evaluate_policy(Env& env, Policy& policy, std::size_t episodes, RngStream& rng) {
  if (episodes == 0) throw ContractError("evaluate: episodes must be >= 1");
  const EnvSpec spec = env.spec();
  EvalResult res;
  std::set<std::vector<double>> seen;
  double ret = 0.0, succ = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    const Episode ep = run_policy_episode(env, policy, rng.next_u64());
    ret += ep.total_reward();
    succ += ep.success ? 1.0 : 0.0;
    for (std::size_t k = 0; k < (ep.length + 1) * spec.n_agents; ++k) {
      const auto* p = ep.obs.data() + k * spec.obs_dim;
      std::vector<double> o(p, p + spec.obs_dim);
      if (seen.insert(o).second) res.observations.push_back(std::move(o));
    }
  }
  res.mean_return = ret / static_cast<double>(episodes);
  res.success_rate = succ / static_cast<double>(episodes);
  return res;
}

EvalResult evaluate(const AgentNet& net, Env& env, std::size_t episodes, RngStream& rng, bool obs_agent_id) {
  NetPolicy policy(net, env.spec(), obs_agent_id, 0.0, nullptr);
  return evaluate_policy(env, policy, episodes, rng);
}

TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks) {
  validate_config(cfg);
  namespace fs = std::filesystem;
  using Clock = std::chrono::steady_clock;

  const fs::path outdir = cfg.outdir;
  fs::create_directories(outdir);
  write_file_atomic(outdir / "config.txt", config_echo(cfg));

  const std::unique_ptr<Env> proto = make_env(cfg.env);
  const EnvSpec spec = proto->spec();
  RngStream init_rng(cfg.seed, kInitStream);
  RngStream sample_rng(cfg.seed, kSampleStream);
  RngStream eval_rng(cfg.seed, kEvalStream);
  Learner L = make_learner(spec, cfg, init_rng);

  std::vector<std::unique_ptr<Env>> envs;
  std::vector<RngStream> streams;
  for (std::size_t k = 0; k < cfg.batch_size_run; ++k) {
    envs.push_back(proto->clone());
    streams.emplace_back(cfg.seed, k);
  }
  const std::unique_ptr<Env> eval_env = proto->clone();
  const EpsSchedule sched{cfg.eps_start, cfg.eps_finish, cfg.anneal_steps};

  const fs::path metrics_path = outdir / "metrics.csv";
  fs::path metrics_tmp = metrics_path;
  metrics_tmp += ".tmp";
  std::ofstream csv(metrics_tmp, std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + metrics_tmp.string());
  write_metrics_header(csv);

  ReplayBuffer replay(cfg.buffer_size);
  TrainResult result;
  std::size_t env_steps = 0, episodes = 0, train_step = 0;
  std::uint64_t next_eval = cfg.eval_every;

  while (env_steps < cfg.total_steps) {
    const auto t0 = Clock::now();
    const double eps = epsilon_at(static_cast<double>(env_steps), sched);
    std::vector<Episode> fresh;
    try {
      fresh = collect_interval(envs, L.agent, eps, streams, L.obs_agent_id, cfg.rollout_threads);
    } catch (const std::exception& e) {
      throw std::runtime_error("collect at env_steps " + std::to_string(env_steps) + ": " + e.what());
    }
    double ret = 0.0;
    for (Episode& ep : fresh) {
      env_steps += ep.length;
      ++episodes;
      ret += ep.total_reward();
      if (hooks.on_episode) hooks.on_episode(ep);
    }
    const double mean_ret = ret / static_cast<double>(fresh.size());
    for (const Episode& ep : fresh) replay.insert(ep);
    result.last_interval = std::move(fresh);

    auto batch = sample(replay, cfg.batch_size, sample_rng);
    if (!batch) continue;

    ++train_step;
    BatchStats st;
    try {
      st = train_on_batch(L, *batch, cfg, train_step);
      if (train_step % cfg.m_target == 0) sync_targets(L.agent, L.mixer, L.targets, SyncMode::hard());
    } catch (const std::exception& e) {
      throw std::runtime_error("train_step " + std::to_string(train_step) + " (env_steps " +
                               std::to_string(env_steps) + "): " + e.what());
    }
    const auto t1 = Clock::now();

    MetricsRow row;
    row.train_step = train_step;
    row.env_steps = env_steps;
    row.episodes = episodes;
    row.epsilon = eps;
    row.loss = st.loss;
    row.rnd_loss = st.rnd_loss;
    row.mean_train_return = mean_ret;
    row.mean_novelty = st.novelty;
    row.mean_extra_updates = st.mean_extra;
    if (cfg.record_timing) row.wall_ms_per_step = std::chrono::duration<double, std::milli>(t1 - t0).count();

    if (env_steps >= next_eval || env_steps >= cfg.total_steps) {
      while (next_eval <= env_steps) next_eval += cfg.eval_every;
      const EvalResult ev = evaluate(L.agent, *eval_env, cfg.eval_episodes, eval_rng, L.obs_agent_id);
      row.eval_return = ev.mean_return;
      row.eval_success = ev.success_rate;
      try {
        row.q_cosine_mean = off_diagonal_mean(diag_cosine(L.agent, ev.observations, L.obs_agent_id).matrix);
      } catch (const NumericError&) {
        // every probe gave a zero Q-vector; leave the column empty
      }
    }

    write_metrics(row, csv);
    csv.flush();
    if (hooks.on_row) hooks.on_row(row);
    result.rows.push_back(std::move(row));
  }

  csv.close();
  fs::rename(metrics_tmp, metrics_path);
  save_learner(L, outdir / "checkpoint.mngr");
  result.env_steps = env_steps;
  result.episodes = episodes;
  result.learner = std::move(L);
  return result;
}

// ---- checkpoints -------------------------------------------------------------

std::vector<NamedTensor> learner_entries(const Learner& L) {
  std::vector<NamedTensor> out;
  append_store(out, "agent.", L.agent.params());
  append_store(out, "mixer.", L.mixer.params());
  append_store(out, "rnd.target.", L.rnd.target());
  append_store(out, "rnd.predictor.", L.rnd.predictor());
  append_store(out, "target.agent.", L.targets.agent.params());
  append_store(out, "target.mixer.", L.targets.mixer.params());
  out.push_back({"meta.lambda", Tensor::vector({L.agent.lambda()})});
  out.push_back({"meta.obs_agent_id", Tensor::vector({L.obs_agent_id ? 1.0 : 0.0})});
  return out;
}

void save_learner(const Learner& learner, const std::filesystem::path& path) {
  save_checkpoint(learner_entries(learner), path);
}

void restore_learner(const std::vector<NamedTensor>& entries, Learner& learner) {
  Learner next = learner;
  restore_store(entries, "agent.", next.agent.params());
  restore_store(entries, "mixer.", next.mixer.params());
  restore_store(entries, "rnd.target.", next.rnd.mutable_target());
  restore_store(entries, "rnd.predictor.", next.rnd.predictor());
  restore_store(entries, "target.agent.", next.targets.agent.params());
  restore_store(entries, "target.mixer.", next.targets.mixer.params());
  const double lambda = entry_value(entries, "meta.lambda")[0];
  next.agent.set_lambda(lambda);
  next.targets.agent.set_lambda(lambda);
  next.obs_agent_id = entry_value(entries, "meta.obs_agent_id")[0] != 0.0;
  learner = std::move(next);
}

Learner learner_from_entries(const std::vector<NamedTensor>& entries) {
  AgentNetConfig ac;
  ac.hidden = dim_of(entries, "agent.fc1.weight", 0);
  ac.input_dim = dim_of(entries, "agent.fc1.weight", 1);
  ac.n_actions = dim_of(entries, "agent.fc2_com.weight", 0);
  while (find_entry(entries, "agent.sep." + std::to_string(ac.n_agents) + ".weight")) ++ac.n_agents;
  ac.lambda = entry_value(entries, "meta.lambda")[0];
  MixerConfig mc;
  mc.n_agents = ac.n_agents;
  mc.state_dim = dim_of(entries, "mixer.hyper_b1.weight", 1);
  mc.embed_dim = dim_of(entries, "mixer.hyper_b1.weight", 0);
  mc.hypernet_embed = dim_of(entries, "mixer.hyper_w1.0.weight", 0);
  RndConfig rc;
  rc.embed_dim = dim_of(entries, "rnd.target.0.weight", 0);
  rc.obs_dim = dim_of(entries, "rnd.target.0.weight", 1);
  if (ac.n_agents == 0) throw ShapeError("checkpoint has no tensor agent.sep.0.weight");

  AgentNet agent(ac);
  Mixer mixer(mc);
  Learner L{agent, mixer, RndNet(rc), make_targets(agent, mixer), false};
  restore_learner(entries, L);
  return L;
}

Learner load_learner(const std::filesystem::path& path) { return learner_from_entries(load_checkpoint(path)); }

}  // namespace manger
