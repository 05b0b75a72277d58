#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <ostream>

#include "manger/config.hpp"
#include "manger/diag.hpp"
#include "manger/envs.hpp"
#include "manger/plot.hpp"
#include "manger/trainer.hpp"

namespace manger::cli {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string outdir;
  bool quiet = false;
};

struct EvalArgs {
  std::string checkpoint;
  std::string env;
  std::size_t episodes = 32;
  std::uint64_t seed = 0;
};

struct DiagArgs {
  std::string checkpoint;
  std::string probes;
  std::string env;
  std::string out;
  std::size_t episodes = 32;
};

struct PlotArgs {
  std::vector<std::string> in;
  std::vector<std::string> keys;
  std::string out;
  bool mean = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig cfg = parse_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.outdir.empty()) cfg.outdir = a.outdir;
  validate_config(cfg);
  TrainHooks hooks;
  if (!a.quiet)
    hooks.on_row = [&out](const MetricsRow& r) {
      if (!r.eval_return) return;
      out << "step " << r.train_step << " env_steps " << r.env_steps << " eval_return " << fmt(*r.eval_return)
          << " eval_success " << fmt(*r.eval_success) << '\n';
    };
  const TrainResult res = train(cfg, hooks);
  out << "wrote " << (std::filesystem::path(cfg.outdir) / "metrics.csv").string() << " (" << res.rows.size()
      << " rows) and checkpoint.mngr\n";
  return kExitOk;
}

std::unique_ptr<Env> env_for(const Learner& L, const std::string& name) {
  auto env = make_env(name);
  const EnvSpec& s = env->spec();
  const auto& c = L.agent.config();
  if (c.n_agents != s.n_agents || c.n_actions != s.n_actions ||
      c.input_dim != agent_input_dim(s.obs_dim, s.n_agents, L.obs_agent_id))
    throw ShapeError("checkpoint networks do not match environment " + name);
  return env;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Learner L = load_learner(a.checkpoint);
  const auto env = env_for(L, a.env);
  RngStream rng(a.seed, kEvalStream);
  const EvalResult r = evaluate(L.agent, *env, a.episodes, rng, L.obs_agent_id);
  out << "mean_return: " << fmt(r.mean_return) << '\n';
  out << "success_rate: " << fmt(r.success_rate) << '\n';
  return kExitOk;
}

int cmd_diag(const DiagArgs& a, std::ostream& out, std::ostream& err) {
  const Learner L = load_learner(a.checkpoint);
  std::vector<std::vector<double>> probes;
  if (!a.probes.empty()) {
    probes = read_probes(a.probes);
  } else {
    const auto env = env_for(L, a.env);
    probes = collect_probes(*env, L.agent, a.episodes, 0, L.obs_agent_id);
  }
  const CosineReport rep = diag_cosine(L.agent, probes, L.obs_agent_id);
  if (rep.skipped) err << "warning: skipped " << rep.skipped << " probe(s) with a zero Q-vector\n";
  if (a.out.empty()) {
    write_matrix_csv(rep.matrix, out);
  } else {
    std::ostringstream csv;
    write_matrix_csv(rep.matrix, csv);
    write_file_atomic(a.out, csv.str());
  }
  return kExitOk;
}

int cmd_plot(const PlotArgs& a) {
  std::vector<std::filesystem::path> files(a.in.begin(), a.in.end());
  PlotOptions opt;
  opt.mean_overlay = a.mean;
  plot_files(files, a.keys, a.out, opt);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"MANGER / QMIX multi-agent training laboratory", "manger"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train on an environment and write metrics + checkpoint");
  train_cmd->add_option("--config", ta.config, "key = value config file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", ta.seed, "Override the config seed");
  train_cmd->add_option("--outdir", ta.outdir, "Override the output directory");
  train_cmd->add_flag("--quiet", ta.quiet, "Do not print evaluation lines");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  eval_cmd->add_option("--checkpoint", ea.checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--env", ea.env)->required()->check(CLI::IsMember(env_names()));
  eval_cmd->add_option("--episodes", ea.episodes)->required()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", ea.seed, "Seed for episode resets");

  DiagArgs da;
  auto* diag_cmd = app.add_subcommand("diag", "Pairwise cosine similarity of agents' Q-vectors, as CSV");
  diag_cmd->add_option("--checkpoint", da.checkpoint)->required()->check(CLI::ExistingFile);
  auto* probes_opt = diag_cmd->add_option("--probes", da.probes, "File of probe observations")->check(CLI::ExistingFile);
  auto* env_opt = diag_cmd->add_option("--env", da.env, "Collect probes from greedy rollouts instead")
                      ->check(CLI::IsMember(env_names()));
  probes_opt->excludes(env_opt);
  diag_cmd->add_option("--episodes", da.episodes, "Rollouts used with --env")->check(CLI::PositiveNumber);
  diag_cmd->add_option("--out", da.out, "Write the CSV here instead of standard output");

  PlotArgs pa;
  auto* plot_cmd = app.add_subcommand("plot", "Render metrics curves to SVG");
  plot_cmd->add_option("--in", pa.in, "metrics.csv files")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--key", pa.keys, "Column(s) to plot")->required();
  plot_cmd->add_option("--out", pa.out, "Output SVG")->required();
  plot_cmd->add_flag("--mean", pa.mean, "Overlay the mean across files");

  try {
    app.parse(argc, argv);
    if (diag_cmd->parsed() && da.probes.empty() && da.env.empty())
      throw CLI::RequiredError("diag needs --probes or --env");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(ta, out);
    if (eval_cmd->parsed()) return cmd_eval(ea, out);
    if (diag_cmd->parsed()) return cmd_diag(da, out, err);
    if (plot_cmd->parsed()) return cmd_plot(pa);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace manger::cli
