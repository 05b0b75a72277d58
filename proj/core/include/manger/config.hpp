#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace manger {

enum class Algo { qmix, qmix_sep, qmix_sep_fixed, manger };

std::string_view algo_name(Algo algo);
Algo parse_algo(std::string_view name);

/// Full run configuration. Hidden sizes, evaluation cadence, fixed_extra and
/// the last block of fields are local defaults.
struct TrainConfig {
  Algo algo = Algo::manger;
  std::string env = "role_grid";
  std::uint64_t seed = 1;

  double lr = 1e-3;
  double lr_rnd = 1e-3;
  std::size_t batch_size = 128;
  std::size_t batch_size_run = 8;
  std::size_t buffer_size = 5000;
  std::size_t mixing_embed_dim = 32;
  double gamma = 0.99;
  std::uint64_t total_steps = 4000000;  // environment steps
  std::size_t m_target = 200;           // training steps between hard target syncs
  std::size_t m_rnd = 2;                // training steps between RND predictor updates
  double anneal_steps = 100000;         // environment steps
  double eps_start = 1.0;
  double eps_finish = 0.05;
  double td_lambda = 0.6;
  double alpha = 1.0;
  int beta = 3;
  double lambda = 0.5;
  std::size_t hidden = 64;
  std::size_t rnd_dim = 32;
  bool obs_agent_id = false;
  std::uint64_t eval_every = 10000;  // environment steps
  std::size_t eval_episodes = 32;
  int fixed_extra = 2;
  std::string outdir = "runs/default";

  std::size_t global_passes = 2;
  std::size_t hypernet_embed = 64;
  std::size_t rollout_threads = 1;
  bool record_timing = true;
};

/// Parse failure; `line()` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// `key = value` lines; `#` starts a comment. Unset keys keep their defaults.
TrainConfig parse_config_text(std::string_view text);
TrainConfig parse_config(const std::filesystem::path& path);

/// Applies one override; throws ParseError(line) on unknown key or bad value.
void apply_config_value(TrainConfig& cfg, std::string_view key, std::string_view value, std::size_t line = 0);

/// Checks cross-field ranges; throws ParseError(0).
void validate_config(const TrainConfig& cfg);

/// Every key with its resolved value, one per line, in a form parse_config
/// reads back to an identical config.
std::string config_echo(const TrainConfig& cfg);

std::vector<std::string> config_keys();

}  // namespace manger
