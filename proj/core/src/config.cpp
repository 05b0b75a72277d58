#include "manger/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "manger/envs.hpp"

namespace manger {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::size_t line, std::string_view key, std::string_view value, const char* want) {
  throw ParseError(line, "malformed value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                             want + ")");
}

[[noreturn]] void out_of_range(std::size_t line, std::string_view key, std::string_view value, const char* range) {
  throw ParseError(line, std::string(key) + " = " + std::string(value) + " is out of range " + range);
}

template <class Int>
Int parse_int(std::string_view key, std::string_view v, std::size_t line) {
  Int out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec == std::errc::result_out_of_range) out_of_range(line, key, v, "(overflow)");
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(line, key, v, "an integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v, std::size_t line) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) bad_value(line, key, v, "a finite number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v, std::size_t line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(line, key, v, "true or false");
}

std::string fmt(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

struct Field {
  const char* key;
  std::function<void(TrainConfig&, std::string_view, std::size_t)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <class Int>
Field int_field(const char* key, Int TrainConfig::*member, Int lo) {
  return {key,
          [=](TrainConfig& c, std::string_view v, std::size_t line) {
            const Int x = parse_int<Int>(key, v, line);
            if (x < lo) out_of_range(line, key, v, (">= " + std::to_string(lo)).c_str());
            c.*member = x;
          },
          [=](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(const char* key, double TrainConfig::*member, double lo, double hi) {
  return {key,
          [=](TrainConfig& c, std::string_view v, std::size_t line) {
            const double x = parse_double(key, v, line);
            if (x < lo || x > hi) out_of_range(line, key, v, ("[" + fmt(lo) + ", " + fmt(hi) + "]").c_str());
            c.*member = x;
          },
          [=](const TrainConfig& c) { return fmt(c.*member); }};
}

Field bool_field(const char* key, bool TrainConfig::*member) {
  return {key, [=](TrainConfig& c, std::string_view v, std::size_t line) { c.*member = parse_bool(key, v, line); },
          [=](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
  constexpr double inf = HUGE_VAL;
  static const std::vector<Field> table = {
      {"algo",
       [](TrainConfig& c, std::string_view v, std::size_t line) {
         try {
           c.algo = parse_algo(v);
         } catch (const std::invalid_argument&) {
           bad_value(line, "algo", v, "qmix, qmix_sep, qmix_sep_fixed or manger");
         }
       },
       [](const TrainConfig& c) { return std::string(algo_name(c.algo)); }},
      {"env",
       [](TrainConfig& c, std::string_view v, std::size_t line) {
         const auto names = env_names();
         if (std::find(names.begin(), names.end(), v) == names.end())
           bad_value(line, "env", v, "symmetry_break, role_grid or novelty_chain");
         c.env = std::string(v);
       },
       [](const TrainConfig& c) { return c.env; }},
      int_field<std::uint64_t>("seed", &TrainConfig::seed, 0),
      real_field("lr", &TrainConfig::lr, 0.0, inf),
      real_field("lr_rnd", &TrainConfig::lr_rnd, 0.0, inf),
      int_field<std::size_t>("batch_size", &TrainConfig::batch_size, 1),
      int_field<std::size_t>("batch_size_run", &TrainConfig::batch_size_run, 1),
      int_field<std::size_t>("buffer_size", &TrainConfig::buffer_size, 1),
      int_field<std::size_t>("mixing_embed_dim", &TrainConfig::mixing_embed_dim, 1),
      real_field("gamma", &TrainConfig::gamma, 0.0, 1.0),
      int_field<std::uint64_t>("total_steps", &TrainConfig::total_steps, 1),
      int_field<std::size_t>("m_target", &TrainConfig::m_target, 1),
      int_field<std::size_t>("m_rnd", &TrainConfig::m_rnd, 1),
      real_field("anneal_steps", &TrainConfig::anneal_steps, 0.0, inf),
      real_field("eps_start", &TrainConfig::eps_start, 0.0, 1.0),
      real_field("eps_finish", &TrainConfig::eps_finish, 0.0, 1.0),
      real_field("td_lambda", &TrainConfig::td_lambda, 0.0, 1.0),
      real_field("alpha", &TrainConfig::alpha, 0.0, inf),
      int_field<int>("beta", &TrainConfig::beta, 0),
      real_field("lambda", &TrainConfig::lambda, 0.0, inf),
      int_field<std::size_t>("hidden", &TrainConfig::hidden, 1),
      int_field<std::size_t>("rnd_dim", &TrainConfig::rnd_dim, 1),
      bool_field("obs_agent_id", &TrainConfig::obs_agent_id),
      int_field<std::uint64_t>("eval_every", &TrainConfig::eval_every, 1),
      int_field<std::size_t>("eval_episodes", &TrainConfig::eval_episodes, 1),
      int_field<int>("fixed_extra", &TrainConfig::fixed_extra, 0),
      {"outdir",
       [](TrainConfig& c, std::string_view v, std::size_t line) {
         if (v.empty()) bad_value(line, "outdir", v, "a path");
         c.outdir = std::string(v);
       },
       [](const TrainConfig& c) { return c.outdir; }},
      int_field<std::size_t>("global_passes", &TrainConfig::global_passes, 1),
      int_field<std::size_t>("hypernet_embed", &TrainConfig::hypernet_embed, 1),
      int_field<std::size_t>("rollout_threads", &TrainConfig::rollout_threads, 1),
      bool_field("record_timing", &TrainConfig::record_timing),
  };
  return table;
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& message)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

std::string_view algo_name(Algo algo) {
  switch (algo) {
    case Algo::qmix: return "qmix";
    case Algo::qmix_sep: return "qmix_sep";
    case Algo::qmix_sep_fixed: return "qmix_sep_fixed";
    case Algo::manger: return "manger";
  }
  return "?";
}

Algo parse_algo(std::string_view name) {
  for (Algo a : {Algo::qmix, Algo::qmix_sep, Algo::qmix_sep_fixed, Algo::manger})
    if (algo_name(a) == name) return a;
  throw std::invalid_argument("unknown algo '" + std::string(name) + "'");
}

void apply_config_value(TrainConfig& cfg, std::string_view key, std::string_view value, std::size_t line) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(cfg, value, line);
      return;
    }
  }
  throw ParseError(line, "unknown key '" + std::string(key) + "'");
}

void validate_config(const TrainConfig& cfg) {
  if (cfg.eps_finish > cfg.eps_start) throw ParseError(0, "eps_finish must not exceed eps_start");
  if (cfg.buffer_size < cfg.batch_size) throw ParseError(0, "buffer_size must be at least batch_size");
}

TrainConfig parse_config_text(std::string_view text) {
  TrainConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "missing key");
    apply_config_value(cfg, key, value, line_no);
  }
  validate_config(cfg);
  return cfg;
}

TrainConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_echo(const TrainConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.emplace_back(f.key);
  return keys;
}

}  // namespace manger
