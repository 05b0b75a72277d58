#include "manger/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace manger {

namespace {

std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string fmt_opt(const std::optional<double>& x) { return x ? fmt9(*x) : std::string(); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& s, const char* column) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw FormatError(std::string("bad value '") + s + "' in " + column);
  return v;
}

std::size_t to_count(const std::string& s, const char* column) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw FormatError(std::string("bad value '") + s + "' in " + column);
  return v;
}

std::optional<double> to_opt(const std::string& s, const char* column) {
  if (s.empty()) return std::nullopt;
  return to_double(s, column);
}

}  // namespace

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "train_step",  "env_steps",    "episodes",     "epsilon",       "loss",
      "rnd_loss",    "mean_train_return", "eval_return", "eval_success", "mean_novelty",
      "mean_extra_updates", "q_cosine_mean", "wall_ms_per_step"};
  return cols;
}

std::string metrics_header() {
  std::string h;
  for (const auto& c : metrics_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

std::string format_metrics_row(const MetricsRow& r) {
  std::string nov;
  for (std::size_t i = 0; i < r.mean_novelty.size(); ++i) nov += (i ? ";" : "") + fmt9(r.mean_novelty[i]);
  const std::string cells[] = {std::to_string(r.train_step), std::to_string(r.env_steps), std::to_string(r.episodes),
                               fmt9(r.epsilon),     fmt9(r.loss),          fmt_opt(r.rnd_loss),
                               fmt9(r.mean_train_return), fmt_opt(r.eval_return), fmt_opt(r.eval_success),
                               nov,                 fmt9(r.mean_extra_updates), fmt_opt(r.q_cosine_mean),
                               fmt_opt(r.wall_ms_per_step)};
  std::string line;
  for (std::size_t i = 0; i < std::size(cells); ++i) line += (i ? "," : "") + cells[i];
  return line;
}

MetricsRow parse_metrics_row(const std::string& line) {
  const auto c = split(line, ',');
  if (c.size() != metrics_columns().size())
    throw FormatError("expected " + std::to_string(metrics_columns().size()) + " columns, found " +
                      std::to_string(c.size()));
  MetricsRow r;
  r.train_step = to_count(c[0], "train_step");
  r.env_steps = to_count(c[1], "env_steps");
  r.episodes = to_count(c[2], "episodes");
  r.epsilon = to_double(c[3], "epsilon");
  r.loss = to_double(c[4], "loss");
  r.rnd_loss = to_opt(c[5], "rnd_loss");
  r.mean_train_return = to_double(c[6], "mean_train_return");
  r.eval_return = to_opt(c[7], "eval_return");
  r.eval_success = to_opt(c[8], "eval_success");
  if (!c[9].empty())
    for (const auto& v : split(c[9], ';')) r.mean_novelty.push_back(to_double(v, "mean_novelty"));
  r.mean_extra_updates = to_double(c[10], "mean_extra_updates");
  r.q_cosine_mean = to_opt(c[11], "q_cosine_mean");
  r.wall_ms_per_step = to_opt(c[12], "wall_ms_per_step");
  return r;
}

void write_metrics_header(std::ostream& out) { out << metrics_header() << '\n'; }

void write_metrics(const MetricsRow& row, std::ostream& out) { out << format_metrics_row(row) << '\n'; }

std::vector<MetricsRow> read_metrics(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("metrics file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != metrics_header()) throw FormatError("metrics header mismatch: '" + line + "'");
  std::vector<MetricsRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      rows.push_back(parse_metrics_row(line));
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file " + path.string());
  return read_metrics(in);
}

MetricsColumn metrics_column(const std::vector<MetricsRow>& rows, const std::string& key) {
  const auto& cols = metrics_columns();
  if (std::find(cols.begin(), cols.end(), key) == cols.end()) {
    std::string avail;
    for (const auto& c : cols) avail += (avail.empty() ? "" : ", ") + c;
    throw std::invalid_argument("unknown metrics column '" + key + "'; available: " + avail);
  }
  MetricsColumn out;
  for (const MetricsRow& r : rows) {
    std::optional<double> y;
    if (key == "train_step") y = static_cast<double>(r.train_step);
    else if (key == "env_steps") y = static_cast<double>(r.env_steps);
    else if (key == "episodes") y = static_cast<double>(r.episodes);
    else if (key == "epsilon") y = r.epsilon;
    else if (key == "loss") y = r.loss;
    else if (key == "rnd_loss") y = r.rnd_loss;
    else if (key == "mean_train_return") y = r.mean_train_return;
    else if (key == "eval_return") y = r.eval_return;
    else if (key == "eval_success") y = r.eval_success;
    else if (key == "mean_novelty") {
      if (!r.mean_novelty.empty())
        y = std::accumulate(r.mean_novelty.begin(), r.mean_novelty.end(), 0.0) /
            static_cast<double>(r.mean_novelty.size());
    } else if (key == "mean_extra_updates") y = r.mean_extra_updates;
    else if (key == "q_cosine_mean") y = r.q_cosine_mean;
    else if (key == "wall_ms_per_step") y = r.wall_ms_per_step;
    if (!y) continue;
    out.x.push_back(static_cast<double>(r.env_steps));
    out.y.push_back(*y);
  }
  return out;
}

}  // namespace manger
