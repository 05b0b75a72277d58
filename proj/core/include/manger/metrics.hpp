#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace manger {

/// One record per training step. Evaluation fields are empty between
/// evaluations; wall_ms_per_step is empty when timing is disabled.
struct MetricsRow {
  std::size_t train_step = 0;
  std::size_t env_steps = 0;
  std::size_t episodes = 0;
  double epsilon = 0.0;
  double loss = 0.0;
  std::optional<double> rnd_loss;
  double mean_train_return = 0.0;
  std::optional<double> eval_return;
  std::optional<double> eval_success;
  std::vector<double> mean_novelty;  // per agent
  double mean_extra_updates = 0.0;
  std::optional<double> q_cosine_mean;
  std::optional<double> wall_ms_per_step;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Column names in file order.
const std::vector<std::string>& metrics_columns();
std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);
MetricsRow parse_metrics_row(const std::string& line);

void write_metrics_header(std::ostream& out);
void write_metrics(const MetricsRow& row, std::ostream& out);
std::vector<MetricsRow> read_metrics(std::istream& in);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

/// Named numeric column of a parsed table. Empty cells are absent; the
/// per-agent novelty column is reduced to its mean.
struct MetricsColumn {
  std::vector<double> x;  // env_steps
  std::vector<double> y;
};
MetricsColumn metrics_column(const std::vector<MetricsRow>& rows, const std::string& key);

}  // namespace manger
