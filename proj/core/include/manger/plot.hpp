#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "manger/metrics.hpp"

namespace manger {

class EmptyPlotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlotSeries {
  std::string label;
  std::vector<MetricsRow> rows;
};

struct PlotOptions {
  bool mean_overlay = false;  // adds one polyline per key averaging all series
  double width = 720;
  double height = 420;
};

/// Renders one polyline per (series, key) against env_steps as standalone SVG text.
std::string plot_curves(const std::vector<PlotSeries>& series, const std::vector<std::string>& keys,
                        const PlotOptions& options = {});

void plot_files(const std::vector<std::filesystem::path>& files, const std::vector<std::string>& keys,
                const std::filesystem::path& out, const PlotOptions& options = {});

}  // namespace manger
