#include "manger/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "manger/checkpoint.hpp"

namespace manger {

namespace {

struct Line {
  std::string label;
  MetricsColumn pts;
  bool mean = false;
};

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Pointwise mean over series, by row position, up to the shortest series.
MetricsColumn mean_of(const std::vector<MetricsColumn>& cols) {
  MetricsColumn out;
  std::size_t n = cols.front().y.size();
  for (const auto& c : cols) n = std::min(n, c.y.size());
  for (std::size_t k = 0; k < n; ++k) {
    double sx = 0.0, sy = 0.0;
    for (const auto& c : cols) {
      sx += c.x[k];
      sy += c.y[k];
    }
    out.x.push_back(sx / static_cast<double>(cols.size()));
    out.y.push_back(sy / static_cast<double>(cols.size()));
  }
  return out;
}

}  // namespace

std::string plot_curves(const std::vector<PlotSeries>& series, const std::vector<std::string>& keys,
                        const PlotOptions& opt) {
  if (series.empty()) throw EmptyPlotError("no metrics to plot");
  if (keys.empty()) throw std::invalid_argument("no metrics key given");

  std::vector<Line> lines;
  for (const auto& key : keys) {
    std::vector<MetricsColumn> cols;
    for (const auto& s : series) {
      cols.push_back(metrics_column(s.rows, key));
      const std::string label = keys.size() > 1 ? s.label + " " + key : s.label;
      if (!cols.back().y.empty()) lines.push_back({label, cols.back(), false});
    }
    if (opt.mean_overlay && series.size() > 1) {
      std::erase_if(cols, [](const MetricsColumn& c) { return c.y.empty(); });
      if (!cols.empty()) lines.push_back({"mean " + key, mean_of(cols), true});
    }
  }
  if (lines.empty()) throw EmptyPlotError("metrics contain no values for the requested key(s)");

  double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
  for (const auto& l : lines)
    for (std::size_t k = 0; k < l.pts.x.size(); ++k) {
      x0 = std::min(x0, l.pts.x[k]);
      x1 = std::max(x1, l.pts.x[k]);
      y0 = std::min(y0, l.pts.y[k]);
      y1 = std::max(y1, l.pts.y[k]);
    }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }

  const double W = opt.width, H = opt.height;
  const double left = 70, right = 170, top = 20, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\"" << num(H)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
    svg << "<text x=\"" << num(sx(fx)) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"middle\">" << num(fx)
        << "</text>\n";
    svg << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(fy) + 4) << "\" text-anchor=\"end\">" << num(fy)
        << "</text>\n";
  }
  std::string ylabel;
  for (const auto& k : keys) ylabel += (ylabel.empty() ? "" : ", ") + k;
  svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 10) << "\" text-anchor=\"middle\">env_steps</text>\n";
  svg << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(top + ph / 2) << ")\">" << escape(ylabel) << "</text>\n";

  std::size_t colour = 0;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const Line& l = lines[li];
    const std::string stroke = l.mean ? "black" : kPalette[colour++ % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << (l.mean ? "2.5" : "1.5")
        << "\" points=\"";
    for (std::size_t k = 0; k < l.pts.x.size(); ++k) svg << (k ? " " : "") << num(sx(l.pts.x[k])) << ',' << num(sy(l.pts.y[k]));
    svg << "\"/>\n";
    const double ly = top + 10 + 16 * static_cast<double>(li);
    svg << "<line x1=\"" << num(W - right + 10) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(W - right + 30)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << stroke << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << num(W - right + 36) << "\" y=\"" << num(ly + 4) << "\">" << escape(l.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void plot_files(const std::vector<std::filesystem::path>& files, const std::vector<std::string>& keys,
                const std::filesystem::path& out, const PlotOptions& options) {
  std::vector<PlotSeries> series;
  for (const auto& f : files) {
    // A run directory is labelled by its own name rather than "metrics.csv".
    const std::string label = f.filename() == "metrics.csv" && f.has_parent_path()
                                  ? f.parent_path().filename().string()
                                  : f.stem().string();
    series.push_back({label, read_metrics(f)});
  }
  write_file_atomic(out, plot_curves(series, keys, options));
}

}  // namespace manger
