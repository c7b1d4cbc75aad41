#pragma once
// Static SVG line charts from result CSVs: one polyline per group, mean over
// seeds at each x, and a band of +-2 standard errors.

#include <string>
#include <vector>

#include "whitebench/harness/config.hpp"
#include "whitebench/harness/experiment.hpp"

namespace wb {

struct PlotSpec {
  std::string x = "dataset_size";
  std::string y = "test_loss";
  std::string group = "whitening_mode";
  bool log_x = true;
  bool log_y = false;
  bool terminal_only = true;  // skip per-step trajectory rows
  std::string title;
  int width = 640;
  int height = 420;

  /// [plot] section: x, y, group, log_x, log_y, rows = terminal|all, title,
  /// width, height.
  static PlotSpec from_config(ConfigFile& cfg);
  static PlotSpec from_file(const std::string& path);
};

struct PlotPoint {
  double x = 0.0;
  double mean = 0.0;
  double se = 0.0;  // 0 for a single sample
  long count = 0;
};

struct PlotSeries {
  std::string name;
  std::vector<PlotPoint> points;  // ascending x
};

/// Throws ConfigError for unknown or non-numeric columns. Rows whose x or y
/// is missing, or non-positive on a log axis, are skipped.
std::vector<PlotSeries> aggregate(const std::vector<ResultRow>& rows, const PlotSpec& spec);

std::string render_svg(const std::vector<PlotSeries>& series, const PlotSpec& spec);

void emit_plot(const std::string& results_path, const PlotSpec& spec, const std::string& svg_path);

}  // namespace wb
