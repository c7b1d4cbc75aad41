#include "whitebench/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "whitebench/errors.hpp"

namespace wb {

PlotSpec PlotSpec::from_config(ConfigFile& c) {
  PlotSpec s;
  s.x = c.get_or("plot", "x", s.x);
  s.y = c.get_or("plot", "y", s.y);
  s.group = c.get_or("plot", "group", s.group);
  s.log_x = c.get_bool("plot", "log_x", s.log_x);
  s.log_y = c.get_bool("plot", "log_y", s.log_y);
  const std::string rows = c.get_or("plot", "rows", "terminal");
  if (rows != "terminal" && rows != "all") throw ConfigError("[plot] rows must be terminal or all");
  s.terminal_only = rows == "terminal";
  s.title = c.get_or("plot", "title", "");
  s.width = static_cast<int>(c.get_long("plot", "width", s.width));
  s.height = static_cast<int>(c.get_long("plot", "height", s.height));
  if (s.width < 200 || s.height < 150) throw ConfigError("[plot] width/height too small");
  c.reject_unknown();
  return s;
}

PlotSpec PlotSpec::from_file(const std::string& path) {
  ConfigFile c = ConfigFile::load(path);
  return from_config(c);
}

namespace {

using NumericGetter = std::function<double(const ResultRow&)>;

NumericGetter numeric_column(const std::string& name) {
  if (name == "seed") return [](const ResultRow& r) { return static_cast<double>(r.seed); };
  if (name == "dataset_size") return [](const ResultRow& r) { return static_cast<double>(r.dataset_size); };
  if (name == "step_or_time") return [](const ResultRow& r) { return r.step_or_time; };
  if (name == "train_loss") return [](const ResultRow& r) { return r.train_loss; };
  if (name == "val_loss") return [](const ResultRow& r) { return r.val_loss; };
  if (name == "test_loss") return [](const ResultRow& r) { return r.test_loss; };
  if (name == "test_error") return [](const ResultRow& r) { return r.test_error; };
  if (name == "steps_to_cutoff") {
    return [](const ResultRow& r) { return r.steps_to_cutoff >= 0 ? static_cast<double>(r.steps_to_cutoff) : NAN; };
  }
  const auto& cols = result_columns();
  if (std::find(cols.begin(), cols.end(), name) != cols.end()) {
    throw ConfigError("column \"" + name + "\" is not numeric");
  }
  throw ConfigError("no column named \"" + name + "\"");
}

std::function<std::string(const ResultRow&)> group_column(const std::string& name) {
  if (name == "experiment_id") return [](const ResultRow& r) { return r.experiment_id; };
  if (name == "whitening_mode") return [](const ResultRow& r) { return r.whitening_mode; };
  if (name == "optimizer") return [](const ResultRow& r) { return r.optimizer; };
  if (name == "stopping_reason") return [](const ResultRow& r) { return r.stopping_reason; };
  if (name == "none" || name.empty()) return [](const ResultRow&) { return std::string("all"); };
  const NumericGetter g = numeric_column(name);
  return [g](const ResultRow& r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", g(r));
    return std::string(buf);
  };
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
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
      default: out.push_back(c);
    }
  }
  return out;
}

struct Axis {
  bool log = false;
  double lo = 0.0;
  double hi = 1.0;
  double pixel_lo = 0.0;
  double pixel_hi = 1.0;

  double t(double v) const { return log ? std::log10(v) : v; }
  double map(double v) const {
    const double a = t(lo);
    const double b = t(hi);
    return pixel_lo + (t(v) - a) / (b - a) * (pixel_hi - pixel_lo);
  }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (int e = static_cast<int>(std::floor(std::log10(lo))); e <= static_cast<int>(std::ceil(std::log10(hi))); ++e) {
        const double v = std::pow(10.0, e);
        if (v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12)) out.push_back(v);
      }
      if (out.size() < 2) out = {lo, hi};
      return out;
    }
    const double span = hi - lo;
    const double raw = span / 5;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return out;
  }
};

void widen(Axis& a) {
  if (a.hi > a.lo) {
    if (!a.log) {
      const double pad = 0.05 * (a.hi - a.lo);
      a.lo -= pad;
      a.hi += pad;
    }
    return;
  }
  if (a.log) {
    a.lo /= 2;
    a.hi *= 2;
  } else {
    const double pad = a.lo == 0.0 ? 1.0 : 0.1 * std::abs(a.lo);
    a.lo -= pad;
    a.hi += pad;
  }
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::vector<PlotSeries> aggregate(const std::vector<ResultRow>& rows, const PlotSpec& spec) {
  const NumericGetter gx = numeric_column(spec.x);
  const NumericGetter gy = numeric_column(spec.y);
  const auto gg = group_column(spec.group);
  std::map<std::string, std::map<double, std::vector<double>>> buckets;
  for (const ResultRow& r : rows) {
    if (spec.terminal_only && !r.terminal()) continue;
    const double x = gx(r);
    const double y = gy(r);
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    if ((spec.log_x && x <= 0) || (spec.log_y && y <= 0)) continue;
    buckets[gg(r)][x].push_back(y);
  }
  std::vector<PlotSeries> out;
  for (const auto& [name, by_x] : buckets) {
    PlotSeries s{name, {}};
    for (const auto& [x, ys] : by_x) {
      PlotPoint p;
      p.x = x;
      p.count = static_cast<long>(ys.size());
      double sum = 0;
      for (double v : ys) sum += v;
      p.mean = sum / static_cast<double>(ys.size());
      if (ys.size() > 1) {
        double ss = 0;
        for (double v : ys) ss += (v - p.mean) * (v - p.mean);
        p.se = std::sqrt(ss / static_cast<double>(ys.size() - 1) / static_cast<double>(ys.size()));
      }
      s.points.push_back(p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string render_svg(const std::vector<PlotSeries>& series, const PlotSpec& spec) {
  const double left = 70;
  const double right = 170;
  const double top = spec.title.empty() ? 20 : 40;
  const double bottom = 50;
  Axis ax{spec.log_x, INFINITY, -INFINITY, left, spec.width - right};
  Axis ay{spec.log_y, INFINITY, -INFINITY, spec.height - bottom, top};
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      ax.lo = std::min(ax.lo, p.x);
      ax.hi = std::max(ax.hi, p.x);
      double lo = p.mean - 2 * p.se;
      const double hi = p.mean + 2 * p.se;
      if (spec.log_y && lo <= 0) lo = p.mean;
      ay.lo = std::min(ay.lo, lo);
      ay.hi = std::max(ay.hi, hi);
    }
  }
  const bool empty = !std::isfinite(ax.lo);
  if (empty) {
    ax.lo = spec.log_x ? 1 : 0;
    ax.hi = spec.log_x ? 10 : 1;
    ay.lo = spec.log_y ? 1 : 0;
    ay.hi = spec.log_y ? 10 : 1;
  }
  widen(ax);
  widen(ay);

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
    << "\" viewBox=\"0 0 " << spec.width << " " << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    o << "<text x=\"" << fmt((left + spec.width - right) / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(spec.title) << "</text>\n";
  }
  const double x0 = ax.pixel_lo;
  const double x1 = ax.pixel_hi;
  const double y0 = ay.pixel_lo;
  const double y1 = ay.pixel_hi;
  o << "<g stroke=\"#333\" fill=\"none\">\n";
  o << "<path d=\"M" << fmt(x0) << " " << fmt(y1) << " L" << fmt(x0) << " " << fmt(y0) << " L" << fmt(x1) << " "
    << fmt(y0) << "\"/>\n";
  o << "</g>\n";
  o << "<g class=\"ticks\">\n";
  for (double v : ax.ticks()) {
    const double px = ax.map(v);
    o << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(px) << "\" y2=\"" << fmt(y0 + 5)
      << "\" stroke=\"#333\"/>";
    o << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(y0 + 18) << "\" text-anchor=\"middle\">" << tick_label(v)
      << "</text>\n";
  }
  for (double v : ay.ticks()) {
    const double py = ay.map(v);
    o << "<line x1=\"" << fmt(x0 - 5) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(x0) << "\" y2=\"" << fmt(py)
      << "\" stroke=\"#333\"/>";
    o << "<text x=\"" << fmt(x0 - 8) << "\" y=\"" << fmt(py + 4) << "\" text-anchor=\"end\">" << tick_label(v)
      << "</text>\n";
  }
  o << "</g>\n";
  o << "<text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << fmt(spec.height - 12.0) << "\" text-anchor=\"middle\">"
    << escape(spec.x) << (spec.log_x ? " (log)" : "") << "</text>\n";
  o << "<text transform=\"translate(16 " << fmt((y0 + y1) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(spec.y) << (spec.log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const PlotSeries& s = series[i];
    const char* color = kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
    o << "<g class=\"series\" data-group=\"" << escape(s.name) << "\">\n";
    // Band: upper edge left to right, lower edge back.
    std::ostringstream band;
    bool any_se = false;
    for (const auto& p : s.points) {
      any_se = any_se || p.se > 0;
      band << (band.tellp() == 0 ? "M" : " L") << fmt(ax.map(p.x)) << " " << fmt(ay.map(p.mean + 2 * p.se));
    }
    for (auto it = s.points.rbegin(); it != s.points.rend(); ++it) {
      double lo = it->mean - 2 * it->se;
      if (spec.log_y && lo <= 0) lo = it->mean;
      band << " L" << fmt(ax.map(it->x)) << " " << fmt(ay.map(lo));
    }
    if (any_se) o << "<path d=\"" << band.str() << " Z\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t j = 0; j < s.points.size(); ++j) {
      if (j) o << ' ';
      o << fmt(ax.map(s.points[j].x)) << "," << fmt(ay.map(s.points[j].mean));
    }
    o << "\"/>\n";
    for (const auto& p : s.points) {
      o << "<circle cx=\"" << fmt(ax.map(p.x)) << "\" cy=\"" << fmt(ay.map(p.mean)) << "\" r=\"3\" fill=\"" << color
        << "\"/>\n";
    }
    o << "</g>\n";
  }

  o << "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
    const double ly = top + 10 + 20.0 * static_cast<double>(i);
    const double lx = spec.width - right + 20;
    o << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(lx + 24) << "\" y2=\"" << fmt(ly)
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
    o << "<text x=\"" << fmt(lx + 30) << "\" y=\"" << fmt(ly + 4) << "\">" << escape(series[i].name) << "</text>\n";
  }
  o << "</g>\n";
  if (empty) {
    o << "<text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << fmt((y0 + y1) / 2)
      << "\" text-anchor=\"middle\" fill=\"#888\">no data</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void emit_plot(const std::string& results_path, const PlotSpec& spec, const std::string& svg_path) {
  const std::vector<ResultRow> rows = read_results(results_path);
  const std::string svg = render_svg(aggregate(rows, spec), spec);
  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw InputError("cannot open " + svg_path + " for writing");
  out << svg;
  if (!out) throw InputError("failed writing " + svg_path);
}

}  // namespace wb
