// Copyright 2026 The etaopt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ETAOPT_COMPARE_HPP
#define ETAOPT_COMPARE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "etaopt/data.hpp"
#include "etaopt/errors.hpp"
#include "etaopt/harness.hpp"

namespace etaopt {

/// Columns of a metrics file that get compared and charted, in chart order.
inline const std::vector<std::string>& compared_metrics() {
  static const std::vector<std::string> m{"train_loss", "test_loss", "eta",
                                          "train_acc", "test_acc", "probe_evals_cumulative"};
  return m;
}

struct MetricsSeries {
  std::string name;
  std::filesystem::path source;
  std::vector<std::size_t> iters;
  /// metric -> one value per row (nullopt when the cell is empty)
  std::map<std::string, std::vector<std::optional<double>>> values;
};

inline MetricsSeries read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw AlignmentError("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kMetricsHeader) {
    throw AlignmentError(path.string() + ": not a metrics file (header mismatch)");
  }
  std::vector<std::string> cols;
  for (auto c : detail::split_commas(kMetricsHeader)) cols.emplace_back(c);

  MetricsSeries s;
  s.source = path;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    if (cells.size() != cols.size()) {
      throw AlignmentError(path.string() + ": line " + std::to_string(line_no) + " has " +
                           std::to_string(cells.size()) + " cells");
    }
    if (s.name.empty()) s.name = std::string(cells[0]);
    const auto iter = detail::parse_real(cells[2]);
    if (!iter) throw ParseError(line_no, "iter", std::string(cells[2]));
    s.iters.push_back(static_cast<std::size_t>(*iter));
    for (std::size_t c = 3; c < cols.size(); ++c) {
      if (cols[c] == "wall_ms") continue;
      std::optional<double> v;
      if (!cells[c].empty()) {
        // Diverged runs log their last loss as inf or nan.
        if (cells[c] == "inf") v = std::numeric_limits<double>::infinity();
        else if (cells[c] == "-inf") v = -std::numeric_limits<double>::infinity();
        else if (cells[c] == "nan" || cells[c] == "-nan") v = std::numeric_limits<double>::quiet_NaN();
        else v = detail::parse_real(cells[c]);
        if (!v) throw ParseError(line_no, cols[c], std::string(cells[c]));
      }
      s.values[cols[c]].push_back(v);
    }
  }
  if (s.name.empty()) s.name = path.stem().string();
  return s;
}

struct CompareResult {
  std::filesystem::path long_csv;
  std::vector<std::filesystem::path> charts;
  /// Metrics with at least one value, in chart order.
  std::vector<std::string> metrics;
  std::vector<MetricsSeries> series;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
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

/// Minimal line chart; log10 y-axis when every value is positive and the
/// range spans more than two decades.
inline void write_svg_chart(const std::filesystem::path& path, const std::string& metric,
                            const std::vector<MetricsSeries>& series) {
  constexpr double W = 720, H = 440, L = 80, R = 180, T = 40, B = 50;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  bool positive = true;
  for (const auto& s : series) {
    const auto& vals = s.values.at(metric);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (!vals[i] || !std::isfinite(*vals[i])) continue;
      xmin = std::min(xmin, static_cast<double>(s.iters[i]));
      xmax = std::max(xmax, static_cast<double>(s.iters[i]));
      ymin = std::min(ymin, *vals[i]);
      ymax = std::max(ymax, *vals[i]);
      positive = positive && *vals[i] > 0.0;
    }
  }
  const bool log_y = positive && ymax / ymin > 100.0;
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  double y0 = ty(ymin), y1 = ty(ymax);
  if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
  if (!(xmax > xmin)) { xmin -= 0.5; xmax += 0.5; }
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };

  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << svg_escape(metric) << (log_y ? " (log scale)" : "") << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fy = y0 + (y1 - y0) * k / 4.0;
    const double label = log_y ? std::pow(10.0, fy) : fy;
    const double yy = H - B - (fy - y0) / (y1 - y0) * (H - T - B);
    out << "<text x=\"" << L - 6 << "\" y=\"" << yy + 4 << "\" text-anchor=\"end\">"
        << format_real(std::round(label * 1e4) / 1e4) << "</text>\n";
    const double fx = xmin + (xmax - xmin) * k / 4.0;
    out << "<text x=\"" << px(fx) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
        << std::llround(fx) << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10
      << "\" text-anchor=\"middle\">iteration</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    std::ostringstream pts;
    const auto& vals = s.values.at(metric);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (!vals[i] || !std::isfinite(*vals[i]) || (log_y && *vals[i] <= 0.0)) continue;
      pts << px(static_cast<double>(s.iters[i])) << ',' << py(*vals[i]) << ' ';
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
        << pts.str() << "\"/>\n";
    const double ly = T + 18.0 * static_cast<double>(k);
    out << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\">" << svg_escape(s.name)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace detail

/// Aligns metrics files on their iteration column and writes
/// <out_dir>/comparison.csv (series,x,metric,value) plus one <metric>.svg per
/// metric present. A shorter run (for example one that diverged) may be a
/// prefix of a longer one; any other cadence difference is an error.
inline CompareResult compare_runs(const std::vector<std::filesystem::path>& paths,
                                  const std::filesystem::path& out_dir, bool charts = true) {
  if (paths.size() < 2) throw AlignmentError("compare needs at least 2 metrics files");
  CompareResult res;
  for (const auto& p : paths) res.series.push_back(read_metrics(p));

  std::map<std::string, int> seen;
  for (auto& s : res.series) {
    if (seen[s.name]++) s.name += "#" + std::to_string(seen[s.name]);
  }

  const auto longest = std::max_element(res.series.begin(), res.series.end(),
                                        [](const auto& a, const auto& b) { return a.iters.size() < b.iters.size(); });
  std::vector<std::string> offending;
  for (const auto& s : res.series) {
    if (!std::equal(s.iters.begin(), s.iters.end(), longest->iters.begin())) {
      offending.push_back(s.source.string());
    }
  }
  if (!offending.empty()) {
    std::string msg = "logging cadence mismatch against " + longest->source.string() + ":";
    for (const auto& o : offending) msg += " " + o;
    throw AlignmentError(msg);
  }

  for (const auto& m : compared_metrics()) {
    const bool present = std::any_of(res.series.begin(), res.series.end(), [&](const auto& s) {
      const auto& v = s.values.at(m);
      return std::any_of(v.begin(), v.end(), [](const auto& x) { return x.has_value(); });
    });
    if (present) res.metrics.push_back(m);
  }

  std::filesystem::create_directories(out_dir);
  res.long_csv = out_dir / "comparison.csv";
  std::ofstream out(res.long_csv);
  out << "series,x,metric,value\n";
  for (const auto& s : res.series) {
    for (const auto& m : res.metrics) {
      const auto& v = s.values.at(m);
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i]) out << s.name << ',' << s.iters[i] << ',' << m << ',' << detail::format_real(*v[i]) << '\n';
      }
    }
  }
  if (charts) {
    for (const auto& m : res.metrics) {
      res.charts.push_back(out_dir / (m + ".svg"));
      detail::write_svg_chart(res.charts.back(), m, res.series);
    }
  }
  return res;
}

}  // namespace etaopt

#endif  // ETAOPT_COMPARE_HPP
