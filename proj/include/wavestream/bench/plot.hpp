// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "wavestream/costmodel/costmodel.hpp"

namespace wavestream::bench {

struct PlotSeries {
  std::string label;
  cost::Linear line;
  bool aggregate = false;
};

/// Aggregate X + Y per profile, plus X + Y of each layer.
inline std::vector<PlotSeries> matrix_size_series(const std::vector<cost::BlockCostProfile>& profiles) {
  std::vector<PlotSeries> out;
  for (const auto& p : profiles) {
    out.push_back({cost::block_kind_name(p.kind) + " aggregate", p.aggregate(), true});
    for (const auto& l : p.layers) out.push_back({l.name, l.cost.column_size + l.cost.filter_size, false});
  }
  return out;
}

/// Self-contained SVG line plot of matrix size against chunk size T. Each
/// polyline carries its exact integer values in a data-values attribute.
inline void emit_matrix_size_plot(const std::vector<cost::BlockCostProfile>& profiles,
                                  const std::vector<std::uint64_t>& t_values, std::ostream& os) {
  if (t_values.empty()) throw DataError("matrix size plot: empty T range");
  if (profiles.empty()) throw DataError("matrix size plot: no profiles");
  const auto series = matrix_size_series(profiles);
  const double w = 720, h = 480, left = 90, right = 220, top = 30, bottom = 60;
  const auto [t_lo_it, t_hi_it] = std::minmax_element(t_values.begin(), t_values.end());
  const double t_lo = double(*t_lo_it), t_hi = std::max(double(*t_hi_it), t_lo + 1.0);
  double y_max = 1.0;
  for (const auto& s : series)
    for (auto t : t_values) y_max = std::max(y_max, double(s.line.at(t)));
  y_max *= 1.05;
  auto px = [&](double t) { return left + (t - t_lo) / (t_hi - t_lo) * (w - left - right); };
  auto py = [&](double v) { return h - bottom - v / y_max * (h - top - bottom); };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
     << "\" stroke=\"black\"/>\n";
  for (auto t : t_values)
    os << "<text x=\"" << px(double(t)) << "\" y=\"" << h - bottom + 18 << "\" font-size=\"11\" text-anchor=\"middle\">" << t
       << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y_max / 1.05 * i / 4;
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
       << static_cast<std::uint64_t>(v) << "</text>\n";
  }
  os << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 15 << "\" font-size=\"13\" text-anchor=\"middle\">chunk size T</text>\n";
  os << "<text x=\"20\" y=\"" << (top + h - bottom) / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
     << (top + h - bottom) / 2 << ")\">matrix size X + Y</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    os << "<polyline fill=\"none\" stroke=\"" << colors[i % 8] << "\" stroke-width=\"" << (s.aggregate ? 2.5 : 1.2) << "\""
       << (s.aggregate ? "" : " stroke-dasharray=\"4 3\"") << " data-series=\"" << s.label << "\" data-values=\"";
    for (std::size_t k = 0; k < t_values.size(); ++k) os << (k ? " " : "") << s.line.at(t_values[k]);
    os << "\" points=\"";
    for (std::size_t k = 0; k < t_values.size(); ++k)
      os << (k ? " " : "") << px(double(t_values[k])) << ',' << py(double(s.line.at(t_values[k])));
    os << "\"/>\n";
    const double ly = top + 16.0 * double(i);
    os << "<line x1=\"" << w - right + 10 << "\" y1=\"" << ly << "\" x2=\"" << w - right + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << colors[i % 8] << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << w - right + 35 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace wavestream::bench
