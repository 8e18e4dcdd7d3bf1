#pragma once

// Minimal SVG line plots of daily series. Output is a pure function of the
// input values, so plots are as reproducible as the CSVs they draw.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "searchsurv/timeseries.hpp"

namespace searchsurv::svg {

struct Line {
  std::string label;
  TimeSeries series;
  std::string colour = "#1f77b4";
  bool dashed = false;
};

namespace detail {

inline std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline std::string line_plot(const std::string& title, const std::vector<Line>& lines, int width = 800, int height = 400) {
  if (lines.empty()) throw InvalidArgument("a plot needs at least one line");
  Date first = lines.front().series.start(), last = lines.front().series.end();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& l : lines) {
    first = std::min(first, l.series.start());
    last = std::max(last, l.series.end());
    for (double v : l.series.values())
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  if (hi == lo) hi = lo + 1.0;
  const double left = 60, right = width - 20.0, top = 40, bottom = height - 40.0;
  const double span = std::max(1.0, static_cast<double>((last - first).count()));
  auto px = [&](Date d) { return left + (right - left) * static_cast<double>((d - first).count()) / span; };
  auto py = [&](double v) { return bottom - (bottom - top) * (v - lo) / (hi - lo); };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                    std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::fixed(left) + "\" y=\"20\" font-size=\"14\">" + detail::escape(title) + "</text>\n";
  out += "<line x1=\"" + detail::fixed(left) + "\" y1=\"" + detail::fixed(bottom) + "\" x2=\"" + detail::fixed(right) +
         "\" y2=\"" + detail::fixed(bottom) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + detail::fixed(left) + "\" y1=\"" + detail::fixed(top) + "\" x2=\"" + detail::fixed(left) +
         "\" y2=\"" + detail::fixed(bottom) + "\" stroke=\"black\"/>\n";
  out += "<text x=\"" + detail::fixed(left) + "\" y=\"" + detail::fixed(bottom + 16) + "\">" + format_date(first) + "</text>\n";
  out += "<text x=\"" + detail::fixed(right) + "\" y=\"" + detail::fixed(bottom + 16) + "\" text-anchor=\"end\">" +
         format_date(last) + "</text>\n";
  out += "<text x=\"" + detail::fixed(left - 4) + "\" y=\"" + detail::fixed(top + 4) + "\" text-anchor=\"end\">" +
         detail::fixed(hi) + "</text>\n";
  out += "<text x=\"" + detail::fixed(left - 4) + "\" y=\"" + detail::fixed(bottom) + "\" text-anchor=\"end\">" +
         detail::fixed(lo) + "</text>\n";
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto& l = lines[k];
    std::string pts;
    for (std::size_t i = 0; i < l.series.size(); ++i) {
      if (!std::isfinite(l.series[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += detail::fixed(px(l.series.date_at(i))) + "," + detail::fixed(py(l.series[i]));
    }
    out += "<polyline fill=\"none\" stroke=\"" + l.colour + "\" stroke-width=\"1.5\"" +
           (l.dashed ? " stroke-dasharray=\"4 3\"" : "") + " points=\"" + pts + "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(k);
    out += "<text x=\"" + detail::fixed(right - 4) + "\" y=\"" + detail::fixed(ly) + "\" text-anchor=\"end\" fill=\"" +
           l.colour + "\">" + detail::escape(l.label) + "</text>\n";
  }
  return out + "</svg>\n";
}

}  // namespace searchsurv::svg
