#ifndef AOC_SVG_HPP
#define AOC_SVG_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aoc/csv.hpp"
#include "aoc/errors.hpp"

namespace aoc {

struct PlotSpec {
  std::string x;
  std::string y;
  std::string series;  // optional grouping column
  std::string title;
  std::string x_label;
  std::string y_label;
  double width = 640;
  double height = 420;
};

namespace svg_detail {

// Locale-free fixed formatting.
inline std::string fixed(double v, int prec = 2) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, prec);
  if (ec != std::errc()) return "0";
  return std::string(buf, p);
}

inline std::string escape(const std::string& s) {
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

inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

inline std::string tick_label(double v) {
  std::string s = format_double(v);
  if (s.size() > 8) s = fixed(v, 3);
  return s;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace svg_detail

/// Line plot of y against x, one polyline per distinct value of the series
/// column (in order of first appearance). Rows with non-finite values are
/// skipped. Output contains no timestamps.
inline std::string render_plot(const CsvTable& csv, const PlotSpec& spec) {
  using namespace svg_detail;
  const std::size_t cx = csv.require_column(spec.x), cy = csv.require_column(spec.y);
  std::optional<std::size_t> cs;
  if (!spec.series.empty()) cs = csv.require_column(spec.series);

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> groups;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.size() != csv.header.size()) throw ConfigError("plot: row " + std::to_string(r + 2) + " has wrong width");
    const double x = parse_double(row[cx], "plot row " + std::to_string(r + 2));
    const double y = parse_double(row[cy], "plot row " + std::to_string(r + 2));
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    const std::string key = cs ? row[*cs] : std::string();
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.emplace_back(x, y);
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  if (order.empty()) {
    xmin = ymin = 0;
    xmax = ymax = 1;
  }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) {
    const double pad = std::max(1e-9, std::abs(ymin) * 0.05);
    ymin -= pad;
    ymax += pad;
  }

  const double L = 70, R = 150, T = 40, B = 55;
  const double pw = spec.width - L - R, ph = spec.height - T - B;
  auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return T + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(spec.width, 0) << "\" height=\""
     << fixed(spec.height, 0) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << fixed(spec.width, 0) << "\" height=\"" << fixed(spec.height, 0)
     << "\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    os << "<text x=\"" << fixed(L + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(spec.title) << "</text>\n";
  os << "<g stroke=\"black\" stroke-width=\"1\">\n";
  os << "<line x1=\"" << fixed(L) << "\" y1=\"" << fixed(T + ph) << "\" x2=\"" << fixed(L + pw) << "\" y2=\""
     << fixed(T + ph) << "\"/>\n";
  os << "<line x1=\"" << fixed(L) << "\" y1=\"" << fixed(T) << "\" x2=\"" << fixed(L) << "\" y2=\"" << fixed(T + ph)
     << "\"/>\n";
  os << "</g>\n";
  for (double t : nice_ticks(xmin, xmax)) {
    const double px = sx(t);
    os << "<line x1=\"" << fixed(px) << "\" y1=\"" << fixed(T + ph) << "\" x2=\"" << fixed(px) << "\" y2=\""
       << fixed(T + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed(px) << "\" y=\"" << fixed(T + ph + 18) << "\" text-anchor=\"middle\">"
       << tick_label(t) << "</text>\n";
  }
  for (double t : nice_ticks(ymin, ymax)) {
    const double py = sy(t);
    os << "<line x1=\"" << fixed(L - 5) << "\" y1=\"" << fixed(py) << "\" x2=\"" << fixed(L) << "\" y2=\"" << fixed(py)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed(L - 8) << "\" y=\"" << fixed(py + 4) << "\" text-anchor=\"end\">" << tick_label(t)
       << "</text>\n";
  }
  os << "<text x=\"" << fixed(L + pw / 2) << "\" y=\"" << fixed(spec.height - 12) << "\" text-anchor=\"middle\">"
     << escape(spec.x_label.empty() ? spec.x : spec.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << fixed(T + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << fixed(T + ph / 2) << ")\">" << escape(spec.y_label.empty() ? spec.y : spec.y_label) << "</text>\n";

  for (std::size_t g = 0; g < order.size(); ++g) {
    const char* color = kPalette[g % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const auto& pts = groups[order[g]];
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k) os << ' ';
      os << fixed(sx(pts[k].first)) << ',' << fixed(sy(pts[k].second));
    }
    os << "\"/>\n";
    const double ly = T + 10 + 18 * static_cast<double>(g);
    os << "<line x1=\"" << fixed(L + pw + 12) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(L + pw + 32)
       << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    const std::string name = order[g].empty() ? spec.y : (spec.series + "=" + order[g]);
    os << "<text x=\"" << fixed(L + pw + 36) << "\" y=\"" << fixed(ly + 4) << "\">" << escape(name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace aoc

#endif  // AOC_SVG_HPP
