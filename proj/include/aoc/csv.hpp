#ifndef AOC_CSV_HPP
#define AOC_CSV_HPP

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "aoc/errors.hpp"

namespace aoc {

/// Shortest decimal string that parses back to exactly `v`. Locale independent.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "inf" || s == "+inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  if (s == "nan") return NAN;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError(where + ": not a number: '" + std::string(s) + "'");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }

  std::size_t require_column(std::string_view name) const {
    auto c = column(name);
    if (!c) throw ConfigError("missing CSV column '" + std::string(name) + "'");
    return *c;
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline CsvTable read_csv(std::istream& in, const std::string& name = "csv") {
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw ConfigError(name + ": empty CSV");
  return t;
}

/// Row-at-a-time CSV emitter with a fixed header.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> header) : os_(os), width_(header.size()) {
    write_cells(header);
  }

  template <typename... Ts>
  void row(const Ts&... cells) {
    static_assert(sizeof...(Ts) > 0);
    std::vector<std::string> v{to_cell(cells)...};
    if (v.size() != width_) throw ConfigError("CSV row width mismatch");
    write_cells(v);
  }

  void row_vec(const std::vector<std::string>& v) {
    if (v.size() != width_) throw ConfigError("CSV row width mismatch");
    write_cells(v);
  }

  static std::string to_cell(double v) { return format_double(v); }
  static std::string to_cell(const std::string& s) { return s; }
  static std::string to_cell(const char* s) { return s; }
  static std::string to_cell(bool b) { return b ? "1" : "0"; }
  template <typename I>
    requires std::is_integral_v<I>
  static std::string to_cell(I v) {
    return std::to_string(v);
  }

 private:
  void write_cells(const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) os_ << ',';
      os_ << v[i];
    }
    os_ << '\n';
  }

  std::ostream& os_;
  std::size_t width_;
};

}  // namespace aoc

#endif  // AOC_CSV_HPP
