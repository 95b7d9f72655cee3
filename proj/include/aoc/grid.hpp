#ifndef AOC_GRID_HPP
#define AOC_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "aoc/csv.hpp"
#include "aoc/errors.hpp"

namespace aoc {

// Composite trapezoid over uniformly spaced samples.
inline double trapz(std::span<const double> f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

/// Tail integrals: out[i] = trapezoid of f over nodes i..n-1.
inline std::vector<double> trapz_tail(std::span<const double> f, double h) {
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t i = f.size(); i-- > 1;) out[i - 1] = out[i] + 0.5 * h * (f[i - 1] + f[i]);
  return out;
}

/// Exact integral over [a, b] of the piecewise-linear interpolant of samples
/// f at lo + i*h. The interpolant is zero outside the sampled range.
inline double integrate_linear(std::span<const double> f, double lo, double h, double a, double b) {
  if (f.size() < 2 || b <= a) return 0.0;
  const double top = lo + h * static_cast<double>(f.size() - 1);
  a = std::max(a, lo);
  b = std::min(b, top);
  if (b <= a) return 0.0;
  auto value_at = [&](double x) {
    const double s = (x - lo) / h;
    auto i = static_cast<std::size_t>(std::floor(s));
    if (i >= f.size() - 1) return f.back();
    const double t = s - static_cast<double>(i);
    return f[i] + t * (f[i + 1] - f[i]);
  };
  const auto first = static_cast<std::size_t>(std::ceil((a - lo) / h - 1e-12));
  const auto last = static_cast<std::size_t>(std::floor((b - lo) / h + 1e-12));
  if (first > last) return 0.5 * (b - a) * (value_at(a) + value_at(b));
  const double xf = lo + h * static_cast<double>(first);
  const double xl = lo + h * static_cast<double>(last);
  double s = 0.0;
  if (xf > a) s += 0.5 * (xf - a) * (value_at(a) + f[first]);
  s += trapz(f.subspan(first, last - first + 1), h);
  if (b > xl) s += 0.5 * (b - xl) * (f[last] + value_at(b));
  return s;
}

/// Density tabulated on the uniform grid lo + i*h, i = 0..n-1.
///
/// An atom of mass m at `lo` is represented by the endpoint value 2m/h, which
/// the trapezoid rule weighs by h/2; this keeps every quadrature in the
/// library consistent with mixed laws such as an M/M/1 waiting time.
struct DensityGrid {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> values;

  DensityGrid() = default;
  DensityGrid(double lo_, double hi_, std::vector<double> v) : lo(lo_), hi(hi_), values(std::move(v)) {
    detail::require(values.size() >= 2, "density grid needs at least 2 points");
    detail::require(hi > lo, "density grid needs hi > lo");
  }

  std::size_t n() const { return values.size(); }
  double step() const { return (hi - lo) / static_cast<double>(values.size() - 1); }
  double x(std::size_t i) const { return lo + step() * static_cast<double>(i); }
  double total_mass() const { return trapz(values, step()); }

  /// Linear interpolation; zero outside [lo, hi].
  double at(double xq) const {
    if (xq < lo || xq > hi) return 0.0;
    const double s = (xq - lo) / step();
    auto i = static_cast<std::size_t>(s);
    if (i >= n() - 1) return values.back();
    const double t = s - static_cast<double>(i);
    return values[i] + t * (values[i + 1] - values[i]);
  }

  /// Trapezoid of x^k f(x).
  double moment(int k) const {
    std::vector<double> g(n());
    for (std::size_t i = 0; i < n(); ++i) g[i] = std::pow(x(i), k) * values[i];
    return trapz(g, step());
  }
};

/// Joint density f(u, v) on the square grid [lo, hi]^2; row index is u.
struct JointDensityGrid {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 0;
  std::vector<double> values;  // row-major, n*n

  JointDensityGrid() = default;
  JointDensityGrid(double lo_, double hi_, std::size_t n_, std::vector<double> v)
      : lo(lo_), hi(hi_), n(n_), values(std::move(v)) {
    detail::require(n >= 2, "joint grid needs at least 2 points per axis");
    detail::require(hi > lo, "joint grid needs hi > lo");
    detail::require(values.size() == n * n, "joint grid value count must be n*n");
  }

  double step() const { return (hi - lo) / static_cast<double>(n - 1); }
  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }

  /// Marginal of the first (row) variable.
  DensityGrid row_marginal() const {
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = trapz(std::span<const double>(&values[i * n], n), step());
    return DensityGrid(lo, hi, std::move(m));
  }

  /// Marginal of the second (column) variable.
  DensityGrid col_marginal() const {
    std::vector<double> m(n), col(n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) col[i] = values[i * n + j];
      m[j] = trapz(col, step());
    }
    return DensityGrid(lo, hi, std::move(m));
  }

  double total_mass() const { return row_marginal().total_mass(); }
};

/// Outer product f(u) g(v) of two 1-D grids sharing lo, hi and n.
inline JointDensityGrid product_grid(const DensityGrid& f, const DensityGrid& g) {
  detail::require(f.n() == g.n() && f.lo == g.lo && f.hi == g.hi, "product_grid needs identical axes");
  const std::size_t n = f.n();
  std::vector<double> v(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) v[i * n + j] = f.values[i] * g.values[j];
  return JointDensityGrid(f.lo, f.hi, n, std::move(v));
}

// CSV form: "lo,hi,n" header, one numeric header row, then the values, one
// row per line (a single column for 1-D grids, n columns for joint grids).

inline void write_grid_csv(std::ostream& os, const DensityGrid& g) {
  os << "lo,hi,n\n" << format_double(g.lo) << ',' << format_double(g.hi) << ',' << g.n() << '\n';
  for (double v : g.values) os << format_double(v) << '\n';
}

inline void write_grid_csv(std::ostream& os, const JointDensityGrid& g) {
  os << "lo,hi,n\n" << format_double(g.lo) << ',' << format_double(g.hi) << ',' << g.n << '\n';
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) {
      if (j) os << ',';
      os << format_double(g(i, j));
    }
    os << '\n';
  }
}

namespace detail {

struct RawGrid {
  double lo = 0, hi = 0;
  std::size_t n = 0;
  std::vector<std::vector<double>> rows;
};

inline RawGrid read_raw_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid file " + path);
  const CsvTable t = read_csv(in, path);
  if (t.header != std::vector<std::string>{"lo", "hi", "n"} || t.rows.empty())
    throw ConfigError(path + ": grid CSV must start with header lo,hi,n and a parameter row");
  RawGrid g;
  const auto& p = t.rows.front();
  if (p.size() != 3) throw ConfigError(path + ":2: expected 3 fields");
  g.lo = parse_double(p[0], path + ":2");
  g.hi = parse_double(p[1], path + ":2");
  g.n = static_cast<std::size_t>(parse_double(p[2], path + ":2"));
  for (std::size_t r = 1; r < t.rows.size(); ++r) {
    std::vector<double> row;
    for (const auto& cell : t.rows[r]) row.push_back(parse_double(cell, path + ":" + std::to_string(r + 2)));
    g.rows.push_back(std::move(row));
  }
  return g;
}

}  // namespace detail

inline DensityGrid read_grid_csv(const std::string& path) {
  auto raw = detail::read_raw_grid(path);
  if (raw.rows.size() != raw.n) throw ConfigError(path + ": expected " + std::to_string(raw.n) + " value rows");
  std::vector<double> v;
  for (const auto& r : raw.rows) {
    if (r.size() != 1) throw ConfigError(path + ": 1-D grid rows must have one value");
    v.push_back(r[0]);
  }
  return DensityGrid(raw.lo, raw.hi, std::move(v));
}

inline JointDensityGrid read_joint_grid_csv(const std::string& path) {
  auto raw = detail::read_raw_grid(path);
  if (raw.rows.size() != raw.n) throw ConfigError(path + ": expected " + std::to_string(raw.n) + " value rows");
  std::vector<double> v;
  v.reserve(raw.n * raw.n);
  for (const auto& r : raw.rows) {
    if (r.size() != raw.n) throw ConfigError(path + ": joint grid rows must have n values");
    v.insert(v.end(), r.begin(), r.end());
  }
  return JointDensityGrid(raw.lo, raw.hi, raw.n, std::move(v));
}

}  // namespace aoc

#endif  // AOC_GRID_HPP
