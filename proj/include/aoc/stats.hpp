#ifndef AOC_STATS_HPP
#define AOC_STATS_HPP

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace aoc {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double ci95_lo = std::numeric_limits<double>::quiet_NaN();
  double ci95_hi = std::numeric_limits<double>::quiet_NaN();

  double half_width() const { return 0.5 * (ci95_hi - ci95_lo); }
};

/// Two-sided Student-t quantile at 1 - alpha/2.
inline double t_quantile(std::size_t dof, double alpha = 0.05) {
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
}

/// Mean, sample standard deviation and two-sided 95% t interval.
inline Summary summarize(std::span<const double> xs) {
  Summary s;
  s.n = xs.size();
  if (s.n == 0) return s;
  double m = 0.0;
  for (std::size_t i = 0; i < s.n; ++i) m += (xs[i] - m) / static_cast<double>(i + 1);
  s.mean = m;
  if (s.n < 2) {
    s.ci95_lo = s.ci95_hi = m;
    return s;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  const double hw = t_quantile(s.n - 1) * s.sd / std::sqrt(static_cast<double>(s.n));
  s.ci95_lo = m - hw;
  s.ci95_hi = m + hw;
  return s;
}

inline Summary summarize(const std::vector<double>& xs) { return summarize(std::span<const double>(xs)); }

/// Summary of the pairwise differences b[i] - a[i].
inline Summary paired_difference(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(std::min(a.size(), b.size()));
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = b[i] - a[i];
  return summarize(d);
}

}  // namespace aoc

#endif  // AOC_STATS_HPP
