#ifndef AOC_PARETO_HPP
#define AOC_PARETO_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "aoc/closed_form.hpp"
#include "aoc/errors.hpp"

namespace aoc {

struct ParetoQuery {
  double mu_t = 2.0;
  double mu_c = 3.0;
  double w = 0.5;
  double u = 0.0;  // throughput floor
  double lambda_lo = 0.0;  // 0 means 1e-3 * min(mu)
  double lambda_hi = 0.0;  // 0 means (1 - 1e-3) * min(mu)
  std::size_t resolution = 200;

  double lo() const { return lambda_lo > 0.0 ? lambda_lo : 1e-3 * std::min(mu_t, mu_c); }
  double hi() const { return lambda_hi > 0.0 ? lambda_hi : (1.0 - 1e-3) * std::min(mu_t, mu_c); }
};

struct ParetoPoint {
  double u = 0.0;
  double lambda_star = std::numeric_limits<double>::quiet_NaN();
  double theta = std::numeric_limits<double>::quiet_NaN();
  double xi = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;
};

inline void validate(const ParetoQuery& q) {
  detail::require(q.mu_t > 0.0 && q.mu_c > 0.0, "pareto: service rates must be positive");
  detail::require(q.w > 0.0, "pareto: w must be > 0");
  detail::require(q.u >= 0.0, "pareto: u must be >= 0");
  detail::require(q.resolution >= 16, "pareto: resolution must be >= 16");
  detail::require(0.0 < q.lo() && q.lo() < q.hi() && q.hi() < std::min(q.mu_t, q.mu_c),
                  "pareto: lambda range must be an interval inside (0, min(mu_t, mu_c))");
}

inline bool meets_floor(double xi, double u) { return xi >= u + 1e-12; }

/// Hard-deadline objective and throughput at one arrival rate.
inline std::pair<double, double> pareto_eval(const ParetoQuery& q, double lambda) {
  const MM1Params p{lambda, q.mu_t, q.mu_c, q.w};
  return {theta_hard_mm1_approx(p), throughput_mm1_approx(p)};
}

/// min over lambda of the hard AoC approximation subject to throughput > u.
inline ParetoPoint minimize_theta(const ParetoQuery& q) {
  validate(q);
  auto objective = [&](double lambda) {
    const auto [theta, xi] = pareto_eval(q, lambda);
    return meets_floor(xi, q.u) ? theta : std::numeric_limits<double>::infinity();
  };
  const std::size_t n = q.resolution;
  const double lo = q.lo(), hi = q.hi();
  std::vector<double> grid(n), vals(n);
  std::size_t best = 0;
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    vals[i] = objective(grid[i]);
    if (vals[i] < vals[best]) best = i;
  }
  ParetoPoint pt;
  pt.u = q.u;
  if (std::isinf(vals[best])) return pt;

  double a = grid[best == 0 ? 0 : best - 1];
  double b = grid[std::min(best + 1, n - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1.0, std::abs(b)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  double lam = fc <= fd ? c : d;
  if (!(std::min(fc, fd) < vals[best])) lam = grid[best];
  const auto [theta, xi] = pareto_eval(q, lam);
  pt.lambda_star = lam;
  pt.theta = theta;
  pt.xi = xi;
  pt.feasible = true;
  return pt;
}

/// One constrained optimum per throughput floor.
inline std::vector<ParetoPoint> frontier(const ParetoQuery& base, const std::vector<double>& u_grid) {
  detail::require(std::is_sorted(u_grid.begin(), u_grid.end()), "frontier: u_grid must be ascending");
  std::vector<ParetoPoint> out;
  out.reserve(u_grid.size());
  for (double u : u_grid) {
    ParetoQuery q = base;
    q.u = u;
    out.push_back(minimize_theta(q));
  }
  return out;
}

/// True iff no probe rate has both a strictly smaller objective and a
/// throughput above the point's floor.
inline bool weak_pareto_check(const ParetoQuery& q, const ParetoPoint& pt, const std::vector<double>& probe_lambdas) {
  detail::require(pt.feasible, "weak_pareto_check requires a feasible point");
  const double slack = 1e-12 * std::max(1.0, std::abs(pt.theta));
  for (double lambda : probe_lambdas) {
    if (!(lambda > 0.0 && lambda < std::min(q.mu_t, q.mu_c))) continue;
    const auto [theta, xi] = pareto_eval(q, lambda);
    if (theta < pt.theta - slack && meets_floor(xi, pt.u)) return false;
  }
  return true;
}

/// n evenly spaced rates strictly inside the query's lambda range.
inline std::vector<double> probe_grid(const ParetoQuery& q, std::size_t n) {
  std::vector<double> v(n);
  const double lo = q.lo(), hi = q.hi();
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

}  // namespace aoc

#endif  // AOC_PARETO_HPP
