#ifndef AOC_GG_ANALYTIC_HPP
#define AOC_GG_ANALYTIC_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "aoc/closed_form.hpp"
#include "aoc/csv.hpp"
#include "aoc/distribution.hpp"
#include "aoc/errors.hpp"
#include "aoc/grid.hpp"
#include "aoc/tandem.hpp"

namespace aoc {

/// Densities for the G/G/1-G/G/1 expressions. Both joint grids share one
/// square axis starting at 0; the row variable is the transmitter sojourn
/// U_t, the column variable is U_c (fUtUc) or the compute-queue wait
/// U_c - S_c (fUtUcmSc, which usually carries an atom at 0).
struct GGInputs {
  DensityGrid fX, fSt, fSc;
  JointDensityGrid fUtUc, fUtUcmSc;
  double w = std::numeric_limits<double>::infinity();
  double lambda = 0, mu_t = 0, mu_c = 0;  // declared; checked against grid means
  double truncation_budget = 1e-4;
};

struct GGReport {
  std::vector<std::string> warnings;
  bool truncated = false;

  void warn(std::string msg) {
    if (std::find(warnings.begin(), warnings.end(), msg) == warnings.end()) warnings.push_back(std::move(msg));
  }
};

namespace detail {

inline void check_mass(double mass, double budget, const std::string& what, GGReport* report) {
  const double missing = 1.0 - mass;
  if (missing > 0.1) throw NumericError(what + ": truncated tail mass " + format_double(missing) + " exceeds 0.1");
  if (missing > budget && report) {
    report->truncated = true;
    report->warn(what + ": truncated tail mass " + format_double(missing) + " exceeds budget");
  }
}

inline void check_mean(double grid_mean, double declared_rate, const std::string& what) {
  if (!(declared_rate > 0.0)) return;
  const double declared = 1.0 / declared_rate;
  if (std::abs(grid_mean - declared) > 0.01 * declared)
    throw ConfigError(what + ": grid mean " + format_double(grid_mean) + " differs from declared " +
                      format_double(declared) + " by more than 1%");
}

inline void check_nonnegative(const std::vector<double>& v, const std::string& what) {
  for (double x : v)
    if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError(what + ": density values must be finite and >= 0");
}

/// Integral along the anti-diagonal i + j = m of a square grid.
inline double diagonal_integral(const JointDensityGrid& g, std::size_t m) {
  const std::size_t n = g.n;
  const std::size_t i_lo = m > n - 1 ? m - (n - 1) : 0;
  const std::size_t i_hi = std::min(m, n - 1);
  if (i_hi <= i_lo) return 0.0;
  double s = 0.5 * (g(i_lo, m - i_lo) + g(i_hi, m - i_hi));
  for (std::size_t i = i_lo + 1; i < i_hi; ++i) s += g(i, m - i);
  return s * g.step();
}

/// E[(U - y)^+] at the nodes of a density on [0, hi].
inline std::vector<double> residual_mean(const DensityGrid& f) {
  std::vector<double> tf(f.n());
  for (std::size_t i = 0; i < f.n(); ++i) tf[i] = f.x(i) * f.values[i];
  const auto t0 = trapz_tail(f.values, f.step());
  const auto t1 = trapz_tail(tf, f.step());
  std::vector<double> r(f.n());
  for (std::size_t i = 0; i < f.n(); ++i) r[i] = std::max(0.0, t1[i] - f.x(i) * t0[i]);
  return r;
}

}  // namespace detail

/// Checks shapes, nonnegativity, truncation and declared-vs-grid means.
inline void validate(const GGInputs& in, GGReport* report = nullptr) {
  detail::require(in.w >= 0.0, "gg: w must be >= 0");
  detail::require(in.truncation_budget > 0.0 && in.truncation_budget <= 0.1, "gg: truncation budget must lie in (0, 0.1]");
  const auto& a = in.fUtUc;
  const auto& b = in.fUtUcmSc;
  detail::require(a.n == b.n && a.lo == b.lo && a.hi == b.hi, "gg: joint grids must share their axes");
  detail::require(a.lo == 0.0, "gg: joint grids must start at 0");
  for (const auto* g : {&in.fX, &in.fSt, &in.fSc}) detail::require(g->lo == 0.0, "gg: 1-D grids must start at 0");
  detail::check_nonnegative(in.fX.values, "fX");
  detail::check_nonnegative(in.fSt.values, "fSt");
  detail::check_nonnegative(in.fSc.values, "fSc");
  detail::check_nonnegative(a.values, "fUtUc");
  detail::check_nonnegative(b.values, "fUtUcmSc");
  detail::check_mass(in.fX.total_mass(), in.truncation_budget, "fX", report);
  detail::check_mass(in.fSt.total_mass(), in.truncation_budget, "fSt", report);
  detail::check_mass(in.fSc.total_mass(), in.truncation_budget, "fSc", report);
  detail::check_mass(a.total_mass(), in.truncation_budget, "fUtUc", report);
  detail::check_mass(b.total_mass(), in.truncation_budget, "fUtUcmSc", report);
  detail::check_mean(in.fX.moment(1), in.lambda, "fX");
  detail::check_mean(in.fSt.moment(1), in.mu_t, "fSt");
  detail::check_mean(in.fSc.moment(1), in.mu_c, "fSc");
}

/// Delay densities at the nodes tau_m = m*h, m = 0..2(n-1).
inline std::vector<double> eta_nodes(const JointDensityGrid& g) {
  std::vector<double> out(2 * g.n - 1);
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = detail::diagonal_integral(g, m);
  return out;
}

namespace detail {

inline double eta_at(const JointDensityGrid& g, double tau, GGReport* report) {
  const double top = 2.0 * (g.hi - g.lo);
  if (tau < 0.0 || tau > top) {
    if (report) {
      report->truncated = true;
      report->warn("eta evaluated outside the representable range [0, " + format_double(top) + "]");
    }
    return 0.0;
  }
  const double s = tau / g.step();
  auto m = static_cast<std::size_t>(s);
  if (m >= 2 * g.n - 2) return diagonal_integral(g, 2 * g.n - 2);
  const double t = s - static_cast<double>(m);
  return (1.0 - t) * diagonal_integral(g, m) + t * diagonal_integral(g, m + 1);
}

}  // namespace detail

/// Density of the end-to-end delay U_t + U_c at tau.
inline double eta1(const GGInputs& in, double tau, GGReport* report = nullptr) {
  return detail::eta_at(in.fUtUc, tau, report);
}

/// Density of U_t + (U_c - S_c) at tau.
inline double eta2(const GGInputs& in, double tau, GGReport* report = nullptr) {
  return detail::eta_at(in.fUtUcmSc, tau, report);
}

/// E[X_k W_{k,t}]: arrival gap times the wait it induces at the transmitter.
inline double g1_quadrature(const GGInputs& in) {
  const DensityGrid fUt = in.fUtUc.row_marginal();
  const auto r = detail::residual_mean(fUt);
  std::vector<double> v(fUt.n());
  for (std::size_t i = 0; i < fUt.n(); ++i) {
    const double x = fUt.x(i);
    v[i] = x * in.fX.at(x) * r[i];
  }
  return trapz(v, fUt.step());
}

/// E[X_k W_{k,c}] via the transmitter inter-departure time D: busy arrivals
/// see D = S_t, idle ones D = S_t + (X - U_{k-1,t}); then W_c = (U_c - D)^+.
inline double g2_quadrature(const GGInputs& in) {
  const DensityGrid fUt = in.fUtUc.row_marginal();
  const DensityGrid fUc = in.fUtUc.col_marginal();
  const std::size_t n = fUt.n();
  const double h = fUt.step();
  const auto resid = detail::residual_mean(fUc);  // E[(U_c - y)^+]
  const auto xi = trapz_tail(fUt.values, h);      // Pr(U_t > x)

  std::vector<double> st(n);
  for (std::size_t k = 0; k < n; ++k) st[k] = in.fSt.at(fUt.x(k));

  // H(s) = E[(U_c - s - S_t)^+]
  std::vector<double> H(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t len = n - j;
    if (len < 2) break;
    double s = 0.5 * (st[0] * resid[j] + st[len - 1] * resid[j + len - 1]);
    for (std::size_t k = 1; k + 1 < len; ++k) s += st[k] * resid[j + k];
    H[j] = s * h;
  }

  // E[W_c | X = x] on the extended grid x = m h, m = 0..2(n-1).
  std::vector<double> g(2 * n - 1);
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double x = h * static_cast<double>(m);
    const double busy = m < n ? xi[m] * H[0] : 0.0;
    const std::size_t j_lo = m > n - 1 ? m - (n - 1) : 0;
    const std::size_t j_hi = std::min(m, n - 1);
    double idle = 0.0;
    if (j_hi > j_lo) {
      idle = 0.5 * (fUt.values[m - j_lo] * H[j_lo] + fUt.values[m - j_hi] * H[j_hi]);
      for (std::size_t j = j_lo + 1; j < j_hi; ++j) idle += fUt.values[m - j] * H[j];
      idle *= h;
    }
    g[m] = x * in.fX.at(x) * (busy + idle);
  }
  return trapz(g, h);
}

/// Pr(T <= w) from the delay density; clamped to [0, 1].
inline double ft_cdf(const GGInputs& in, double w) {
  detail::require(w >= 0.0, "ft_cdf: w must be >= 0");
  const auto eta = eta_nodes(in.fUtUc);
  const double v = integrate_linear(eta, 0.0, in.fUtUc.step(), 0.0, w);
  return std::clamp(v, 0.0, 1.0);
}

inline double theta_soft_gg1(const GGInputs& in, GGReport* report = nullptr) {
  validate(in, report);
  const double ex = in.fX.moment(1);
  const double ex2 = in.fX.moment(2);
  const double lambda = 1.0 / ex;
  const double base = in.fSt.moment(1) + in.fSc.moment(1) + lambda * (0.5 * ex2 + g1_quadrature(in) + g2_quadrature(in));
  if (std::isinf(in.w)) return base;
  const auto e1 = eta_nodes(in.fUtUc);
  const auto e2 = eta_nodes(in.fUtUcmSc);
  const double h = in.fUtUc.step();
  const double tail = integrate_linear(e1, 0.0, h, in.w, HUGE_VAL);
  std::vector<double> d(e1.size());
  for (std::size_t m = 0; m < e1.size(); ++m) {
    const double ex_w = hinge(h * static_cast<double>(m) - in.w);
    d[m] = ex_w * ex_w * (e1[m] - e2[m]);
  }
  return base + lambda * 0.5 * tail * trapz(d, h);
}

/// Hard-deadline approximation; +infinity when Pr(T <= w) = 0.
inline double theta_hard_gg1_approx(const GGInputs& in, GGReport* report = nullptr) {
  validate(in, report);
  const auto e1 = eta_nodes(in.fUtUc);
  const double h = in.fUtUc.step();
  const double F = std::clamp(integrate_linear(e1, 0.0, h, 0.0, in.w), 0.0, 1.0);
  if (!(F > 0.0)) return std::numeric_limits<double>::infinity();
  std::vector<double> te(e1.size());
  for (std::size_t m = 0; m < e1.size(); ++m) te[m] = h * static_cast<double>(m) * e1[m];
  const double ex = in.fX.moment(1);
  const double ex2 = in.fX.moment(2);
  return integrate_linear(te, 0.0, h, 0.0, in.w) / F + ex2 / (2.0 * ex) + (1.0 - F) / F * ex;
}

inline double throughput_gg1_approx(const GGInputs& in, GGReport* report = nullptr) {
  validate(in, report);
  return ft_cdf(in, in.w) / in.fX.moment(1);
}

/// Exact tabulation for the M/M/1-M/M/1 tandem, where U_t ~ Exp(mu_t - lambda),
/// U_c ~ Exp(mu_c - lambda), independent, and U_c - S_c has an atom 1 - rho_c at 0.
/// Supports default to [0, 40/rate] of the respective law.
inline GGInputs mm1_tandem_inputs(const MM1Params& p, std::size_t n = 2001) {
  require_stable(p);
  detail::require(n >= 3, "grid size must be >= 3");
  GGInputs in;
  in.lambda = p.lambda;
  in.mu_t = p.mu_t;
  in.mu_c = p.mu_c;
  in.w = p.w;
  in.fX = density_grid(Exponential{p.lambda}, 0.0, 40.0 / p.lambda, n);
  in.fSt = density_grid(Exponential{p.mu_t}, 0.0, 40.0 / p.mu_t, n);
  in.fSc = density_grid(Exponential{p.mu_c}, 0.0, 40.0 / p.mu_c, n);
  const double a = p.a(), b = p.b();
  const double top = 40.0 / std::min(a, b);
  const DensityGrid ut = density_grid(Exponential{a}, 0.0, top, n);
  const DensityGrid uc = density_grid(Exponential{b}, 0.0, top, n);
  DensityGrid wc = uc;
  const double rho_c = p.rho_c();
  for (double& v : wc.values) v *= rho_c;
  wc.values[0] += 2.0 * (1.0 - rho_c) / wc.step();
  in.fUtUc = product_grid(ut, uc);
  in.fUtUcmSc = product_grid(ut, wc);
  return in;
}

/// Node-centred 2-D histograms of (U_t, U_c) and (U_t, U_c - S_c) from a
/// calibration run. The first bin on each axis is [0, h/2), so an atom at 0
/// lands as 2p/h, matching the grid atom convention. Samples beyond `hi` are
/// dropped and show up as truncated mass.
inline std::pair<JointDensityGrid, JointDensityGrid> estimate_joint_grids(const TandemConfig& calibration, double hi,
                                                                          std::size_t n) {
  detail::require(hi > 0.0 && n >= 2, "histogram grid needs hi > 0 and n >= 2");
  std::vector<double> ua(n * n, 0.0), wa(n * n, 0.0);
  const double h = hi / static_cast<double>(n - 1);
  auto bin = [&](double v) -> std::ptrdiff_t {
    const double s = std::floor(v / h + 0.5);
    return s > static_cast<double>(n - 1) ? -1 : static_cast<std::ptrdiff_t>(s);
  };
  const std::uint64_t warmup = calibration.warmup_count();
  std::uint64_t used = 0;
  simulate_tasks(calibration, [&](const TaskRecord& r) {
    if (r.k <= warmup) return;
    ++used;
    const double ut = r.d1 - r.tau;
    const double uc = r.tau1 - r.d1;
    const double wc = r.tau2 - r.d1;
    const auto i = bin(ut), j = bin(uc), l = bin(wc);
    if (i < 0) return;
    if (j >= 0) ua[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] += 1.0;
    if (l >= 0) wa[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(l)] += 1.0;
  });
  detail::require(used > 0, "calibration run has no post-warmup tasks");
  auto width = [&](std::size_t i) { return (i == 0 || i == n - 1) ? 0.5 * h : h; };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double area = width(i) * width(j) * static_cast<double>(used);
      ua[i * n + j] /= area;
      wa[i * n + j] /= area;
    }
  return {JointDensityGrid(0.0, hi, n, std::move(ua)), JointDensityGrid(0.0, hi, n, std::move(wa))};
}

/// Inputs from parametric laws plus histogram joints from a calibration run.
inline GGInputs gg_inputs_from_simulation(const TandemConfig& calibration, double joint_hi, std::size_t joint_n,
                                          std::size_t n = 2001) {
  validate(calibration);
  GGInputs in;
  in.w = calibration.w;
  in.lambda = 1.0 / mean(calibration.arrival);
  in.mu_t = 1.0 / mean(calibration.transmit);
  in.mu_c = 1.0 / mean(calibration.compute);
  in.fX = density_grid(calibration.arrival, 0.0, 40.0 * mean(calibration.arrival), n);
  in.fSt = density_grid(calibration.transmit, 0.0, 40.0 * mean(calibration.transmit), n);
  in.fSc = density_grid(calibration.compute, 0.0, 40.0 * mean(calibration.compute), n);
  auto [a, b] = estimate_joint_grids(calibration, joint_hi, joint_n);
  in.fUtUc = std::move(a);
  in.fUtUcmSc = std::move(b);
  return in;
}

/// Directory layout: fX.csv, fSt.csv, fSc.csv, fUtUc.csv, fUtUcmSc.csv and
/// params.csv with columns lambda,mu_t,mu_c,w (one row).
inline GGInputs load_gg_inputs(const std::filesystem::path& dir) {
  GGInputs in;
  in.fX = read_grid_csv((dir / "fX.csv").string());
  in.fSt = read_grid_csv((dir / "fSt.csv").string());
  in.fSc = read_grid_csv((dir / "fSc.csv").string());
  in.fUtUc = read_joint_grid_csv((dir / "fUtUc.csv").string());
  in.fUtUcmSc = read_joint_grid_csv((dir / "fUtUcmSc.csv").string());
  const std::string pp = (dir / "params.csv").string();
  std::ifstream f(pp);
  if (!f) throw ConfigError("cannot open " + pp);
  const CsvTable t = read_csv(f, pp);
  if (t.rows.size() != 1) throw ConfigError(pp + ": expected exactly one parameter row");
  const auto& row = t.rows[0];
  auto get = [&](const char* name) {
    const std::size_t c = t.require_column(name);
    if (c >= row.size()) throw ConfigError(pp + ": short row");
    return parse_double(row[c], pp + ":2");
  };
  in.lambda = get("lambda");
  in.mu_t = get("mu_t");
  in.mu_c = get("mu_c");
  in.w = get("w");
  return in;
}

inline void save_gg_inputs(const GGInputs& in, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("fX.csv");
    write_grid_csv(f, in.fX);
  }
  {
    auto f = open("fSt.csv");
    write_grid_csv(f, in.fSt);
  }
  {
    auto f = open("fSc.csv");
    write_grid_csv(f, in.fSc);
  }
  {
    auto f = open("fUtUc.csv");
    write_grid_csv(f, in.fUtUc);
  }
  {
    auto f = open("fUtUcmSc.csv");
    write_grid_csv(f, in.fUtUcmSc);
  }
  auto f = open("params.csv");
  f << "lambda,mu_t,mu_c,w\n"
    << format_double(in.lambda) << ',' << format_double(in.mu_t) << ',' << format_double(in.mu_c) << ','
    << format_double(in.w) << '\n';
}

}  // namespace aoc

#endif  // AOC_GG_ANALYTIC_HPP
