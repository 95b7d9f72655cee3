#ifndef AOC_CLOSED_FORM_HPP
#define AOC_CLOSED_FORM_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "aoc/csv.hpp"
#include "aoc/errors.hpp"

namespace aoc {

/// M/M/1-M/M/1 tandem: Poisson(lambda) arrivals, exponential services.
struct MM1Params {
  double lambda = 1.0;
  double mu_t = 2.0;
  double mu_c = 3.0;
  double w = std::numeric_limits<double>::infinity();

  double rho_t() const { return lambda / mu_t; }
  double rho_c() const { return lambda / mu_c; }
  double delta_t() const { return 1.0 - rho_t(); }
  double delta_c() const { return 1.0 - rho_c(); }
  // Decay rates of the two sojourn-time exponentials, mu*delta = mu - lambda.
  double a() const { return mu_t - lambda; }
  double b() const { return mu_c - lambda; }
  double zeta_t() const { return std::isinf(w) ? 0.0 : std::exp(-a() * w); }
  double zeta_c() const { return std::isinf(w) ? 0.0 : std::exp(-b() * w); }
};

inline void require_stable(const MM1Params& p) {
  if (!(p.lambda > 0.0) || !(p.mu_t > 0.0) || !(p.mu_c > 0.0) || !std::isfinite(p.mu_t) || !std::isfinite(p.mu_c))
    throw ConfigError("rates must be finite and positive");
  if (!(p.w >= 0.0)) throw ConfigError("deadline w must be >= 0");
  if (!(p.lambda < std::min(p.mu_t, p.mu_c)))
    throw StabilityError("unstable tandem: lambda = " + format_double(p.lambda) +
                         " must be below min(mu_t, mu_c) = " + format_double(std::min(p.mu_t, p.mu_c)));
}

/// Equal-rate branch selector.
inline bool rates_tied(double mu_t, double mu_c) {
  return std::abs(mu_t - mu_c) < 1e-9 * std::max(mu_t, mu_c);
}

/// Moment inputs of the generic average-AoC expressions.
struct MomentInputs {
  double EX = 0;
  double EX2 = 0;
  double EXT = 0;
  double E_excess2 = 0;      // E[((T - w)^+)^2]
  double E_excess2_sc = 0;   // E[((T - S_c - w)^+)^2]
  double eps_w = 0;
  double ET_M = 0;
  double EM = 1;
  double EM2 = 1;
};

/// Probability that the end-to-end delay exceeds w.
inline double epsilon_w(const MM1Params& p) {
  require_stable(p);
  const double a = p.a(), b = p.b(), zt = p.zeta_t(), zc = p.zeta_c();
  if (rates_tied(p.mu_t, p.mu_c)) return std::isinf(p.w) ? 0.0 : (1.0 + a * p.w) * zt;
  return (b * zt - a * zc) / (b - a);
}

/// Average AoI of the tandem (the w = infinity limit of the soft AoC).
inline double aoi_mm1_tandem(const MM1Params& p) {
  require_stable(p);
  const double l = p.lambda, mt = p.mu_t, mc = p.mu_c;
  return 1.0 / l + 1.0 / mt + 1.0 / mc + l * l / (mt * mt * (mt - l)) + l * l / (mc * mc * (mc - l)) +
         l * l / (mt * mc * (mt + mc - l));
}

inline double theta_soft_mm1(const MM1Params& p) {
  require_stable(p);
  const double l = p.lambda, mt = p.mu_t, mc = p.mu_c;
  const double rt = p.rho_t(), rc = p.rho_c(), dt = p.delta_t(), dc = p.delta_c();
  const double zt = p.zeta_t(), zc = p.zeta_c();
  if (rates_tied(mt, mc)) {
    const double base = 1.0 / l + 2.0 / mt + 2.0 * rt * rt / (mt * dt) + rt * rt / (mt + mt * dt);
    if (zt == 0.0) return base;
    return base + l * zt * zt * (1.0 + mt * dt * p.w) * (2.0 / (mt * mt * dt) + p.w / mt);
  }
  const double base = 1.0 / l + 1.0 / mt + 1.0 / mc + rt * rt / (mt * dt) + rc * rc / (mc * dc) + rt * rc / (mt + mc - l);
  const double a = mt * dt, b = mc * dc;
  const double g = dc * mt * dt;
  const double extra = l * mc * g * g / ((mc - mt) * (mc - mt)) * (zt / a - zc / b) * (zt / (a * a) - zc / (b * b));
  return base + extra;
}

inline double theta_soft_from_moments(const MomentInputs& m) {
  if (!(m.EX > 0.0)) throw NumericError("theta_soft_from_moments: E[X] must be > 0");
  return (m.EXT + 0.5 * m.EX2) / m.EX + m.eps_w * (m.E_excess2 - m.E_excess2_sc) / (2.0 * m.EX);
}

inline double theta_hard_from_moments(const MomentInputs& m) {
  if (!(m.EX > 0.0)) throw NumericError("theta_hard_from_moments: E[X] must be > 0");
  if (!(m.EM > 0.0)) throw NumericError("theta_hard_from_moments: E[M] must be > 0");
  return m.ET_M + m.EX2 / (2.0 * m.EX) + (m.EM2 / (2.0 * m.EM) - 0.5) * m.EX;
}

/// E[T | T <= w] for the tandem delay (hypoexponential, or Erlang-2 when tied).
inline double conditional_delay_mean(const MM1Params& p) {
  require_stable(p);
  const double a = p.a(), b = p.b(), w = p.w;
  if (std::isinf(w)) return 1.0 / a + 1.0 / b;
  const double zt = p.zeta_t(), zc = p.zeta_c();
  if (rates_tied(p.mu_t, p.mu_c)) {
    const double den = 1.0 - zt * (1.0 + a * w);
    return (2.0 / a - (2.0 / a + 2.0 * w + a * w * w) * zt) / den;
  }
  const double num = (1.0 - zt * (1.0 + a * w)) / (a * a) - (1.0 - zc * (1.0 + b * w)) / (b * b);
  const double den = (1.0 - zt) / a - (1.0 - zc) / b;
  return num / den;
}

/// Hard-deadline approximation; +infinity at w = 0 where no task is valid.
inline double theta_hard_mm1_approx(const MM1Params& p) {
  require_stable(p);
  if (p.w == 0.0) return std::numeric_limits<double>::infinity();
  const double l = p.lambda, mt = p.mu_t, mc = p.mu_c, a = p.a(), b = p.b();
  const double zt = p.zeta_t(), zc = p.zeta_c();
  if (rates_tied(mt, mc)) {
    const double valid = std::isinf(p.w) ? 1.0 : 1.0 - zt * (1.0 + a * p.w);
    return conditional_delay_mean(p) + 1.0 / (l * valid);
  }
  return conditional_delay_mean(p) + (mc - mt) / (l * (b * (1.0 - zt) - a * (1.0 - zc)));
}

inline double throughput_mm1_approx(const MM1Params& p) {
  require_stable(p);
  if (p.w == 0.0) return 0.0;
  const double l = p.lambda, a = p.a(), b = p.b(), zt = p.zeta_t(), zc = p.zeta_c();
  if (rates_tied(p.mu_t, p.mu_c)) return std::isinf(p.w) ? l : l * (1.0 - (1.0 + a * p.w) * zt);
  return l * (b * (1.0 - zt) - a * (1.0 - zc)) / (p.mu_c - p.mu_t);
}

/// Moments of a geometric M on {1, 2, ...} with success probability p.
inline MomentInputs geometric_m_moments(MomentInputs m, double p_valid) {
  if (!(p_valid > 0.0 && p_valid <= 1.0)) throw NumericError("geometric M needs success probability in (0, 1]");
  m.EM = 1.0 / p_valid;
  m.EM2 = (2.0 - p_valid) / (p_valid * p_valid);
  return m;
}

/// Exponential-X, geometric-M inputs under the independence approximation.
inline MomentInputs mm1_hard_moments(const MM1Params& p) {
  MomentInputs m;
  m.EX = 1.0 / p.lambda;
  m.EX2 = 2.0 / (p.lambda * p.lambda);
  m.eps_w = epsilon_w(p);
  m.ET_M = conditional_delay_mean(p);
  return geometric_m_moments(m, 1.0 - m.eps_w);
}

}  // namespace aoc

#endif  // AOC_CLOSED_FORM_HPP
