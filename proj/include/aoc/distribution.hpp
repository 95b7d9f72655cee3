#ifndef AOC_DISTRIBUTION_HPP
#define AOC_DISTRIBUTION_HPP

#include <cmath>
#include <numeric>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "aoc/csv.hpp"
#include "aoc/errors.hpp"
#include "aoc/grid.hpp"
#include "aoc/rng.hpp"

namespace aoc {

struct Exponential {
  double rate = 1.0;
};
struct Deterministic {
  double value = 1.0;
};
struct Gamma {
  double shape = 1.0;
  double rate = 1.0;
};
struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};
struct Hyperexponential {
  std::vector<double> weights;
  std::vector<double> rates;
};

/// Parametric law for inter-arrival and service times.
using DistributionSpec = std::variant<Exponential, Deterministic, Gamma, Uniform, Hyperexponential>;

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

inline void validate(const DistributionSpec& spec) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite and > 0");
  };
  std::visit(overloaded{
                 [&](const Exponential& d) { positive(d.rate, "exp.rate"); },
                 [&](const Deterministic& d) { positive(d.value, "det.value"); },
                 [&](const Gamma& d) {
                   positive(d.shape, "gamma.shape");
                   positive(d.rate, "gamma.rate");
                 },
                 [&](const Uniform& d) {
                   if (!(d.lo >= 0.0) || !(d.lo < d.hi) || !std::isfinite(d.hi))
                     throw ConfigError("uniform requires 0 <= lo < hi");
                 },
                 [&](const Hyperexponential& d) {
                   if (d.weights.empty() || d.weights.size() != d.rates.size())
                     throw ConfigError("hyperexp needs equally many weights and rates");
                   double s = 0.0;
                   for (double w : d.weights) {
                     if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("hyperexp weights must lie in [0,1]");
                     s += w;
                   }
                   if (std::abs(s - 1.0) > 1e-12) throw ConfigError("hyperexp weights must sum to 1");
                   for (double r : d.rates) positive(r, "hyperexp.rate");
                 },
             },
             spec);
}

inline double mean(const DistributionSpec& spec) {
  return std::visit(overloaded{
                        [](const Exponential& d) { return 1.0 / d.rate; },
                        [](const Deterministic& d) { return d.value; },
                        [](const Gamma& d) { return d.shape / d.rate; },
                        [](const Uniform& d) { return 0.5 * (d.lo + d.hi); },
                        [](const Hyperexponential& d) {
                          double m = 0.0;
                          for (std::size_t i = 0; i < d.rates.size(); ++i) m += d.weights[i] / d.rates[i];
                          return m;
                        },
                    },
                    spec);
}

inline double second_moment(const DistributionSpec& spec) {
  return std::visit(overloaded{
                        [](const Exponential& d) { return 2.0 / (d.rate * d.rate); },
                        [](const Deterministic& d) { return d.value * d.value; },
                        [](const Gamma& d) { return d.shape * (d.shape + 1.0) / (d.rate * d.rate); },
                        [](const Uniform& d) { return (d.lo * d.lo + d.lo * d.hi + d.hi * d.hi) / 3.0; },
                        [](const Hyperexponential& d) {
                          double m = 0.0;
                          for (std::size_t i = 0; i < d.rates.size(); ++i)
                            m += 2.0 * d.weights[i] / (d.rates[i] * d.rates[i]);
                          return m;
                        },
                    },
                    spec);
}

inline double variance(const DistributionSpec& spec) {
  const double m = mean(spec);
  return second_moment(spec) - m * m;
}

namespace detail {

inline double sample_gamma(double shape, double rate, RngStream& rng) {
  if (shape < 1.0) {
    // Boost a shape < 1 draw from shape + 1 (Marsaglia and Tsang, 2000).
    const double g = sample_gamma(shape + 1.0, 1.0, rng);
    return g * std::pow(rng.uniform(), 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0, v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

}  // namespace detail

/// One variate from `spec`; advances `rng`. `spec` is assumed validated.
inline double sample(const DistributionSpec& spec, RngStream& rng) {
  return std::visit(overloaded{
                        [&](const Exponential& d) { return -std::log(rng.uniform()) / d.rate; },
                        [&](const Deterministic& d) { return d.value; },
                        [&](const Gamma& d) { return detail::sample_gamma(d.shape, d.rate, rng); },
                        [&](const Uniform& d) { return d.lo + (d.hi - d.lo) * rng.uniform(); },
                        [&](const Hyperexponential& d) {
                          const double u = rng.uniform();
                          std::size_t k = 0;
                          double acc = d.weights[0];
                          while (u >= acc && k + 1 < d.weights.size()) acc += d.weights[++k];
                          return -std::log(rng.uniform()) / d.rates[k];
                        },
                    },
                    spec);
}

/// Probability density at x. Deterministic laws have none.
inline double pdf(const DistributionSpec& spec, double x) {
  return std::visit(overloaded{
                        [&](const Exponential& d) { return x < 0 ? 0.0 : d.rate * std::exp(-d.rate * x); },
                        [&](const Deterministic&) -> double {
                          throw ConfigError("deterministic law has no density");
                        },
                        [&](const Gamma& d) {
                          if (x < 0) return 0.0;
                          if (x == 0) {
                            if (d.shape < 1) return HUGE_VAL;
                            return d.shape == 1 ? d.rate : 0.0;
                          }
                          return std::exp((d.shape - 1) * std::log(x) - d.rate * x + d.shape * std::log(d.rate) -
                                          std::lgamma(d.shape));
                        },
                        [&](const Uniform& d) { return (x < d.lo || x > d.hi) ? 0.0 : 1.0 / (d.hi - d.lo); },
                        [&](const Hyperexponential& d) {
                          if (x < 0) return 0.0;
                          double f = 0.0;
                          for (std::size_t i = 0; i < d.rates.size(); ++i)
                            f += d.weights[i] * d.rates[i] * std::exp(-d.rates[i] * x);
                          return f;
                        },
                    },
                    spec);
}

/// Tabulate the density of `spec` at n uniformly spaced points on [lo, hi].
/// The grid's trapezoidal mass is available as DensityGrid::total_mass().
inline DensityGrid density_grid(const DistributionSpec& spec, double lo, double hi, std::size_t n) {
  validate(spec);
  if (std::holds_alternative<Deterministic>(spec)) throw ConfigError("deterministic law has no density to tabulate");
  detail::require(lo >= 0.0, "density_grid requires lo >= 0");
  detail::require(hi > lo, "density_grid requires hi > lo");
  detail::require(n >= 2, "density_grid requires n >= 2");
  std::vector<double> v(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = i + 1 == n ? hi : lo + h * static_cast<double>(i);
    v[i] = pdf(spec, xi);
    if (!std::isfinite(v[i])) throw NumericError("non-finite density at x = " + format_double(xi));
  }
  return DensityGrid(lo, hi, std::move(v));
}

/// Config-file form, e.g. {kind = "exp", rate = 3}.
inline std::string describe(const DistributionSpec& spec) {
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s + "]";
  };
  return std::visit(overloaded{
                        [](const Exponential& d) { return "{kind = \"exp\", rate = " + format_double(d.rate) + "}"; },
                        [](const Deterministic& d) {
                          return "{kind = \"det\", value = " + format_double(d.value) + "}";
                        },
                        [](const Gamma& d) {
                          return "{kind = \"gamma\", shape = " + format_double(d.shape) +
                                 ", rate = " + format_double(d.rate) + "}";
                        },
                        [](const Uniform& d) {
                          return "{kind = \"uniform\", lo = " + format_double(d.lo) + ", hi = " + format_double(d.hi) +
                                 "}";
                        },
                        [&](const Hyperexponential& d) {
                          return "{kind = \"hyperexp\", weights = " + list(d.weights) + ", rates = " + list(d.rates) +
                                 "}";
                        },
                    },
                    spec);
}

}  // namespace aoc

#endif  // AOC_DISTRIBUTION_HPP
