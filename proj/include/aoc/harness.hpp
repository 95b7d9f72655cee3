#ifndef AOC_HARNESS_HPP
#define AOC_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aoc/closed_form.hpp"
#include "aoc/config.hpp"
#include "aoc/csv.hpp"
#include "aoc/errors.hpp"
#include "aoc/parallel.hpp"
#include "aoc/pareto.hpp"
#include "aoc/rng.hpp"
#include "aoc/slotted.hpp"
#include "aoc/stats.hpp"
#include "aoc/svg.hpp"
#include "aoc/tandem.hpp"

namespace aoc {

inline constexpr const char* kVersion = "1.0.0";

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* d = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = d[v & 15];
  return s;
}

// ---------------------------------------------------------------- comparison

using ParamList = std::vector<std::pair<std::string, double>>;

inline std::string param_key(const ParamList& p) {
  std::string k;
  for (const auto& [name, v] : p) {
    if (!k.empty()) k += ';';
    k += name + "=" + format_double(v);
  }
  return k;
}

/// Which side of the truth the analytic value claims to sit on.
enum class Bound { none, lower, upper };

inline const char* to_string(Bound b) {
  switch (b) {
    case Bound::lower: return "lower";
    case Bound::upper: return "upper";
    default: return "none";
  }
}

struct AnalyticRow {
  ParamList params;
  double value = 0;
  std::string error;
};

struct SimulatedRow {
  ParamList params;
  Summary sim;
  std::string error;
};

struct ComparisonRow {
  ParamList params;
  double analytic = 0;
  Summary sim;
  double rel_err = 0;
  Bound bound = Bound::none;
  bool bound_respected = true;      // point estimate on the claimed side
  bool bound_ci_consistent = true;  // 95% interval reaches the claimed side
  std::string error;
};

inline std::vector<ComparisonRow> compare_report(const std::vector<AnalyticRow>& analytic,
                                                 const std::vector<SimulatedRow>& simulated, Bound bound) {
  if (analytic.empty()) throw ConfigError("compare_report: empty analytic set");
  std::map<std::string, const SimulatedRow*> sim;
  for (const auto& s : simulated)
    if (!sim.emplace(param_key(s.params), &s).second)
      throw ConfigError("compare_report: duplicate simulated key " + param_key(s.params));
  std::set<std::string> seen;
  std::vector<std::string> orphans;
  std::vector<ComparisonRow> out;
  for (const auto& a : analytic) {
    const std::string key = param_key(a.params);
    if (!seen.insert(key).second) throw ConfigError("compare_report: duplicate analytic key " + key);
    auto it = sim.find(key);
    if (it == sim.end()) {
      orphans.push_back("analytic{" + key + "}");
      continue;
    }
    const SimulatedRow& s = *it->second;
    ComparisonRow row;
    row.params = a.params;
    row.analytic = a.value;
    row.sim = s.sim;
    row.bound = bound;
    row.error = !a.error.empty() ? a.error : s.error;
    row.rel_err = std::abs(s.sim.mean - a.value) / std::max(std::abs(a.value), std::numeric_limits<double>::epsilon());
    if (bound == Bound::lower) {
      row.bound_respected = s.sim.mean >= a.value;
      row.bound_ci_consistent = s.sim.ci95_hi >= a.value;
    } else if (bound == Bound::upper) {
      row.bound_respected = s.sim.mean <= a.value;
      row.bound_ci_consistent = s.sim.ci95_lo <= a.value;
    }
    out.push_back(std::move(row));
  }
  for (const auto& s : simulated)
    if (!seen.count(param_key(s.params))) orphans.push_back("simulated{" + param_key(s.params) + "}");
  if (!orphans.empty()) {
    std::string msg = "compare_report: unmatched keys:";
    for (const auto& o : orphans) msg += " " + o;
    throw ConfigError(msg);
  }
  return out;
}

inline std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '"') c = ';';
  return s;
}

inline void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  std::vector<std::string> header;
  if (!rows.empty())
    for (const auto& [name, v] : rows.front().params) header.push_back(name);
  for (const char* h : {"analytic", "sim_mean", "sim_ci_lo", "sim_ci_hi", "n", "rel_err", "bound", "bound_respected",
                        "bound_ci_consistent", "status"})
    header.emplace_back(h);
  CsvWriter w(os, header);
  for (const auto& r : rows) {
    std::vector<std::string> cells;
    for (const auto& [name, v] : r.params) cells.push_back(format_double(v));
    cells.push_back(format_double(r.analytic));
    cells.push_back(format_double(r.sim.mean));
    cells.push_back(format_double(r.sim.ci95_lo));
    cells.push_back(format_double(r.sim.ci95_hi));
    cells.push_back(std::to_string(r.sim.n));
    cells.push_back(format_double(r.rel_err));
    cells.push_back(to_string(r.bound));
    cells.push_back(r.bound_respected ? "1" : "0");
    cells.push_back(r.bound_ci_consistent ? "1" : "0");
    cells.push_back(r.error.empty() ? "ok" : "error: " + csv_safe(r.error));
    w.row_vec(cells);
  }
}

// ---------------------------------------------------------------- config

enum class ExperimentKind { fig6_soft_sweep, fig7_hard_sweep, fig8_tradeoff, fig9_slotted, custom };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::fig6_soft_sweep: return "fig6_soft_sweep";
    case ExperimentKind::fig7_hard_sweep: return "fig7_hard_sweep";
    case ExperimentKind::fig8_tradeoff: return "fig8_tradeoff";
    case ExperimentKind::fig9_slotted: return "fig9_slotted";
    default: return "custom";
  }
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::fig6_soft_sweep, ExperimentKind::fig7_hard_sweep, ExperimentKind::fig8_tradeoff,
                 ExperimentKind::fig9_slotted, ExperimentKind::custom})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

struct TandemSweep {
  std::vector<double> mu_t{2.0, 3.0};
  std::vector<double> mu_c{3.0};
  std::vector<double> w{0.5};
  std::vector<double> lambda{0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8};
  std::uint64_t task_count = 1'000'000;
};

struct ParetoSweep {
  double mu_t = 2.0;
  double mu_c = 3.0;
  std::vector<double> w{0.25, 0.5, 1.0};
  std::vector<double> u;  // empty: u_points fractions of the largest throughput
  std::size_t u_points = 20;
  std::size_t curve_points = 200;
  std::size_t resolution = 200;
  bool simulate = false;
  std::uint64_t task_count = 200'000;
};

struct SlottedSweep {
  std::size_t sources = 5;
  double mu_t = 0.5;
  double beta = 1.0;
  std::vector<double> q;  // empty: uniform over idle and every source
  std::vector<double> w{4.0, 10.0};
  std::vector<double> lambda{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<Policy> policies{Policy::maxweight, Policy::maf, Policy::randomized};
  std::vector<DeadlineKind> deadlines{DeadlineKind::soft, DeadlineKind::hard};
  std::uint64_t slots = 100'000;
  bool preempt_in_service = true;
};

struct CustomRun {
  DistributionSpec arrival = Exponential{1.0};
  DistributionSpec transmit = Exponential{2.0};
  DistributionSpec compute = Exponential{3.0};
  double w = 0.5;
  DeadlineKind deadline = DeadlineKind::soft;
  std::uint64_t task_count = 1'000'000;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::fig6_soft_sweep;
  std::uint64_t seed = 1;
  std::size_t replications = 5;
  std::filesystem::path out_dir = "out";
  TandemSweep tandem;
  ParetoSweep pareto;
  SlottedSweep slotted;
  CustomRun custom;
};

inline void validate(const ExperimentConfig& c) {
  auto positive_all = [](const std::vector<double>& v, const char* what, bool allow_inf = false) {
    detail::require(!v.empty(), std::string(what) + " grid must be non-empty");
    for (double x : v)
      detail::require(x > 0.0 && (allow_inf || std::isfinite(x)), std::string(what) + " values must be positive");
  };
  detail::require(c.replications >= 1, "replications must be >= 1");
  switch (c.kind) {
    case ExperimentKind::fig6_soft_sweep:
    case ExperimentKind::fig7_hard_sweep:
      positive_all(c.tandem.mu_t, "mu_t");
      positive_all(c.tandem.mu_c, "mu_c");
      positive_all(c.tandem.w, "w", true);
      positive_all(c.tandem.lambda, "lambda");
      detail::require(c.tandem.task_count >= 100, "task_count must be >= 100");
      break;
    case ExperimentKind::fig8_tradeoff: {
      detail::require(c.pareto.mu_t > 0 && c.pareto.mu_c > 0, "pareto rates must be positive");
      positive_all(c.pareto.w, "w");
      for (double u : c.pareto.u) detail::require(u >= 0.0, "u values must be >= 0");
      detail::require(std::is_sorted(c.pareto.u.begin(), c.pareto.u.end()), "u grid must be ascending");
      detail::require(!c.pareto.u.empty() || c.pareto.u_points >= 2, "u_points must be >= 2");
      detail::require(c.pareto.curve_points >= 2, "curve_points must be >= 2");
      detail::require(c.pareto.resolution >= 16, "resolution must be >= 16");
      detail::require(c.pareto.task_count >= 100, "task_count must be >= 100");
      break;
    }
    case ExperimentKind::fig9_slotted: {
      const auto& s = c.slotted;
      detail::require(s.sources >= 1, "sources must be >= 1");
      detail::require(s.mu_t > 0 && s.mu_t <= 1, "slotted mu_t must lie in (0, 1]");
      detail::require(s.beta > 0, "beta must be positive");
      detail::require(s.q.empty() || s.q.size() == s.sources + 1, "q must list idle then one entry per source");
      positive_all(s.w, "w");
      for (double l : s.lambda) detail::require(l > 0 && l <= 1, "slotted lambda must lie in (0, 1]");
      detail::require(!s.lambda.empty(), "lambda grid must be non-empty");
      detail::require(!s.policies.empty() && !s.deadlines.empty(), "policies and deadlines must be non-empty");
      detail::require(s.slots >= 10, "slots must be >= 10");
      break;
    }
    case ExperimentKind::custom:
      validate(c.custom.arrival);
      validate(c.custom.transmit);
      validate(c.custom.compute);
      detail::require(c.custom.w >= 0, "w must be >= 0");
      detail::require(c.custom.task_count >= 100, "task_count must be >= 100");
      break;
  }
}

inline ExperimentConfig parse_experiment(const config::Document& doc) {
  // Re-raise value errors at the position of the offending key.
  auto at = [&](const char* section, const char* key, auto&& fn) {
    try {
      return fn();
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind(doc.file() + ":", 0) == 0) throw;
      doc.error_at(section, key, msg);
    }
  };
  auto positive = [&](const char* section, const char* key, const std::vector<double>& v, bool allow_inf = false) {
    for (double x : v)
      if (!(x > 0.0) || (!allow_inf && !std::isfinite(x)))
        doc.error_at(section, key, std::string("'") + key + "' values must be positive");
    return v;
  };
  auto in_unit = [&](const char* section, const char* key, const std::vector<double>& v) {
    for (double x : v)
      if (!(x > 0.0 && x <= 1.0)) doc.error_at(section, key, std::string("'") + key + "' values must lie in (0, 1]");
    return v;
  };

  ExperimentConfig c;
  c.kind = at("experiment", "kind", [&] { return parse_experiment_kind(doc.string("experiment", "kind")); });
  c.seed = doc.count("experiment", "seed", 1);
  c.replications = doc.count("experiment", "replications", 5);
  if (c.replications < 1) doc.error_at("experiment", "replications", "'replications' must be >= 1");
  c.out_dir = doc.string("experiment", "out", "out");
  switch (c.kind) {
    case ExperimentKind::fig6_soft_sweep:
    case ExperimentKind::fig7_hard_sweep: {
      auto& t = c.tandem;
      t.mu_t = positive("tandem", "mu_t", doc.numbers("tandem", "mu_t", t.mu_t));
      t.mu_c = positive("tandem", "mu_c", doc.numbers("tandem", "mu_c", t.mu_c));
      t.w = positive("tandem", "w", doc.numbers("tandem", "w", t.w), true);
      t.lambda = positive("tandem", "lambda", doc.numbers("tandem", "lambda", t.lambda));
      t.task_count = doc.count("tandem", "task_count", t.task_count);
      break;
    }
    case ExperimentKind::fig8_tradeoff: {
      auto& p = c.pareto;
      p.mu_t = positive("pareto", "mu_t", {doc.number("pareto", "mu_t", p.mu_t)})[0];
      p.mu_c = positive("pareto", "mu_c", {doc.number("pareto", "mu_c", p.mu_c)})[0];
      p.w = positive("pareto", "w", doc.numbers("pareto", "w", p.w));
      if (doc.has("pareto", "u")) p.u = doc.numbers("pareto", "u");
      p.u_points = doc.count("pareto", "u_points", p.u_points);
      p.curve_points = doc.count("pareto", "curve_points", p.curve_points);
      p.resolution = doc.count("pareto", "resolution", p.resolution);
      p.simulate = doc.boolean("pareto", "simulate", p.simulate);
      p.task_count = doc.count("pareto", "task_count", p.task_count);
      break;
    }
    case ExperimentKind::fig9_slotted: {
      auto& s = c.slotted;
      s.sources = doc.count("slotted", "sources", s.sources);
      s.mu_t = in_unit("slotted", "mu_t", {doc.number("slotted", "mu_t", s.mu_t)})[0];
      s.beta = positive("slotted", "beta", {doc.number("slotted", "beta", s.beta)})[0];
      if (doc.has("slotted", "q")) s.q = doc.numbers("slotted", "q");
      s.w = positive("slotted", "w", doc.numbers("slotted", "w", s.w));
      s.lambda = in_unit("slotted", "lambda", doc.numbers("slotted", "lambda", s.lambda));
      if (doc.has("slotted", "policies"))
        s.policies = at("slotted", "policies", [&] {
          std::vector<Policy> out;
          for (const auto& name : doc.strings("slotted", "policies")) out.push_back(parse_policy(name));
          return out;
        });
      if (doc.has("slotted", "deadlines"))
        s.deadlines = at("slotted", "deadlines", [&] {
          std::vector<DeadlineKind> out;
          for (const auto& name : doc.strings("slotted", "deadlines")) out.push_back(parse_deadline(name));
          return out;
        });
      s.slots = doc.count("slotted", "slots", s.slots);
      s.preempt_in_service = doc.boolean("slotted", "preempt_in_service", s.preempt_in_service);
      break;
    }
    case ExperimentKind::custom: {
      auto& u = c.custom;
      u.arrival = doc.distribution("custom", "arrival", u.arrival);
      u.transmit = doc.distribution("custom", "transmit", u.transmit);
      u.compute = doc.distribution("custom", "compute", u.compute);
      u.w = doc.number("custom", "w", u.w);
      u.deadline = at("custom", "deadline", [&] { return parse_deadline(doc.string("custom", "deadline", "soft")); });
      u.task_count = doc.count("custom", "task_count", u.task_count);
      break;
    }
  }
  doc.finish();
  try {
    validate(c);
  } catch (const ConfigError& e) {
    throw ConfigError(doc.file() + ": " + e.what());
  }
  return c;
}

inline ExperimentConfig load_experiment(const std::string& path) { return parse_experiment(config::Document::load(path)); }

namespace harness_detail {

inline std::string num_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s + "]";
}

inline std::string dist_toml(const DistributionSpec& d) {
  return std::visit(overloaded{
                        [](const Exponential& e) { return "{kind = \"exp\", rate = " + format_double(e.rate) + "}"; },
                        [](const Deterministic& e) { return "{kind = \"det\", value = " + format_double(e.value) + "}"; },
                        [](const Gamma& e) {
                          return "{kind = \"gamma\", shape = " + format_double(e.shape) +
                                 ", rate = " + format_double(e.rate) + "}";
                        },
                        [](const Uniform& e) {
                          return "{kind = \"uniform\", lo = " + format_double(e.lo) + ", hi = " + format_double(e.hi) +
                                 "}";
                        },
                        [](const Hyperexponential& e) {
                          return "{kind = \"hyperexp\", weights = " + num_list(e.weights) +
                                 ", rates = " + num_list(e.rates) + "}";
                        },
                    },
                    d);
}

}  // namespace harness_detail

/// Canonical text of the effective configuration. Parsing it back yields the
/// same config; the output directory is excluded so reruns can target a new
/// directory without changing the hash.
inline std::string canonical_text(const ExperimentConfig& c) {
  using harness_detail::num_list;
  std::ostringstream os;
  os << "[experiment]\nkind = \"" << to_string(c.kind) << "\"\nseed = " << c.seed
     << "\nreplications = " << c.replications << "\n";
  switch (c.kind) {
    case ExperimentKind::fig6_soft_sweep:
    case ExperimentKind::fig7_hard_sweep:
      os << "\n[tandem]\nmu_t = " << num_list(c.tandem.mu_t) << "\nmu_c = " << num_list(c.tandem.mu_c)
         << "\nw = " << num_list(c.tandem.w) << "\nlambda = " << num_list(c.tandem.lambda)
         << "\ntask_count = " << c.tandem.task_count << "\n";
      break;
    case ExperimentKind::fig8_tradeoff: {
      const auto& p = c.pareto;
      os << "\n[pareto]\nmu_t = " << format_double(p.mu_t) << "\nmu_c = " << format_double(p.mu_c)
         << "\nw = " << num_list(p.w) << "\n";
      if (!p.u.empty()) os << "u = " << num_list(p.u) << "\n";
      os << "u_points = " << p.u_points << "\ncurve_points = " << p.curve_points << "\nresolution = " << p.resolution
         << "\nsimulate = " << (p.simulate ? "true" : "false") << "\ntask_count = " << p.task_count << "\n";
      break;
    }
    case ExperimentKind::fig9_slotted: {
      const auto& s = c.slotted;
      os << "\n[slotted]\nsources = " << s.sources << "\nmu_t = " << format_double(s.mu_t)
         << "\nbeta = " << format_double(s.beta) << "\n";
      if (!s.q.empty()) os << "q = " << num_list(s.q) << "\n";
      os << "w = " << num_list(s.w) << "\nlambda = " << num_list(s.lambda) << "\npolicies = [";
      for (std::size_t i = 0; i < s.policies.size(); ++i) os << (i ? ", " : "") << '"' << to_string(s.policies[i]) << '"';
      os << "]\ndeadlines = [";
      for (std::size_t i = 0; i < s.deadlines.size(); ++i)
        os << (i ? ", " : "") << '"' << to_string(s.deadlines[i]) << '"';
      os << "]\nslots = " << s.slots << "\npreempt_in_service = " << (s.preempt_in_service ? "true" : "false") << "\n";
      break;
    }
    case ExperimentKind::custom: {
      const auto& u = c.custom;
      os << "\n[custom]\narrival = " << harness_detail::dist_toml(u.arrival)
         << "\ntransmit = " << harness_detail::dist_toml(u.transmit)
         << "\ncompute = " << harness_detail::dist_toml(u.compute) << "\nw = " << format_double(u.w)
         << "\ndeadline = \"" << to_string(u.deadline) << "\"\ntask_count = " << u.task_count << "\n";
      break;
    }
  }
  return os.str();
}

inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a64(canonical_text(c))); }

// ---------------------------------------------------------------- runner

struct SlottedCell {
  DeadlineKind deadline;
  double w, lambda;
  Policy policy;
  std::vector<double> per_replication;
  Summary stats;
  std::string error;
};

struct ExperimentResult {
  std::vector<std::filesystem::path> files;
  std::size_t failed_rows = 0;
  std::map<std::string, std::vector<ComparisonRow>> comparisons;
  std::vector<SlottedCell> slotted;
  std::vector<ParetoPoint> frontier;
};

namespace harness_detail {

inline void write_file(ExperimentResult& res, const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << body;
  if (!f) throw ConfigError("write failed for '" + path.string() + "'");
  res.files.push_back(path);
}

inline std::string svg_from_csv(const std::string& csv_text, const PlotSpec& spec) {
  std::istringstream in(csv_text);
  return render_plot(read_csv(in, "plot"), spec);
}

struct TandemJob {
  std::size_t point = 0, rep = 0;
  TandemConfig cfg;
};

struct TandemOutcome {
  TandemResult res;
  std::string error;
};

inline std::vector<TandemOutcome> run_tandem_jobs(const std::vector<TandemJob>& jobs, unsigned threads) {
  return parallel_map<TandemOutcome>(jobs.size(), threads, [&](std::size_t j) {
    TandemOutcome o;
    try {
      o.res = run_tandem(jobs[j].cfg);
      if (o.res.divergent) o.error = "no informative task";
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    return o;
  });
}

inline TandemConfig mm1_tandem(double lambda, double mu_t, double mu_c, double w, DeadlineKind kind,
                               std::uint64_t tasks, std::uint64_t seed, std::uint64_t stream) {
  TandemConfig t;
  t.arrival = Exponential{lambda};
  t.transmit = Exponential{mu_t};
  t.compute = Exponential{mu_c};
  t.w = w;
  t.deadline = kind;
  t.task_count = tasks;
  t.seed = seed;
  t.stream_id = stream;
  return t;
}

/// Shared body of the two M/M/1 sweeps.
inline void run_mm1_sweep(const ExperimentConfig& c, unsigned threads, ExperimentResult& res) {
  const bool soft = c.kind == ExperimentKind::fig6_soft_sweep;
  const DeadlineKind kind = soft ? DeadlineKind::soft : DeadlineKind::hard;
  const auto& t = c.tandem;
  std::vector<MM1Params> points;
  for (double mc : t.mu_c)
    for (double mt : t.mu_t)
      for (double w : t.w)
        for (double l : t.lambda) points.push_back({l, mt, mc, w});

  std::vector<TandemJob> jobs;
  for (std::size_t p = 0; p < points.size(); ++p)
    for (std::size_t r = 0; r < c.replications; ++r)
      jobs.push_back({p, r,
                      mm1_tandem(points[p].lambda, points[p].mu_t, points[p].mu_c, points[p].w, kind, t.task_count,
                                 c.seed, derive_stream_id({soft ? 6u : 7u, p, r}))});
  const auto outcomes = run_tandem_jobs(jobs, threads);

  std::vector<AnalyticRow> an_theta, an_xi;
  std::vector<SimulatedRow> sim_theta, sim_xi;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto& q = points[p];
    const ParamList params{{"mu_t", q.mu_t}, {"mu_c", q.mu_c}, {"w", q.w}, {"lambda", q.lambda}};
    AnalyticRow at{params, std::numeric_limits<double>::quiet_NaN(), {}}, ax = at;
    try {
      if (soft) {
        at.value = theta_soft_mm1(q);
      } else {
        at.value = theta_hard_mm1_approx(q);
        ax.value = throughput_mm1_approx(q);
      }
    } catch (const std::exception& e) {
      at.error = ax.error = e.what();
    }
    std::vector<double> th, xi;
    std::string err;
    for (std::size_t r = 0; r < c.replications; ++r) {
      const auto& o = outcomes[p * c.replications + r];
      if (!o.error.empty()) {
        err = o.error;
        continue;
      }
      th.push_back(o.res.theta);
      xi.push_back(o.res.throughput);
    }
    sim_theta.push_back({params, summarize(th), err});
    sim_xi.push_back({params, summarize(xi), err});
    an_theta.push_back(at);
    an_xi.push_back(ax);
  }

  auto emit = [&](const std::string& name, const std::vector<ComparisonRow>& rows, const std::string& ylabel,
                  const std::string& title) {
    std::ostringstream csv;
    write_comparison_csv(csv, rows);
    write_file(res, c.out_dir / (name + ".csv"), csv.str());
    std::ostringstream plot;
    CsvWriter pw(plot, {"series", "lambda", "value"});
    for (const char* which : {"analytic", "simulated"})
      for (const auto& r : rows) {
        const std::string series = std::string(which) + " mu_t=" + format_double(r.params[0].second) +
                                   " mu_c=" + format_double(r.params[1].second) +
                                   " w=" + format_double(r.params[2].second);
        pw.row(series, r.params[3].second, std::string(which) == "analytic" ? r.analytic : r.sim.mean);
      }
    write_file(res, c.out_dir / (name + "_plot.csv"), plot.str());
    write_file(res, c.out_dir / (name + ".svg"),
               svg_from_csv(plot.str(), {"lambda", "value", "series", title, "arrival rate", ylabel, 760, 440}));
    for (const auto& r : rows)
      if (!r.error.empty()) ++res.failed_rows;
    res.comparisons[name] = rows;
  };

  if (soft) {
    emit("fig6_soft", compare_report(an_theta, sim_theta, Bound::none), "average AoC", "Average AoC, soft deadline");
  } else {
    emit("fig7_hard", compare_report(an_theta, sim_theta, Bound::lower), "average AoC", "Average AoC, hard deadline");
    auto rows = compare_report(an_xi, sim_xi, Bound::upper);
    // failed rows already counted once via the AoC table
    const std::size_t before = res.failed_rows;
    emit("fig7_throughput", rows, "computation throughput", "Computation throughput, hard deadline");
    res.failed_rows = before;
  }
}

inline void run_tradeoff(const ExperimentConfig& c, unsigned threads, ExperimentResult& res) {
  const auto& p = c.pareto;
  std::ostringstream curve;
  CsvWriter cw(curve, {"w", "lambda", "theta", "xi"});
  std::ostringstream front;
  CsvWriter fw(front, {"w", "u", "lambda_star", "theta", "xi", "feasible"});
  std::vector<std::pair<double, ParetoPoint>> feasible_points;
  for (double w : p.w) {
    ParetoQuery base{p.mu_t, p.mu_c, w, 0.0, 0.0, 0.0, p.resolution};
    validate(base);
    double xi_max = 0.0;
    for (double lambda : probe_grid(base, p.curve_points)) {
      const auto [theta, xi] = pareto_eval(base, lambda);
      xi_max = std::max(xi_max, xi);
      cw.row(w, lambda, theta, xi);
    }
    std::vector<double> u = p.u;
    if (u.empty())
      for (std::size_t k = 0; k < p.u_points; ++k)
        u.push_back(xi_max * static_cast<double>(k) / static_cast<double>(p.u_points));
    for (const auto& pt : frontier(base, u)) {
      fw.row(w, pt.u, pt.lambda_star, pt.theta, pt.xi, pt.feasible);
      res.frontier.push_back(pt);
      if (pt.feasible) feasible_points.emplace_back(w, pt);
    }
  }
  write_file(res, c.out_dir / "fig8_curve.csv", curve.str());
  write_file(res, c.out_dir / "fig8_frontier.csv", front.str());
  write_file(res, c.out_dir / "fig8_curve.svg",
             svg_from_csv(curve.str(), {"xi", "theta", "w", "AoC versus computation throughput", "throughput",
                                        "average AoC (hard, approximation)", 760, 440}));
  if (!p.simulate) return;

  std::vector<TandemJob> jobs;
  for (std::size_t k = 0; k < feasible_points.size(); ++k)
    for (std::size_t r = 0; r < c.replications; ++r)
      jobs.push_back({k, r,
                      mm1_tandem(feasible_points[k].second.lambda_star, p.mu_t, p.mu_c, feasible_points[k].first,
                                 DeadlineKind::hard, p.task_count, c.seed, derive_stream_id({8u, k, r}))});
  const auto outcomes = run_tandem_jobs(jobs, threads);
  std::vector<AnalyticRow> an;
  std::vector<SimulatedRow> sim;
  for (std::size_t k = 0; k < feasible_points.size(); ++k) {
    const auto& [w, pt] = feasible_points[k];
    const ParamList params{{"w", w}, {"u", pt.u}, {"lambda", pt.lambda_star}};
    std::vector<double> th;
    std::string err;
    for (std::size_t r = 0; r < c.replications; ++r) {
      const auto& o = outcomes[k * c.replications + r];
      if (o.error.empty())
        th.push_back(o.res.theta);
      else
        err = o.error;
    }
    an.push_back({params, pt.theta, {}});
    sim.push_back({params, summarize(th), err});
  }
  if (an.empty()) return;
  auto rows = compare_report(an, sim, Bound::lower);
  std::ostringstream csv;
  write_comparison_csv(csv, rows);
  write_file(res, c.out_dir / "fig8_frontier_sim.csv", csv.str());
  for (const auto& r : rows)
    if (!r.error.empty()) ++res.failed_rows;
  res.comparisons["fig8_frontier_sim"] = std::move(rows);
}

inline void run_slotted_sweep(const ExperimentConfig& c, unsigned threads, ExperimentResult& res) {
  const auto& s = c.slotted;
  std::vector<SlottedCell> cells;
  std::vector<SlottedConfig> cfgs;
  for (auto kind : s.deadlines)
    for (std::size_t wi = 0; wi < s.w.size(); ++wi)
      for (std::size_t li = 0; li < s.lambda.size(); ++li)
        for (auto pol : s.policies) {
          auto sc = SlottedConfig::symmetric(s.sources, s.lambda[li], s.mu_t, s.w[wi], kind, pol, s.slots);
          sc.beta.assign(s.sources, s.beta);
          if (!s.q.empty()) sc.q = s.q;
          sc.seed = c.seed;
          // independent of policy and deadline: common random numbers across them
          sc.stream_id = derive_stream_id({9u, wi, li});
          sc.preempt_in_service = s.preempt_in_service;
          cfgs.push_back(sc);
          cells.push_back({kind, s.w[wi], s.lambda[li], pol, {}, {}, {}});
        }
  const std::size_t R = c.replications;
  struct Outcome {
    double mean = 0;
    std::string error;
  };
  const auto outcomes = parallel_map<Outcome>(cfgs.size() * R, threads, [&](std::size_t j) {
    Outcome o;
    try {
      SlottedConfig sc = cfgs[j / R];
      sc.stream_id = derive_stream_id({sc.stream_id, j % R});
      o.mean = run_slotted(sc).mean;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    return o;
  });
  for (std::size_t k = 0; k < cells.size(); ++k) {
    for (std::size_t r = 0; r < R; ++r) {
      const auto& o = outcomes[k * R + r];
      if (o.error.empty())
        cells[k].per_replication.push_back(o.mean);
      else
        cells[k].error = o.error;
    }
    cells[k].stats = summarize(cells[k].per_replication);
    if (!cells[k].error.empty()) ++res.failed_rows;
  }

  std::ostringstream main;
  {
    CsvWriter w(main, {"deadline", "w", "lambda", "policy", "mean", "ci_lo", "ci_hi", "n", "status"});
    for (const auto& cell : cells)
      w.row(std::string(to_string(cell.deadline)), cell.w, cell.lambda, std::string(to_string(cell.policy)),
            cell.stats.mean, cell.stats.ci95_lo, cell.stats.ci95_hi, cell.stats.n,
            cell.error.empty() ? std::string("ok") : "error: " + csv_safe(cell.error));
  }
  write_file(res, c.out_dir / "fig9_slotted.csv", main.str());

  auto find = [&](DeadlineKind k, double w, double l, Policy p) -> const SlottedCell* {
    for (const auto& cell : cells)
      if (cell.deadline == k && cell.w == w && cell.lambda == l && cell.policy == p) return &cell;
    return nullptr;
  };
  std::ostringstream gaps;
  {
    CsvWriter w(gaps, {"deadline", "w", "lambda", "comparison", "gap_mean", "ci_lo", "ci_hi"});
    for (auto kind : s.deadlines)
      for (double wv : s.w)
        for (double l : s.lambda)
          for (std::size_t a = 0; a + 1 < s.policies.size(); ++a) {
            const auto* lo = find(kind, wv, l, s.policies[a]);
            const auto* hi = find(kind, wv, l, s.policies[a + 1]);
            const Summary d = paired_difference(lo->per_replication, hi->per_replication);
            w.row(std::string(to_string(kind)), wv, l,
                  std::string(to_string(s.policies[a + 1])) + "-" + to_string(s.policies[a]), d.mean, d.ci95_lo,
                  d.ci95_hi);
          }
    if (s.deadlines.size() == 2)
      for (double wv : s.w)
        for (double l : s.lambda)
          for (auto pol : s.policies) {
            const Summary d = paired_difference(find(s.deadlines[0], wv, l, pol)->per_replication,
                                                find(s.deadlines[1], wv, l, pol)->per_replication);
            w.row(std::string(to_string(s.deadlines[1])) + "-" + to_string(s.deadlines[0]), wv, l,
                  std::string(to_string(pol)), d.mean, d.ci95_lo, d.ci95_hi);
          }
  }
  write_file(res, c.out_dir / "fig9_gaps.csv", gaps.str());

  for (auto kind : s.deadlines)
    for (double wv : s.w) {
      std::ostringstream panel;
      CsvWriter pw(panel, {"policy", "lambda", "mean"});
      for (const auto& cell : cells)
        if (cell.deadline == kind && cell.w == wv)
          pw.row(std::string(to_string(cell.policy)), cell.lambda, cell.stats.mean);
      const std::string stem = std::string("fig9_") + to_string(kind) + "_w" + format_double(wv);
      write_file(res, c.out_dir / (stem + ".svg"),
                 svg_from_csv(panel.str(), {"lambda", "mean", "policy",
                                            std::string("Slotted average AoC, ") + to_string(kind) +
                                                " deadline, w=" + format_double(wv),
                                            "arrival probability", "average AoC per source", 760, 440}));
    }
  res.slotted = std::move(cells);
}

inline bool all_exponential(const CustomRun& u) {
  return std::holds_alternative<Exponential>(u.arrival) && std::holds_alternative<Exponential>(u.transmit) &&
         std::holds_alternative<Exponential>(u.compute);
}

inline void run_custom(const ExperimentConfig& c, unsigned threads, ExperimentResult& res) {
  const auto& u = c.custom;
  std::vector<TandemJob> jobs;
  for (std::size_t r = 0; r < c.replications; ++r) {
    TandemConfig t;
    t.arrival = u.arrival;
    t.transmit = u.transmit;
    t.compute = u.compute;
    t.w = u.w;
    t.deadline = u.deadline;
    t.task_count = u.task_count;
    t.seed = c.seed;
    t.stream_id = derive_stream_id({100u, r});
    jobs.push_back({0, r, t});
  }
  const auto outcomes = run_tandem_jobs(jobs, threads);
  std::ostringstream reps;
  CsvWriter w(reps, {"replication", "theta", "throughput", "epsilon_hat", "mean_delay", "status"});
  std::vector<double> th, xi, eps;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    const auto& o = outcomes[r];
    w.row(r, o.res.theta, o.res.throughput, o.res.epsilon_hat, o.res.mean_delay,
          o.error.empty() ? std::string("ok") : "error: " + csv_safe(o.error));
    if (!o.error.empty()) {
      ++res.failed_rows;
      continue;
    }
    th.push_back(o.res.theta);
    xi.push_back(o.res.throughput);
    eps.push_back(o.res.epsilon_hat);
  }
  write_file(res, c.out_dir / "custom_replications.csv", reps.str());

  std::ostringstream sum;
  CsvWriter sw(sum, {"quantity", "sim_mean", "sim_ci_lo", "sim_ci_hi", "n", "analytic", "bound"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::optional<MM1Params> mm1;
  if (all_exponential(u))
    mm1 = MM1Params{std::get<Exponential>(u.arrival).rate, std::get<Exponential>(u.transmit).rate,
                    std::get<Exponential>(u.compute).rate, u.w};
  auto analytic = [&](auto fn) {
    if (!mm1) return nan;
    try {
      return fn(*mm1);
    } catch (const std::exception&) {
      return nan;
    }
  };
  const bool soft = u.deadline == DeadlineKind::soft;
  auto row = [&](const char* name, const std::vector<double>& v, double an, Bound b) {
    const Summary s = summarize(v);
    sw.row(std::string(name), s.mean, s.ci95_lo, s.ci95_hi, s.n, an, std::string(to_string(b)));
  };
  row("theta", th,
      soft ? analytic([](const MM1Params& p) { return theta_soft_mm1(p); })
           : analytic([](const MM1Params& p) { return theta_hard_mm1_approx(p); }),
      soft ? Bound::none : Bound::lower);
  row("throughput", xi,
      soft ? analytic([](const MM1Params& p) { return p.lambda; })
           : analytic([](const MM1Params& p) { return throughput_mm1_approx(p); }),
      soft ? Bound::none : Bound::upper);
  row("epsilon", eps, analytic([](const MM1Params& p) { return epsilon_w(p); }), Bound::none);
  write_file(res, c.out_dir / "custom_summary.csv", sum.str());
}

}  // namespace harness_detail

inline nlohmann::ordered_json manifest_json(const ExperimentConfig& c, const ExperimentResult& res) {
  nlohmann::ordered_json m;
  m["kind"] = to_string(c.kind);
  m["config_hash"] = config_hash(c);
  m["seed"] = c.seed;
  m["replications"] = c.replications;
  m["versions"] = {{"aoc", kVersion},
#if defined(__VERSION__)
                   {"compiler", __VERSION__},
#endif
                   {"cxx_standard", static_cast<long>(__cplusplus)}};
  m["config"] = canonical_text(c);
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& f : res.files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files.push_back({{"name", f.filename().string()}, {"fnv1a64", hex64(fnv1a64(ss.str()))}});
  }
  m["files"] = files;
  m["failed_rows"] = res.failed_rows;
  return m;
}

/// Runs every grid point, writes CSVs, SVGs and manifest.json into out_dir.
/// Row failures are recorded in the CSVs and counted in failed_rows.
inline ExperimentResult run_experiment(const ExperimentConfig& c, unsigned threads = 1) {
  validate(c);
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec || !std::filesystem::is_directory(c.out_dir))
    throw ConfigError("output directory '" + c.out_dir.string() + "' is not writable");
  ExperimentResult res;
  switch (c.kind) {
    case ExperimentKind::fig6_soft_sweep:
    case ExperimentKind::fig7_hard_sweep: harness_detail::run_mm1_sweep(c, threads, res); break;
    case ExperimentKind::fig8_tradeoff: harness_detail::run_tradeoff(c, threads, res); break;
    case ExperimentKind::fig9_slotted: harness_detail::run_slotted_sweep(c, threads, res); break;
    case ExperimentKind::custom: harness_detail::run_custom(c, threads, res); break;
  }
  const auto m = manifest_json(c, res);
  std::ofstream f(c.out_dir / "manifest.json", std::ios::binary);
  f << m.dump(2) << '\n';
  if (!f) throw ConfigError("cannot write manifest.json");
  return res;
}

/// Reloads the configuration recorded in a manifest.
inline ExperimentConfig load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest '" + path.string() + "'");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest '" + path.string() + "': " + e.what());
  }
  if (!m.contains("config") || !m["config"].is_string()) throw ConfigError("manifest lacks a config string");
  ExperimentConfig c = parse_experiment(config::Document::parse(m["config"].get<std::string>(), path.string()));
  if (m.contains("config_hash") && m["config_hash"] != config_hash(c))
    throw ConfigError("manifest config_hash does not match its config text");
  return c;
}

}  // namespace aoc

#endif  // AOC_HARNESS_HPP
