#ifndef AOC_SLOTTED_HPP
#define AOC_SLOTTED_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aoc/csv.hpp"
#include "aoc/errors.hpp"
#include "aoc/parallel.hpp"
#include "aoc/rng.hpp"
#include "aoc/stats.hpp"
#include "aoc/tandem.hpp"

namespace aoc {

enum class Policy { maxweight, maf, randomized };

inline const char* to_string(Policy p) {
  switch (p) {
    case Policy::maxweight: return "maxweight";
    case Policy::maf: return "maf";
    case Policy::randomized: return "randomized";
  }
  return "?";
}

inline Policy parse_policy(const std::string& s) {
  if (s == "maxweight") return Policy::maxweight;
  if (s == "maf") return Policy::maf;
  if (s == "randomized") return Policy::randomized;
  throw ConfigError("policy must be maxweight, maf or randomized, got '" + s + "'");
}

/// Slotted multi-source network with unit computation time.
struct SlottedConfig {
  std::vector<double> lambda;  // per-slot Bernoulli arrival probability
  std::vector<double> mu_t;    // per-slot transmission success probability
  std::vector<double> beta;    // Lyapunov weights
  std::vector<double> q;       // randomized policy: idle prob, then one per source
  double w = 10.0;
  DeadlineKind deadline = DeadlineKind::soft;
  std::uint64_t T = 100000;
  std::optional<std::uint64_t> warmup;  // default T / 10
  std::uint64_t seed = 1;
  std::uint64_t stream_id = 0;
  Policy policy = Policy::maxweight;
  bool preempt_in_service = true;
  bool keep_trace = false;

  std::size_t N() const { return lambda.size(); }
  std::uint64_t warmup_count() const { return warmup.value_or(T / 10); }

  /// Identical sources; q puts 1/(N+1) on idle and on every source.
  static SlottedConfig symmetric(std::size_t n, double lam, double mu, double w, DeadlineKind kind, Policy policy,
                                 std::uint64_t horizon) {
    SlottedConfig c;
    c.lambda.assign(n, lam);
    c.mu_t.assign(n, mu);
    c.beta.assign(n, 1.0);
    c.q.assign(n + 1, 1.0 / static_cast<double>(n + 1));
    c.w = w;
    c.deadline = kind;
    c.policy = policy;
    c.T = horizon;
    return c;
  }
};

inline void validate(const SlottedConfig& c) {
  const std::size_t n = c.N();
  detail::require(n >= 1, "slotted: need at least one source");
  detail::require(c.mu_t.size() == n && c.beta.size() == n, "slotted: lambda, mu_t and beta must have N entries");
  detail::require(c.q.size() == n + 1, "slotted: q must have N+1 entries (idle first)");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  for (std::size_t i = 0; i < n; ++i) {
    detail::require(prob(c.lambda[i]) && prob(c.mu_t[i]), "slotted: lambda and mu_t must be probabilities");
    detail::require(c.beta[i] > 0.0 && std::isfinite(c.beta[i]), "slotted: beta must be positive");
  }
  double s = 0.0;
  for (double p : c.q) {
    detail::require(prob(p), "slotted: q entries must be probabilities");
    s += p;
  }
  detail::require(std::abs(s - 1.0) <= 1e-9, "slotted: q must sum to 1");
  detail::require(c.w >= 0.0, "slotted: w must be >= 0");
  detail::require(c.T > c.warmup_count(), "slotted: T must exceed warmup");
}

/// Soft recursion: a departing task resets the AoC to its delay plus the
/// overshoot penalty; otherwise the AoC grows by one slot.
inline double soft_next(double c, double z, bool departs, std::uint64_t A, std::uint64_t G, double w) {
  if (!departs) return c + 1.0;
  const double ratio = G == 0 ? 0.0 : static_cast<double>(A) / static_cast<double>(G);
  return z + 1.0 + ratio * hinge(z + 1.0 - w);
}

/// Hard recursion: only a departing task within the deadline resets the AoC.
inline double hard_next(double c, double z, bool departs, double w) {
  if (departs && z + 1.0 <= w) return z + 1.0;
  return c + 1.0;
}

inline double next_aoc(DeadlineKind kind, double c, double z, bool departs, std::uint64_t A, std::uint64_t G, double w) {
  return kind == DeadlineKind::soft ? soft_next(c, z, departs, A, G, w) : hard_next(c, z, departs, w);
}

struct SourceState {
  double c = 0.0;  // AoC at the end of the last slot
  double z = 0.0;  // instantaneous delay at the end of the last slot
  bool has_task = false;
  bool transmitting = false;
  bool delivered = false;  // transmitted this slot, computed next slot
  bool in_compute = false;
  double compute_z = 0.0;
  std::uint64_t task_age = 0;
  std::uint64_t G = 0;
  std::uint64_t A = 0;
  int a = 0;
  int d = 0;
};

struct SlottedState {
  std::vector<SourceState> src;
  bool opportunity = true;  // a scheduling decision is due
  std::uint64_t k = 0;

  explicit SlottedState(std::size_t n = 0) : src(n) {}
};

/// What the scheduler sees at a decision slot: AoC and delay as they will
/// stand at the end of the slot when nobody departs, which is the case
/// whenever a decision is due.
struct DecisionView {
  std::vector<double> c, z;
  std::vector<std::uint64_t> A, G;
  std::vector<bool> candidate;  // transmitter holds a task

  std::size_t N() const { return c.size(); }
};

inline DecisionView decision_view(const SlottedState& s) {
  DecisionView v;
  const std::size_t n = s.src.size();
  v.c.resize(n);
  v.z.resize(n);
  v.A.resize(n);
  v.G.resize(n);
  v.candidate.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = s.src[i];
    v.c[i] = x.c + 1.0;
    v.z[i] = x.has_task ? static_cast<double>(x.task_age + 1) : v.c[i];
    v.A[i] = x.A;
    v.G[i] = x.G;
    v.candidate[i] = x.has_task && !x.transmitting && !x.delivered;
  }
  return v;
}

inline double weight_soft(const DecisionView& v, std::size_t i, double w) {
  const double ratio = v.G[i] == 0 ? 0.0 : static_cast<double>(v.A[i]) / static_cast<double>(v.G[i]);
  return v.c[i] - v.z[i] - ratio * hinge(v.z[i] + 1.0 - w);
}

inline double weight_hard(const DecisionView& v, std::size_t i, double w) {
  return v.z[i] + 1.0 <= w ? v.c[i] - v.z[i] : 0.0;
}

namespace detail {

inline bool near_equal(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

inline std::optional<std::size_t> argmax_random_tie(const std::vector<double>& score, const std::vector<bool>& allowed,
                                                    RngStream& rng) {
  std::optional<double> best;
  for (std::size_t i = 0; i < score.size(); ++i)
    if (allowed[i] && (!best || score[i] > *best)) best = score[i];
  if (!best) return std::nullopt;
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < score.size(); ++i)
    if (allowed[i] && near_equal(score[i], *best)) ties.push_back(i);
  if (ties.size() == 1) return ties[0];
  return ties[rng.below(ties.size())];
}

}  // namespace detail

/// Scheduling decision; nullopt means no transmitter is scheduled.
inline std::optional<std::size_t> choose_action(Policy policy, const DecisionView& v, const SlottedConfig& cfg,
                                                RngStream& rng) {
  const std::size_t n = v.N();
  std::vector<double> score(n, 0.0);
  switch (policy) {
    case Policy::maxweight:
      for (std::size_t i = 0; i < n; ++i) {
        const double wi = cfg.deadline == DeadlineKind::soft ? weight_soft(v, i, cfg.w) : weight_hard(v, i, cfg.w);
        score[i] = cfg.beta[i] * cfg.mu_t[i] * wi;
      }
      return detail::argmax_random_tie(score, v.candidate, rng);
    case Policy::maf:
      return detail::argmax_random_tie(v.c, v.candidate, rng);
    case Policy::randomized: {
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t pick = 0;
      for (; pick < cfg.q.size(); ++pick) {
        acc += cfg.q[pick];
        if (u < acc) break;
      }
      if (pick == 0 || pick > n) return std::nullopt;
      if (!v.candidate[pick - 1]) return std::nullopt;
      return pick - 1;
    }
  }
  return std::nullopt;
}

struct DriftProbe {
  std::vector<std::size_t> actions;     // candidate transmitters
  std::vector<double> drift;            // E[L(k+1) - L(k-1) | S(k)] per action
  std::vector<std::size_t> minimizing;  // actions attaining the minimum

  bool is_minimizing(std::size_t i) const {
    return std::find(minimizing.begin(), minimizing.end(), i) != minimizing.end();
  }
};

/// Exact two-slot expected drift of the linear Lyapunov function for each
/// candidate action, computed from the AoC recursions with Pr(d = 1 | a = 1)
/// equal to the transmission success probability.
inline DriftProbe drift_probe(const DecisionView& v, const SlottedConfig& cfg) {
  DriftProbe p;
  const std::size_t n = v.N();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!v.candidate[i]) continue;
    double delta = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double before = v.c[j] - 1.0;  // c_j(k-1)
      double expected = v.c[j] + 1.0;
      if (j == i) {
        const double hit = next_aoc(cfg.deadline, v.c[j], v.z[j], true, v.A[j], v.G[j], cfg.w);
        expected = cfg.mu_t[j] * hit + (1.0 - cfg.mu_t[j]) * (v.c[j] + 1.0);
      }
      delta += cfg.beta[j] * (expected - before);
    }
    p.actions.push_back(i);
    p.drift.push_back(delta * inv_n);
  }
  if (p.drift.empty()) return p;
  const double lo = *std::min_element(p.drift.begin(), p.drift.end());
  const double tol = 1e-9 * std::max(1.0, std::abs(lo));
  for (std::size_t a = 0; a < p.actions.size(); ++a)
    if (p.drift[a] <= lo + tol) p.minimizing.push_back(p.actions[a]);
  return p;
}

struct SlottedStreams {
  RngStream arrival, transmit, policy;
  SlottedStreams(std::uint64_t seed, std::uint64_t stream_id)
      : arrival(seed, derive_stream_id({stream_id, 10})),
        transmit(seed, derive_stream_id({stream_id, 11})),
        policy(seed, derive_stream_id({stream_id, 12})) {}
};

/// One row of the per-slot trace.
struct SlotRow {
  std::uint64_t k = 0;
  std::size_t i = 0;
  double c = 0, z = 0;
  int a = 0, d = 0;
  bool valid = false;  // a departure whose delay met the deadline
};

/// Advances one slot: arrivals, scheduling, transmission, departure, then
/// AoC and delay updates. `on_decision(view, choice)` sees every decision.
template <typename Hook>
void step(SlottedState& s, const SlottedConfig& cfg, SlottedStreams& rng, Hook&& on_decision,
          std::vector<SlotRow>* rows = nullptr) {
  const std::size_t n = s.src.size();
  ++s.k;
  int prev_d = 0;
  for (auto& x : s.src) {
    prev_d += x.d;
    if (x.delivered) {
      x.delivered = false;
      x.has_task = false;
      x.in_compute = true;
      x.compute_z = static_cast<double>(x.task_age);
    }
  }

  for (auto& x : s.src) x.a = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& x = s.src[i];
    if (rng.arrival.uniform() < cfg.lambda[i]) {
      if (x.transmitting && !cfg.preempt_in_service) continue;
      x.has_task = true;
      x.task_age = 0;
    }
  }

  bool persisted = false;
  if (s.opportunity) {
    persisted = prev_d == 0;
    const DecisionView view = decision_view(s);
    const auto choice = choose_action(cfg.policy, view, cfg, rng.policy);
    on_decision(view, choice);
    if (choice) {
      auto& x = s.src[*choice];
      x.a = 1;
      x.transmitting = true;
      s.opportunity = false;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto& x = s.src[i];
    const double u = rng.transmit.uniform();
    if (x.transmitting && u < cfg.mu_t[i]) {
      x.transmitting = false;
      x.delivered = true;
    }
  }

  int sum_a = 0, sum_d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& x = s.src[i];
    x.d = 0;
    double c_new = x.c + 1.0;
    bool valid = false;
    if (x.in_compute) {
      x.d = 1;
      x.in_compute = false;
      c_new = next_aoc(cfg.deadline, x.c, x.compute_z, true, x.A, x.G, cfg.w);
      valid = x.compute_z + 1.0 <= cfg.w;
      ++x.G;
      if (!valid) ++x.A;
      s.opportunity = true;
    }
    x.c = c_new;
    if (x.has_task) ++x.task_age;
    x.z = x.has_task ? static_cast<double>(x.task_age) : x.c;
    sum_a += x.a;
    sum_d += x.d;
    if (rows) rows->push_back({s.k, i + 1, x.c, x.z, x.a, x.d, valid});
  }
  if (sum_a > 1 || sum_d > 1) throw NumericError("slotted: more than one schedule or departure in a slot");
  if (sum_a > prev_d + (persisted ? 1 : 0)) throw NumericError("slotted: schedule without a preceding departure");
}

struct SlottedResult {
  double mean = 0.0;  // time-average AoC per source after warmup
  std::vector<double> per_source_mean;
  std::uint64_t decisions = 0;
  std::uint64_t idle_decisions = 0;
  std::vector<SlotRow> trace;
};

inline SlottedResult run_slotted(const SlottedConfig& cfg) {
  validate(cfg);
  const std::size_t n = cfg.N();
  SlottedState s(n);
  SlottedStreams rng(cfg.seed, cfg.stream_id);
  SlottedResult r;
  r.per_source_mean.assign(n, 0.0);
  const std::uint64_t warmup = cfg.warmup_count();
  std::vector<SlotRow>* rows = cfg.keep_trace ? &r.trace : nullptr;
  if (rows) rows->reserve(cfg.T * n);
  auto hook = [&](const DecisionView&, const std::optional<std::size_t>& choice) {
    ++r.decisions;
    if (!choice) ++r.idle_decisions;
  };
  double total = 0.0;
  for (std::uint64_t k = 1; k <= cfg.T; ++k) {
    step(s, cfg, rng, hook, rows);
    if (k <= warmup) continue;
    for (std::size_t i = 0; i < n; ++i) {
      r.per_source_mean[i] += s.src[i].c;
      total += s.src[i].c;
    }
  }
  const double slots = static_cast<double>(cfg.T - warmup);
  for (double& m : r.per_source_mean) m /= slots;
  r.mean = total / (slots * static_cast<double>(n));
  return r;
}

inline void write_trace_csv(std::ostream& os, const std::vector<SlotRow>& rows) {
  os << "k,i,c,z,a,d,valid\n";
  for (const auto& r : rows)
    os << r.k << ',' << r.i << ',' << format_double(r.c) << ',' << format_double(r.z) << ',' << r.a << ',' << r.d << ','
       << (r.valid ? 1 : 0) << '\n';
}

inline std::vector<SlotRow> read_trace_csv(std::istream& in, const std::string& name = "trace") {
  const CsvTable t = read_csv(in, name);
  const std::size_t ck = t.require_column("k"), ci = t.require_column("i"), cc = t.require_column("c"),
                    cz = t.require_column("z"), ca = t.require_column("a"), cd = t.require_column("d"),
                    cv = t.require_column("valid");
  std::vector<SlotRow> rows;
  rows.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& x = t.rows[r];
    const std::string where = name + ":" + std::to_string(r + 2);
    if (x.size() != t.header.size()) throw ConfigError(where + ": wrong field count");
    SlotRow row;
    row.k = static_cast<std::uint64_t>(parse_double(x[ck], where));
    row.i = static_cast<std::size_t>(parse_double(x[ci], where));
    row.c = parse_double(x[cc], where);
    row.z = parse_double(x[cz], where);
    row.a = static_cast<int>(parse_double(x[ca], where));
    row.d = static_cast<int>(parse_double(x[cd], where));
    row.valid = parse_double(x[cv], where) != 0.0;
    rows.push_back(row);
  }
  return rows;
}

/// Recomputes every c in a trace from the pure recursions, seeding each
/// source with c = z = 0 and rebuilding A and G from the departures. Returns
/// the number of rows whose c differs (exact comparison).
inline std::size_t replay_mismatches(const std::vector<SlotRow>& rows, std::size_t n, DeadlineKind kind, double w) {
  std::vector<double> c(n + 1, 0.0), z(n + 1, 0.0);
  std::vector<std::uint64_t> A(n + 1, 0), G(n + 1, 0);
  std::size_t bad = 0;
  for (const auto& r : rows) {
    if (r.i < 1 || r.i > n) throw ConfigError("trace source index out of range");
    const std::size_t i = r.i;
    const bool departs = r.d == 1;
    const double expect = next_aoc(kind, c[i], z[i], departs, A[i], G[i], w);
    if (expect != r.c) ++bad;
    if (departs) {
      ++G[i];
      if (z[i] + 1.0 > w) ++A[i];
    }
    c[i] = r.c;
    z[i] = r.z;
  }
  return bad;
}

struct SlottedSummary {
  Summary stats;
  std::vector<double> per_replication;
};

/// Independent replications r = 0..R-1 on streams derived from (stream_id, r);
/// the streams do not depend on the policy, so policies compared at equal
/// (seed, stream_id) share arrival and transmission variates.
inline SlottedSummary run_slotted_replications(const SlottedConfig& cfg, std::size_t replications, unsigned threads) {
  validate(cfg);
  detail::require(replications >= 1, "need at least one replication");
  SlottedSummary out;
  out.per_replication = parallel_map<double>(replications, threads, [&](std::size_t r) {
    SlottedConfig c = cfg;
    c.keep_trace = false;
    c.stream_id = derive_stream_id({cfg.stream_id, r});
    return run_slotted(c).mean;
  });
  out.stats = summarize(out.per_replication);
  return out;
}

}  // namespace aoc

#endif  // AOC_SLOTTED_HPP
