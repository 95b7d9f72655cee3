#ifndef AOC_TANDEM_HPP
#define AOC_TANDEM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aoc/csv.hpp"
#include "aoc/distribution.hpp"
#include "aoc/errors.hpp"
#include "aoc/rng.hpp"

namespace aoc {

enum class DeadlineKind { soft, hard };

inline const char* to_string(DeadlineKind k) { return k == DeadlineKind::soft ? "soft" : "hard"; }

inline DeadlineKind parse_deadline(const std::string& s) {
  if (s == "soft") return DeadlineKind::soft;
  if (s == "hard") return DeadlineKind::hard;
  throw ConfigError("deadline must be 'soft' or 'hard', got '" + s + "'");
}

/// Task size L (bits), link rate R (bits/time), workload B (cycles) and CPU
/// frequency F (cycles/time); they pin the service means to L/R and B/F.
struct PhysicalParams {
  double L = 0, R = 0, B = 0, F = 0;
};

struct TandemConfig {
  DistributionSpec arrival = Exponential{1.0};
  DistributionSpec transmit = Exponential{2.0};
  DistributionSpec compute = Exponential{3.0};
  double w = std::numeric_limits<double>::infinity();
  DeadlineKind deadline = DeadlineKind::soft;
  std::uint64_t task_count = 1'000'000;
  std::optional<std::uint64_t> warmup;  // default: task_count / 10
  std::uint64_t seed = 1;
  std::uint64_t stream_id = 0;
  std::optional<PhysicalParams> physical;
  bool keep_log = false;
  double guard_multiple = 1e3;

  std::uint64_t warmup_count() const { return warmup.value_or(task_count / 10); }
};

/// Returns non-fatal warnings; throws ConfigError on invalid input.
inline std::vector<std::string> validate(const TandemConfig& c) {
  validate(c.arrival);
  validate(c.transmit);
  validate(c.compute);
  detail::require(c.w >= 0.0, "deadline w must be >= 0");
  detail::require(c.task_count > c.warmup_count(), "task_count must exceed warmup");
  detail::require(c.guard_multiple > 1.0, "guard_multiple must exceed 1");
  if (c.physical) {
    const auto& p = *c.physical;
    detail::require(p.L > 0 && p.R > 0 && p.B > 0 && p.F > 0, "physical parameters must be positive");
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); };
    detail::require(close(mean(c.transmit), p.L / p.R), "transmit mean must equal L/R");
    detail::require(close(mean(c.compute), p.B / p.F), "compute mean must equal B/F");
  }
  std::vector<std::string> warnings;
  if (!(mean(c.arrival) > std::max(mean(c.transmit), mean(c.compute))))
    warnings.emplace_back("unstable: mean inter-arrival does not exceed both mean service times");
  return warnings;
}

/// Timestamps of one task through transmitter and computational node.
struct TaskRecord {
  std::uint64_t k = 0;
  double tau = 0;   // arrival at the source
  double d1 = 0;    // transmitter departure = receiver arrival
  double tau2 = 0;  // computation start
  double tau1 = 0;  // computation completion
  double X = 0;     // inter-arrival from task k-1
  double St = 0;    // transmission service
  double Sc = 0;    // computation service
  double T = 0;     // delay tau1 - tau
  bool valid = true;
};

inline void write_task_log_header(std::ostream& os) { os << "k,tau,d1,tau2,tau1,X,St,Sc,T,valid\n"; }

inline void write_task_log_row(std::ostream& os, const TaskRecord& r) {
  os << r.k << ',' << format_double(r.tau) << ',' << format_double(r.d1) << ',' << format_double(r.tau2) << ','
     << format_double(r.tau1) << ',' << format_double(r.X) << ',' << format_double(r.St) << ','
     << format_double(r.Sc) << ',' << format_double(r.T) << ',' << (r.valid ? 1 : 0) << '\n';
}

inline double hinge(double x) { return x > 0.0 ? x : 0.0; }

/// Soft-deadline area attributed to task k: the AoI trapezoid X T + X^2/2 plus
/// the overshoot region accrued while task k is computed,
/// (eps/2) [((T-w)^+)^2 - ((T-Sc-w)^+)^2].
inline double soft_area_increment(const TaskRecord& r, double eps_hat, double w) {
  const double excess = hinge(r.T - w);
  const double excess_at_start = hinge(r.T - r.Sc - w);
  return r.X * r.T + 0.5 * r.X * r.X + 0.5 * eps_hat * (excess * excess - excess_at_start * excess_at_start);
}

/// Area of one hard-deadline cycle: sum_x is the arrival span from the previous
/// valid task to the terminating valid task, T_M the latter's delay.
inline double hard_cycle_area(double sum_x, double t_m) {
  const double top = sum_x + t_m;
  return 0.5 * top * top - 0.5 * t_m * t_m;
}

/// Same, from the list of records of a cycle (M-1 invalid then one valid).
/// Returns nullopt when the list is not terminated by a valid task.
inline std::optional<double> hard_cycle_area(const std::vector<TaskRecord>& cycle) {
  if (cycle.empty() || !cycle.back().valid) return std::nullopt;
  double sum_x = 0.0;
  for (const auto& r : cycle) sum_x += r.X;
  return hard_cycle_area(sum_x, cycle.back().T);
}

/// Statistics of the valid-to-valid cycles of a hard-deadline path.
struct CycleStats {
  std::uint64_t cycles = 0;
  double mean_m = 0, mean_m2 = 0;
  double mean_sum_x = 0, mean_sum_x2 = 0;
  double mean_t_m = 0;
};

/// Running sample-path state for one tandem replication. Completions must be
/// fed in index order; the AoC integral is exact between completions because
/// the age is linear there and eps-hat = A/G only changes at completions.
class AoCAccumulator {
 public:
  AoCAccumulator(DeadlineKind kind, double w, std::uint64_t warmup) : kind_(kind), w_(w), warmup_(warmup) {}

  // Indices as in the definitions: informative (N), processing (P), latest (G).
  std::uint64_t N() const { return n_; }
  std::uint64_t P() const { return p_; }
  std::uint64_t G() const { return g_; }
  std::uint64_t A() const { return a_; }
  double area() const { return area_; }
  double horizon() const { return started_ ? last_completion_ - t0_ : 0.0; }
  bool has_informative() const { return has_n_; }
  double eps_hat() const { return g_ == 0 ? 0.0 : static_cast<double>(a_) / static_cast<double>(g_); }
  std::uint64_t valid_after_warmup() const { return valid_after_warmup_; }
  double throughput_t0() const { return tp_t0_; }
  const CycleStats& cycles() const { return cycles_; }

  void on_task(const TaskRecord& r) {
    // Computation start of task k; the node was idle or just freed.
    p_ = r.k;
    check_order();
    if (started_) {
      const double prev = last_completion_;
      if (has_n_) {
        const double a0 = prev - tau_n_;
        const double a1 = r.tau1 - tau_n_;
        area_ += 0.5 * (a1 * a1 - a0 * a0);
      }
      if (kind_ == DeadlineKind::soft) {
        // Additional latency for the in-service task over [tau2, tau1].
        const double e1 = hinge(r.T - w_);
        const double e0 = hinge(r.T - r.Sc - w_);
        area_ += 0.5 * eps_hat() * (e1 * e1 - e0 * e0);
      }
    }

    // Completion of task k.
    g_ = r.k;
    if (r.T > w_) ++a_;
    last_completion_ = r.tau1;
    if (r.k == warmup_) tp_t0_ = r.tau1;
    if (r.k > warmup_ && r.valid) ++valid_after_warmup_;
    cycle_sum_x_ += r.X;
    ++cycle_m_;
    if (r.valid) {
      if (has_n_ && r.k > warmup_) record_cycle(r.T);
      n_ = r.k;
      tau_n_ = r.tau;
      has_n_ = true;
      cycle_sum_x_ = 0.0;
      cycle_m_ = 0;
    }
    if (!started_ && r.k >= warmup_ && has_n_) {
      started_ = true;
      t0_ = r.tau1;
    }
    check_order();
  }

 private:
  void check_order() const {
    if (!(p_ >= g_ && g_ >= n_)) throw NumericError("index ordering P >= G >= N violated");
  }

  void record_cycle(double t_m) {
    const double m = static_cast<double>(cycle_m_);
    const double c = static_cast<double>(++cycles_.cycles);
    auto upd = [c](double& acc, double v) { acc += (v - acc) / c; };
    upd(cycles_.mean_m, m);
    upd(cycles_.mean_m2, m * m);
    upd(cycles_.mean_sum_x, cycle_sum_x_);
    upd(cycles_.mean_sum_x2, cycle_sum_x_ * cycle_sum_x_);
    upd(cycles_.mean_t_m, t_m);
  }

  DeadlineKind kind_;
  double w_;
  std::uint64_t warmup_;
  std::uint64_t n_ = 0, p_ = 0, g_ = 0, a_ = 0;
  bool has_n_ = false;
  double tau_n_ = 0.0;
  bool started_ = false;
  double t0_ = 0.0;
  double last_completion_ = 0.0;
  double area_ = 0.0;
  double tp_t0_ = 0.0;
  std::uint64_t valid_after_warmup_ = 0;
  double cycle_sum_x_ = 0.0;
  std::uint64_t cycle_m_ = 0;
  CycleStats cycles_;
};

/// Valid completions per unit time after warmup.
inline double empirical_throughput(const AoCAccumulator& acc, double end_time) {
  const double span = end_time - acc.throughput_t0();
  if (!(span > 0.0)) throw NumericError("empirical_throughput needs a positive horizon");
  return static_cast<double>(acc.valid_after_warmup()) / span;
}

/// Fraction of completed tasks whose delay exceeded w.
inline double empirical_epsilon(const AoCAccumulator& acc) {
  if (acc.G() == 0) throw NumericError("empirical_epsilon needs at least one completion");
  return acc.eps_hat();
}

struct TandemResult {
  double theta = 0;       // time-average AoC; +inf when no informative task exists
  double throughput = 0;  // valid completions per unit time
  double epsilon_hat = 0;
  bool divergent = false;
  CycleStats cycle_stats;
  double horizon = 0;
  double mean_delay = 0;
  std::vector<TaskRecord> per_task;
  std::vector<std::string> warnings;
};

/// Stream ids of the three variate sources of one replication.
struct TandemStreams {
  RngStream arrival, transmit, compute;
  explicit TandemStreams(std::uint64_t seed, std::uint64_t stream_id)
      : arrival(seed, derive_stream_id({stream_id, 0})),
        transmit(seed, derive_stream_id({stream_id, 1})),
        compute(seed, derive_stream_id({stream_id, 2})) {}
};

/// Generates TaskRecords 1..K by the two-stage Lindley recursion and hands
/// each to `visit` in order.
template <typename Visitor>
void simulate_tasks(const TandemConfig& c, Visitor&& visit) {
  TandemStreams s(c.seed, c.stream_id);
  double tau = 0.0, d1_prev = 0.0, tau1_prev = 0.0;
  TaskRecord r;
  for (std::uint64_t k = 1; k <= c.task_count; ++k) {
    r.k = k;
    r.X = sample(c.arrival, s.arrival);
    r.St = sample(c.transmit, s.transmit);
    r.Sc = sample(c.compute, s.compute);
    tau += r.X;
    r.tau = tau;
    r.d1 = std::max(tau, d1_prev) + r.St;
    r.tau2 = std::max(r.d1, tau1_prev);
    r.tau1 = r.tau2 + r.Sc;
    r.T = r.tau1 - r.tau;
    r.valid = c.deadline == DeadlineKind::soft || r.T <= c.w;
    d1_prev = r.d1;
    tau1_prev = r.tau1;
    visit(static_cast<const TaskRecord&>(r));
  }
}

inline TandemResult run_tandem(const TandemConfig& c) {
  TandemResult res;
  res.warnings = validate(c);
  AoCAccumulator acc(c.deadline, c.w, c.warmup_count());
  double delay_mean = 0.0;
  bool guard_tripped = false;
  double end_time = 0.0;
  simulate_tasks(c, [&](const TaskRecord& r) {
    if (r.k > 100 && r.T > c.guard_multiple * delay_mean) guard_tripped = true;
    delay_mean += (r.T - delay_mean) / static_cast<double>(r.k);
    acc.on_task(r);
    end_time = r.tau1;
    if (c.keep_log) res.per_task.push_back(r);
  });
  if (guard_tripped)
    res.warnings.emplace_back("divergent queue suspected: a delay exceeded the guard multiple of its running mean");
  res.mean_delay = delay_mean;
  res.epsilon_hat = empirical_epsilon(acc);
  res.throughput = empirical_throughput(acc, end_time);
  res.cycle_stats = acc.cycles();
  res.horizon = acc.horizon();
  if (!acc.has_informative() || !(res.horizon > 0.0)) {
    res.divergent = true;
    res.theta = std::numeric_limits<double>::infinity();
    res.warnings.emplace_back("no informative task after warmup: average AoC diverges");
  } else {
    res.theta = acc.area() / res.horizon;
  }
  return res;
}

}  // namespace aoc

#endif  // AOC_TANDEM_HPP
