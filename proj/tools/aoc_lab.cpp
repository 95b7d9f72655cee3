// aoc-lab: command-line front end for the aoc library.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "aoc/aoc.hpp"

namespace {

enum Exit { ok = 0, config_error = 2, numeric_error = 3, partial_failure = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> replications;
  unsigned threads = 1;
};

void add_common(CLI::App* sub, Common& c, bool with_config = true) {
  if (with_config) sub->add_option("--config", c.config, "experiment config file");
  sub->add_option("--seed", c.seed, "master seed");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--replications", c.replications, "independent replications");
  sub->add_option("--threads", c.threads, "worker threads (output does not depend on it)")->check(CLI::PositiveNumber);
}

void print_summary_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::cout << in.rdbuf();
}

int run_experiment_cmd(aoc::ExperimentConfig cfg, const Common& c) {
  if (c.seed) cfg.seed = *c.seed;
  if (c.replications) cfg.replications = *c.replications;
  if (!c.out.empty()) cfg.out_dir = c.out;
  const auto res = aoc::run_experiment(cfg, c.threads);
  for (const auto& f : res.files) std::cerr << "wrote " << f.string() << '\n';
  std::cerr << "wrote " << (cfg.out_dir / "manifest.json").string() << " (config " << aoc::config_hash(cfg) << ")\n";
  if (res.failed_rows) {
    std::cerr << res.failed_rows << " row(s) failed\n";
    return partial_failure;
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-of-Computing laboratory"};
  app.require_subcommand(1);

  // analytic
  auto* an = app.add_subcommand("analytic", "closed-form M/M/1 tandem quantities (one CSV row)");
  aoc::MM1Params mp;
  std::string deadline = "soft", quantity = "theta";
  bool no_header = false;
  an->add_option("--lambda", mp.lambda)->required();
  an->add_option("--mu-t", mp.mu_t)->required();
  an->add_option("--mu-c", mp.mu_c)->required();
  an->add_option("--w", mp.w, "deadline (inf allowed)")->required();
  an->add_option("--deadline", deadline)->check(CLI::IsMember({"soft", "hard"}));
  an->add_option("--quantity", quantity)->check(CLI::IsMember({"theta", "throughput", "epsilon", "aoi"}));
  an->add_flag("--no-header", no_header);

  // simulate-tandem
  auto* st = app.add_subcommand("simulate-tandem", "sample-path tandem simulation");
  Common stc;
  add_common(st, stc);
  aoc::MM1Params sp{1.0, 2.0, 3.0, 0.5};
  std::string st_deadline = "soft", st_log;
  std::uint64_t st_tasks = 1'000'000;
  st->add_option("--lambda", sp.lambda);
  st->add_option("--mu-t", sp.mu_t);
  st->add_option("--mu-c", sp.mu_c);
  st->add_option("--w", sp.w);
  st->add_option("--deadline", st_deadline)->check(CLI::IsMember({"soft", "hard"}));
  st->add_option("--tasks", st_tasks);
  st->add_option("--log", st_log, "write the per-task log of replication 0 to this CSV");

  // simulate-slotted
  auto* ss = app.add_subcommand("simulate-slotted", "slotted multi-source scheduling simulation");
  Common ssc;
  add_common(ss, ssc, false);
  std::size_t sl_n = 5;
  double sl_lambda = 0.5, sl_mu = 0.5, sl_w = 4.0;
  std::string sl_deadline = "soft", sl_policy = "maxweight", sl_trace;
  std::uint64_t sl_slots = 100'000;
  bool sl_no_preempt = false;
  ss->add_option("--sources", sl_n);
  ss->add_option("--lambda", sl_lambda);
  ss->add_option("--mu-t", sl_mu);
  ss->add_option("--w", sl_w);
  ss->add_option("--deadline", sl_deadline)->check(CLI::IsMember({"soft", "hard"}));
  ss->add_option("--policy", sl_policy)->check(CLI::IsMember({"maxweight", "maf", "randomized"}));
  ss->add_option("--slots", sl_slots);
  ss->add_option("--trace", sl_trace, "write the slot trace of replication 0 to this CSV");
  ss->add_flag("--no-preempt-in-service", sl_no_preempt, "arrivals do not replace a task being transmitted");

  // gg-analytic
  auto* gg = app.add_subcommand("gg-analytic", "general-distribution analysis from tabulated densities");
  std::string gg_inputs, gg_write;
  aoc::MM1Params gp{1.0, 2.0, 3.0, 0.5};
  std::size_t gg_n = 2001;
  gg->add_option("--inputs", gg_inputs, "directory with fX.csv, fSt.csv, fSc.csv, fUtUc.csv, fUtUcmSc.csv, params.csv");
  gg->add_option("--write-mm1", gg_write, "tabulate M/M/1 inputs into this directory instead of evaluating");
  gg->add_option("--lambda", gp.lambda);
  gg->add_option("--mu-t", gp.mu_t);
  gg->add_option("--mu-c", gp.mu_c);
  gg->add_option("--w", gp.w);
  gg->add_option("--grid-n", gg_n);

  // pareto
  auto* pa = app.add_subcommand("pareto", "freshness-throughput frontier (CSV u,lambda_star,theta,xi,feasible)");
  Common pac;
  add_common(pa, pac, false);
  aoc::ParetoQuery pq;
  std::vector<double> pa_u;
  std::size_t pa_points = 20;
  bool pa_sim = false;
  std::uint64_t pa_tasks = 200'000;
  pa->add_option("--mu-t", pq.mu_t);
  pa->add_option("--mu-c", pq.mu_c);
  pa->add_option("--w", pq.w);
  pa->add_option("--u", pa_u, "throughput floors (ascending)")->delimiter(',');
  pa->add_option("--u-points", pa_points, "used when --u is absent");
  pa->add_option("--resolution", pq.resolution);
  pa->add_flag("--simulate", pa_sim, "validate each frontier point by hard-deadline simulation");
  pa->add_option("--tasks", pa_tasks);

  // experiment
  auto* ex = app.add_subcommand("experiment", "run a configured experiment (CSVs, SVGs, manifest)");
  Common exc;
  add_common(ex, exc);
  std::string manifest;
  ex->add_option("--manifest", manifest, "rerun the configuration recorded in a manifest.json");

  // plot
  auto* pl = app.add_subcommand("plot", "render a CSV as an SVG line plot");
  std::string pl_csv, pl_out;
  aoc::PlotSpec ps;
  pl->add_option("--csv", pl_csv)->required();
  pl->add_option("--x", ps.x)->required();
  pl->add_option("--y", ps.y)->required();
  pl->add_option("--series", ps.series);
  pl->add_option("--title", ps.title);
  pl->add_option("--out", pl_out, "SVG path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }

  try {
    if (*an) {
      using namespace aoc;
      const bool soft = deadline == "soft";
      double v = 0;
      if (quantity == "aoi")
        v = aoi_mm1_tandem(mp);
      else if (quantity == "epsilon")
        v = epsilon_w(mp);
      else if (quantity == "throughput")
        v = soft ? (require_stable(mp), mp.lambda) : throughput_mm1_approx(mp);
      else
        v = soft ? theta_soft_mm1(mp) : theta_hard_mm1_approx(mp);
      std::ostringstream os;
      CsvWriter w(os, {"lambda", "mu_t", "mu_c", "w", "deadline", "quantity", "value"});
      w.row(mp.lambda, mp.mu_t, mp.mu_c, mp.w, deadline, quantity, v);
      const std::string text = os.str();
      std::cout << (no_header ? text.substr(text.find('\n') + 1) : text);
      return ok;
    }

    if (*st) {
      aoc::ExperimentConfig cfg;
      if (!stc.config.empty()) {
        cfg = aoc::load_experiment(stc.config);
        if (cfg.kind != aoc::ExperimentKind::custom)
          throw aoc::ConfigError(stc.config + ": simulate-tandem needs an experiment of kind \"custom\"");
      } else {
        cfg.kind = aoc::ExperimentKind::custom;
        cfg.custom.arrival = aoc::Exponential{sp.lambda};
        cfg.custom.transmit = aoc::Exponential{sp.mu_t};
        cfg.custom.compute = aoc::Exponential{sp.mu_c};
        cfg.custom.w = sp.w;
        cfg.custom.deadline = aoc::parse_deadline(st_deadline);
        cfg.custom.task_count = st_tasks;
        cfg.out_dir = "out/simulate-tandem";
      }
      if (!st_log.empty()) {
        aoc::TandemConfig t;
        t.arrival = cfg.custom.arrival;
        t.transmit = cfg.custom.transmit;
        t.compute = cfg.custom.compute;
        t.w = cfg.custom.w;
        t.deadline = cfg.custom.deadline;
        t.task_count = cfg.custom.task_count;
        t.seed = stc.seed.value_or(cfg.seed);
        t.stream_id = aoc::derive_stream_id({100u, 0u});
        std::ofstream log(st_log);
        if (!log) throw aoc::ConfigError("cannot write '" + st_log + "'");
        aoc::write_task_log_header(log);
        aoc::simulate_tasks(t, [&](const aoc::TaskRecord& r) { aoc::write_task_log_row(log, r); });
      }
      const int rc = run_experiment_cmd(cfg, stc);
      const auto out = stc.out.empty() ? cfg.out_dir : std::filesystem::path(stc.out);
      print_summary_file(out / "custom_summary.csv");
      return rc;
    }

    if (*ss) {
      auto cfg = aoc::SlottedConfig::symmetric(sl_n, sl_lambda, sl_mu, sl_w, aoc::parse_deadline(sl_deadline),
                                              aoc::parse_policy(sl_policy), sl_slots);
      cfg.seed = ssc.seed.value_or(1);
      cfg.preempt_in_service = !sl_no_preempt;
      const std::size_t R = ssc.replications.value_or(5);
      const auto sum = aoc::run_slotted_replications(cfg, R, ssc.threads);
      if (!sl_trace.empty()) {
        auto one = cfg;
        one.keep_trace = true;
        one.stream_id = aoc::derive_stream_id({cfg.stream_id, 0u});
        const auto r = aoc::run_slotted(one);
        std::ofstream f(sl_trace);
        if (!f) throw aoc::ConfigError("cannot write '" + sl_trace + "'");
        aoc::write_trace_csv(f, r.trace);
      }
      aoc::CsvWriter w(std::cout, {"policy", "deadline", "w", "lambda", "mean", "ci_lo", "ci_hi", "n"});
      w.row(sl_policy, sl_deadline, sl_w, sl_lambda, sum.stats.mean, sum.stats.ci95_lo, sum.stats.ci95_hi,
            sum.stats.n);
      return ok;
    }

    if (*gg) {
      if (!gg_write.empty()) {
        aoc::save_gg_inputs(aoc::mm1_tandem_inputs(gp, gg_n), gg_write);
        std::cerr << "wrote tabulated inputs to " << gg_write << '\n';
        return ok;
      }
      if (gg_inputs.empty()) throw aoc::ConfigError("gg-analytic needs --inputs <dir> or --write-mm1 <dir>");
      const auto in = aoc::load_gg_inputs(gg_inputs);
      aoc::GGReport rep;
      const double soft = aoc::theta_soft_gg1(in, &rep);
      const double hard = aoc::theta_hard_gg1_approx(in, &rep);
      const double xi = aoc::throughput_gg1_approx(in, &rep);
      const double F = aoc::ft_cdf(in, in.w);
      for (const auto& wmsg : rep.warnings) std::cerr << "warning: " << wmsg << '\n';
      aoc::CsvWriter w(std::cout, {"theta_soft", "theta_hard_approx", "throughput_approx", "delay_cdf_at_w"});
      w.row(soft, hard, xi, F);
      return ok;
    }

    if (*pa) {
      if (pa_u.empty()) {
        double xi_max = 0;
        for (double l : aoc::probe_grid(pq, 400)) xi_max = std::max(xi_max, aoc::pareto_eval(pq, l).second);
        for (std::size_t k = 0; k < pa_points; ++k)
          pa_u.push_back(xi_max * static_cast<double>(k) / static_cast<double>(pa_points));
      }
      const auto pts = aoc::frontier(pq, pa_u);
      if (!pa_sim) {
        aoc::CsvWriter w(std::cout, {"u", "lambda_star", "theta", "xi", "feasible"});
        for (const auto& p : pts) w.row(p.u, p.lambda_star, p.theta, p.xi, p.feasible);
        return ok;
      }
      const std::size_t R = pac.replications.value_or(5);
      aoc::CsvWriter w(std::cout,
                       {"u", "lambda_star", "theta", "xi", "feasible", "sim_theta", "sim_ci_lo", "sim_ci_hi", "sim_xi"});
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto& p = pts[k];
        if (!p.feasible) {
          const double nan = std::numeric_limits<double>::quiet_NaN();
          w.row(p.u, p.lambda_star, p.theta, p.xi, p.feasible, nan, nan, nan, nan);
          continue;
        }
        auto runs = aoc::parallel_map<aoc::TandemResult>(R, pac.threads, [&](std::size_t r) {
          return aoc::run_tandem(aoc::harness_detail::mm1_tandem(p.lambda_star, pq.mu_t, pq.mu_c, pq.w,
                                                                 aoc::DeadlineKind::hard, pa_tasks,
                                                                 pac.seed.value_or(1), aoc::derive_stream_id({8u, k, r})));
        });
        std::vector<double> th, xi;
        for (const auto& r : runs) {
          th.push_back(r.theta);
          xi.push_back(r.throughput);
        }
        const auto s = aoc::summarize(th);
        w.row(p.u, p.lambda_star, p.theta, p.xi, p.feasible, s.mean, s.ci95_lo, s.ci95_hi, aoc::summarize(xi).mean);
      }
      return ok;
    }

    if (*ex) {
      if (manifest.empty() == exc.config.empty())
        throw aoc::ConfigError("experiment needs exactly one of --config or --manifest");
      auto cfg = manifest.empty() ? aoc::load_experiment(exc.config) : aoc::load_manifest(manifest);
      return run_experiment_cmd(cfg, exc);
    }

    if (*pl) {
      std::ifstream in(pl_csv);
      if (!in) throw aoc::ConfigError("cannot open '" + pl_csv + "'");
      const std::string svg = aoc::render_plot(aoc::read_csv(in, pl_csv), ps);
      if (pl_out.empty()) {
        std::cout << svg;
      } else {
        std::ofstream f(pl_out, std::ios::binary);
        if (!f) throw aoc::ConfigError("cannot write '" + pl_out + "'");
        f << svg;
      }
      return ok;
    }
  } catch (const aoc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const aoc::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return numeric_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return numeric_error;
  }
  return ok;
}
