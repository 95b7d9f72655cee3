#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "aoc/closed_form.hpp"
#include "aoc/gg_analytic.hpp"
#include "aoc/tandem.hpp"

using namespace aoc;

namespace {

const GGInputs& soft_inputs() {
  static const GGInputs in = mm1_tandem_inputs({1.0, 2.0, 3.0, 0.5}, 2001);
  return in;
}

}  // namespace

TEST(GG, ReducesToMM1Soft) {
  const MM1Params p{1.0, 2.0, 3.0, 0.5};
  EXPECT_NEAR(theta_soft_gg1(soft_inputs()), theta_soft_mm1(p), 1e-3 * theta_soft_mm1(p));
}

TEST(GG, ReducesToMM1HardAndThroughput) {
  const MM1Params p{0.1, 2.0, 3.0, 0.5};
  const auto in = mm1_tandem_inputs(p, 2001);
  EXPECT_NEAR(theta_hard_gg1_approx(in), theta_hard_mm1_approx(p), 1e-3 * theta_hard_mm1_approx(p));
  EXPECT_NEAR(throughput_gg1_approx(in), throughput_mm1_approx(p), 1e-3 * throughput_mm1_approx(p));
  EXPECT_NEAR(ft_cdf(in, p.w), 1.0 - epsilon_w(p), 1e-3);
}

TEST(GG, ReducesToAoIWithoutDeadline) {
  const MM1Params p{0.7, 1.5, 2.5, std::numeric_limits<double>::infinity()};
  EXPECT_NEAR(theta_soft_gg1(mm1_tandem_inputs(p, 2001)), aoi_mm1_tandem(p), 1e-3 * aoi_mm1_tandem(p));
}

TEST(GG, CrossTermsAgainstClosedForms) {
  for (const MM1Params p : {MM1Params{1.0, 2.0, 3.0, 1.0}, MM1Params{0.5, 3.0, 1.0, 1.0}, MM1Params{1.2, 2.0, 2.0, 1.0}}) {
    const auto in = mm1_tandem_inputs(p, 2001);
    const double l = p.lambda, mt = p.mu_t, mc = p.mu_c;
    const double g1 = p.rho_t() * p.rho_t() / (mt * p.delta_t());
    const double g2 = l * l / (mc * mc * (mc - l)) + l * l / (mt * mc * (mt + mc - l));
    EXPECT_NEAR(l * g1_quadrature(in), g1, 2e-3 * g1);
    // S_t is sampled on the U grid, so the error grows with mu_t * h
    EXPECT_NEAR(l * g2_quadrature(in), g2, 5e-3 * g2);
    const auto fine = mm1_tandem_inputs(p, 4001);
    EXPECT_LT(std::abs(l * g2_quadrature(fine) - g2), 0.5 * std::abs(l * g2_quadrature(in) - g2) + 1e-9);
  }
}

// E[X_k W_{k,t}] and E[X_k W_{k,c}] estimated on a simulated sample path with
// a non-exponential transmitter, against quadrature over histogram joints.
TEST(GG, CrossTermsAgainstMonteCarlo) {
  TandemConfig c;
  c.arrival = Exponential{1.0};
  c.transmit = Gamma{2.0, 4.0};
  c.compute = Exponential{2.0};
  c.task_count = 1'000'000;
  c.seed = 31;
  double s1 = 0, s2 = 0;
  std::uint64_t n = 0;
  simulate_tasks(c, [&](const TaskRecord& r) {
    if (r.k <= c.warmup_count()) return;
    const double wt = r.d1 - r.St - r.tau;
    const double wc = r.tau2 - r.d1;
    s1 += r.X * wt;
    s2 += r.X * wc;
    ++n;
  });
  TandemConfig cal = c;
  cal.seed = 32;
  const auto in = gg_inputs_from_simulation(cal, 14.0, 281, 2001);
  EXPECT_NEAR(g1_quadrature(in), s1 / n, 0.03 * s1 / n);
  EXPECT_NEAR(g2_quadrature(in), s2 / n, 0.03 * s2 / n);
}

TEST(GG, SoftFormulaMatchesSimulationForGammaTransmitter) {
  TandemConfig c;
  c.arrival = Exponential{1.0};
  c.transmit = Gamma{2.0, 4.0};
  c.compute = Exponential{2.0};
  c.w = 1.0;
  c.task_count = 1'000'000;
  c.seed = 41;
  const double sim = run_tandem(c).theta;
  c.seed = 42;
  const auto in = gg_inputs_from_simulation(c, 14.0, 281, 2001);
  EXPECT_NEAR(theta_soft_gg1(in), sim, 0.02 * sim);
}

TEST(GG, GridHalvingChangesLittle) {
  for (const MM1Params p : {MM1Params{1.0, 2.0, 3.0, 0.5}, MM1Params{0.1, 2.0, 3.0, 0.5}}) {
    const auto a = mm1_tandem_inputs(p, 2001), b = mm1_tandem_inputs(p, 4001);
    EXPECT_NEAR(theta_soft_gg1(a), theta_soft_gg1(b), 1e-3 * theta_soft_gg1(b));
    EXPECT_NEAR(theta_hard_gg1_approx(a), theta_hard_gg1_approx(b), 1e-3 * theta_hard_gg1_approx(b));
    EXPECT_NEAR(throughput_gg1_approx(a), throughput_gg1_approx(b), 1e-3 * throughput_gg1_approx(b));
  }
}

TEST(GG, QuadratureErrorIsSecondOrder) {
  const MM1Params p{1.0, 2.0, 3.0, 0.5};
  const double ref = theta_hard_mm1_approx(p);
  const double e1 = std::abs(theta_hard_gg1_approx(mm1_tandem_inputs(p, 1001)) - ref);
  const double e2 = std::abs(theta_hard_gg1_approx(mm1_tandem_inputs(p, 2001)) - ref);
  EXPECT_GT(e1 / e2, 3.0);
  EXPECT_LT(e1 / e2, 5.0);
}

TEST(GG, DelayDensityIntegratesToOne) {
  const auto& in = soft_inputs();
  const auto eta = eta_nodes(in.fUtUc);
  EXPECT_NEAR(trapz(eta, in.fUtUc.step()), 1.0, 1e-3);
  // the zero-width diagonal drops the atom's share of the first half cell
  const MM1Params p{1.0, 2.0, 3.0, 0.5};
  const double h = in.fUtUcmSc.step();
  const double lost = 0.5 * h * (1.0 - p.rho_c()) * p.a();
  const auto eta2n = eta_nodes(in.fUtUcmSc);
  EXPECT_EQ(eta2n[0], 0.0);
  EXPECT_NEAR(trapz(eta2n, h), 1.0 - lost, 1e-4);
}

TEST(GG, EtaOutsideRangeIsFlagged) {
  GGReport rep;
  const double top = 2.0 * soft_inputs().fUtUc.hi;
  EXPECT_EQ(eta1(soft_inputs(), top * 1.01, &rep), 0.0);
  EXPECT_TRUE(rep.truncated);
  EXPECT_FALSE(rep.warnings.empty());
  GGReport clean;
  EXPECT_GT(eta1(soft_inputs(), 0.5, &clean), 0.0);
  EXPECT_FALSE(clean.truncated);
}

TEST(GG, ValidationCatchesBadInputs) {
  auto in = soft_inputs();
  in.lambda = 1.5;  // grid mean says 1
  EXPECT_THROW(validate(in), ConfigError);

  in = soft_inputs();
  in.fX = density_grid(Exponential{1.0}, 0.0, 2.0, 201);  // loses e^-2 > 0.1 of the mass
  in.lambda = 0;
  EXPECT_THROW(validate(in), NumericError);

  in = soft_inputs();
  in.fX = density_grid(Exponential{1.0}, 0.0, 7.0, 2001);  // loses ~1e-3
  in.lambda = 0;
  GGReport rep;
  EXPECT_NO_THROW(validate(in, &rep));
  EXPECT_TRUE(rep.truncated);

  in = soft_inputs();
  in.fUtUcmSc = product_grid(density_grid(Exponential{1.0}, 0.0, 30.0, 101), density_grid(Exponential{1.0}, 0.0, 30.0, 101));
  EXPECT_THROW(validate(in), ConfigError);
}

TEST(GG, SaveLoadRoundTrip) {
  const MM1Params p{1.0, 2.0, 3.0, 0.5};
  const auto in = mm1_tandem_inputs(p, 401);
  const auto dir = std::filesystem::path(::testing::TempDir()) / "gg_roundtrip";
  save_gg_inputs(in, dir);
  const auto back = load_gg_inputs(dir);
  EXPECT_EQ(back.w, in.w);
  EXPECT_EQ(back.lambda, in.lambda);
  EXPECT_EQ(theta_soft_gg1(back), theta_soft_gg1(in));
  EXPECT_EQ(theta_hard_gg1_approx(back), theta_hard_gg1_approx(in));
}

TEST(GG, DeterministicLawRejectedByTabulation) {
  TandemConfig c;
  c.transmit = Deterministic{0.3};
  EXPECT_THROW(gg_inputs_from_simulation(c, 10.0, 101), ConfigError);
}
