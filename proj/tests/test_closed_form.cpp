#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "aoc/closed_form.hpp"
#include "aoc/rng.hpp"

using namespace aoc;

namespace {

// Composite Simpson on [a, b].
double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

// Sojourn times at the two stations are independent exponentials with rates
// a = mu_t - lambda and b = mu_c - lambda; the compute-queue wait is 0 with
// probability 1 - rho_c and otherwise Exp(b).
struct Oracle {
  MM1Params p;
  double a() const { return p.mu_t - p.lambda; }
  double b() const { return p.mu_c - p.lambda; }
  double delay_pdf(double t) const {
    return simpson([&](double s) { return a() * std::exp(-a() * s) * b() * std::exp(-b() * (t - s)); }, 0, t,
                   200 + static_cast<int>(10.0 * t * (a() + b())));
  }
  double top() const { return 60.0 / std::min(a(), b()); }
  double eps() const { return 1.0 - simpson([&](double t) { return delay_pdf(t); }, 0, p.w, 2000); }
  double cond_mean() const {
    return simpson([&](double t) { return t * delay_pdf(t); }, 0, p.w, 2000) / (1.0 - eps());
  }
  // E[((T - w)^+)^2]
  double excess2() const {
    return simpson([&](double t) { return (t - p.w) * (t - p.w) * delay_pdf(t); }, p.w, p.w + top(), 4000);
  }
  // E[((U_t + W_c - w)^+)^2]
  double excess2_wait() const {
    const double rc = p.lambda / p.mu_c;
    auto tail2_exp = [&](double r, double x) {  // E[((Y - x)^+)^2], Y ~ Exp(r)
      return x <= 0 ? 2 / (r * r) - 2 * x / r + x * x : 2 / (r * r) * std::exp(-r * x);
    };
    const double atom = (1 - rc) * tail2_exp(a(), p.w);
    auto f = [&](double y) { return b() * std::exp(-b() * y) * tail2_exp(a(), p.w - y); };
    // kink at y = w
    const double cont = rc * (simpson(f, 0, p.w, 4000) + simpson(f, p.w, p.w + top(), 8000));
    return atom + cont;
  }
};

MM1Params random_stable(RngStream& r) {
  MM1Params p;
  p.mu_t = 0.5 + 4.5 * r.uniform();
  p.mu_c = 0.5 + 4.5 * r.uniform();
  p.lambda = (0.05 + 0.9 * r.uniform()) * std::min(p.mu_t, p.mu_c);
  p.w = 0.1 + 5.0 * r.uniform();
  return p;
}

}  // namespace

TEST(ClosedForm, HandValues) {
  const MM1Params p{1.0, 2.0, 3.0, 0.5};
  EXPECT_NEAR(aoi_mm1_tandem(p), 2.180556, 1e-6);
  EXPECT_NEAR(theta_soft_mm1(p), 2.470487, 1e-6);
  const MM1Params q{0.1, 2.0, 3.0, 0.5};
  EXPECT_NEAR(theta_hard_mm1_approx(q), 31.149425, 1e-6);
  EXPECT_NEAR(throughput_mm1_approx(q), 0.0324135, 1e-7);
}

TEST(ClosedForm, EpsilonAgainstQuadrature) {
  RngStream r(1, 1);
  for (int i = 0; i < 15; ++i) {
    const auto p = random_stable(r);
    EXPECT_NEAR(epsilon_w(p), Oracle{p}.eps(), 1e-7) << p.lambda << " " << p.mu_t << " " << p.mu_c << " " << p.w;
  }
}

TEST(ClosedForm, SoftAgainstQuadratureOfOvershootMoments) {
  RngStream r(2, 1);
  for (int i = 0; i < 10; ++i) {
    const auto p = random_stable(r);
    const Oracle o{p};
    const double want = aoi_mm1_tandem(p) + p.lambda * o.eps() * (o.excess2() - o.excess2_wait()) / 2.0;
    EXPECT_NEAR(theta_soft_mm1(p), want, 1e-6 * want) << p.lambda << " " << p.mu_t << " " << p.mu_c << " " << p.w;
  }
}

TEST(ClosedForm, HardAgainstQuadrature) {
  RngStream r(3, 1);
  for (int i = 0; i < 15; ++i) {
    const auto p = random_stable(r);
    const Oracle o{p};
    const double e = o.eps();
    EXPECT_NEAR(conditional_delay_mean(p), o.cond_mean(), 1e-7 * o.cond_mean());
    const double want = o.cond_mean() + 1.0 / (p.lambda * (1.0 - e));
    EXPECT_NEAR(theta_hard_mm1_approx(p), want, 1e-7 * want);
    EXPECT_NEAR(throughput_mm1_approx(p), p.lambda * (1 - e), 1e-8);
  }
}

TEST(ClosedForm, MomentFormsAgreeWithClosedForms) {
  RngStream r(4, 1);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_stable(r);
    const double h = theta_hard_from_moments(mm1_hard_moments(p));
    EXPECT_NEAR(h, theta_hard_mm1_approx(p), 1e-10 * h);
  }
}

TEST(ClosedForm, AoIReductionAtHugeDeadline) {
  RngStream r(5, 1);
  for (int i = 0; i < 20; ++i) {
    auto p = random_stable(r);
    p.w = 1e6;
    EXPECT_NEAR(theta_soft_mm1(p), aoi_mm1_tandem(p), 1e-9 * aoi_mm1_tandem(p));
    p.w = std::numeric_limits<double>::infinity();
    EXPECT_NEAR(theta_soft_mm1(p), aoi_mm1_tandem(p), 1e-12 * aoi_mm1_tandem(p));
  }
}

TEST(ClosedForm, SymmetryUnderRateSwap) {
  RngStream r(6, 1);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_stable(r);
    MM1Params s = p;
    std::swap(s.mu_t, s.mu_c);
    EXPECT_NEAR(theta_hard_mm1_approx(s), theta_hard_mm1_approx(p), 1e-12 * theta_hard_mm1_approx(p));
    EXPECT_NEAR(throughput_mm1_approx(s), throughput_mm1_approx(p), 1e-12 * throughput_mm1_approx(p));
    EXPECT_NEAR(epsilon_w(s), epsilon_w(p), 1e-12);
    EXPECT_NEAR(aoi_mm1_tandem(s), aoi_mm1_tandem(p), 1e-12 * aoi_mm1_tandem(p));
  }
}

TEST(ClosedForm, TiedBranchIsContinuous) {
  for (double w : {0.2, 1.0, 3.0}) {
    const MM1Params tie{0.8, 2.0, 2.0, w};
    MM1Params near = tie;
    near.mu_c = 2.0 * (1 + 1e-5);
    EXPECT_NEAR(theta_soft_mm1(near), theta_soft_mm1(tie), 1e-4 * theta_soft_mm1(tie));
    EXPECT_NEAR(theta_hard_mm1_approx(near), theta_hard_mm1_approx(tie), 1e-4 * theta_hard_mm1_approx(tie));
    EXPECT_NEAR(throughput_mm1_approx(near), throughput_mm1_approx(tie), 1e-4 * throughput_mm1_approx(tie));
    EXPECT_NEAR(epsilon_w(near), epsilon_w(tie), 1e-5);
    const Oracle o{tie};
    EXPECT_NEAR(epsilon_w(tie), o.eps(), 1e-7);
  }
}

TEST(ClosedForm, DeadlineEdges) {
  const MM1Params z{0.5, 2.0, 3.0, 0.0};
  EXPECT_TRUE(std::isinf(theta_hard_mm1_approx(z)));
  EXPECT_EQ(throughput_mm1_approx(z), 0.0);
  EXPECT_NEAR(epsilon_w(z), 1.0, 1e-15);
  const MM1Params inf{0.5, 2.0, 3.0, std::numeric_limits<double>::infinity()};
  EXPECT_EQ(epsilon_w(inf), 0.0);
  EXPECT_NEAR(throughput_mm1_approx(inf), 0.5, 1e-15);
  EXPECT_NEAR(theta_hard_mm1_approx(inf), 1.0 / 1.5 + 1.0 / 2.5 + 2.0, 1e-12);
}

TEST(ClosedForm, InstabilityIsAnError) {
  EXPECT_THROW(theta_soft_mm1({2.0, 2.0, 3.0, 1.0}), StabilityError);
  EXPECT_THROW(theta_hard_mm1_approx({3.5, 4.0, 3.0, 1.0}), StabilityError);
  EXPECT_THROW(epsilon_w({-1.0, 2.0, 3.0, 1.0}), ConfigError);
  EXPECT_THROW(aoi_mm1_tandem({1.0, 2.0, 3.0, -1.0}), ConfigError);
}

TEST(ClosedForm, GeometricMoments) {
  const auto m = geometric_m_moments(MomentInputs{}, 0.25);
  EXPECT_DOUBLE_EQ(m.EM, 4.0);
  EXPECT_DOUBLE_EQ(m.EM2, 1.75 / 0.0625);
  EXPECT_THROW(geometric_m_moments(MomentInputs{}, 0.0), NumericError);
}
