#include <gtest/gtest.h>

#include <cmath>

#include "fuzz.hpp"
#include "infinichain/errors.hpp"
#include "infinichain/house_of_cards.hpp"
#include "infinichain/stats.hpp"
#include "infinichain/stream.hpp"

using namespace infinichain;

namespace {

// P(H_k = 0) by brute force over all 2^k climb/fall paths.
double vk_paths(const HocSpec& s, std::size_t k) {
  double total = 0.0;
  for (std::uint32_t m = 0; m < (1u << k); ++m) {
    double p = 1.0;
    std::size_t h = 0;
    for (std::size_t step = 0; step < k; ++step) {
      const bool climb = m >> step & 1u;
      p *= climb ? s.r(h) : 1.0 - s.r(h);
      h = climb ? h + 1 : 0;
    }
    if (h == 0) total += p;
  }
  return total;
}

}  // namespace

TEST(HocSpec, ParseFamilies) {
  EXPECT_EQ(HocSpec::parse("const:0.5").family(), HocSpec::Family::constant);
  EXPECT_DOUBLE_EQ(HocSpec::parse("exp:0.5,0.1").r(2), 1.0 - 0.5 * 0.01);
  EXPECT_DOUBLE_EQ(HocSpec::parse("harmonic:0.2").r(0), 0.8);
  EXPECT_DOUBLE_EQ(HocSpec::parse("harmonic:0.2").r(4), 0.95);
  EXPECT_DOUBLE_EQ(HocSpec::parse("pow:0.3,2").r(1), 1.0 - 0.3 / 4.0);
  const HocSpec l = HocSpec::parse("list:0.2,0.5,0.7;0.9");
  EXPECT_DOUBLE_EQ(l.r(1), 0.5);
  EXPECT_DOUBLE_EQ(l.r(50), 0.9);
  EXPECT_THROW(HocSpec::parse("list:0.5,0.2;0.9"), Error);
  EXPECT_THROW(HocSpec::parse("wild:1"), Error);
  EXPECT_THROW(HocSpec::parse("const:1.5"), Error);
  EXPECT_THROW(HocSpec::parse("exp:0.5"), Error);
}

TEST(HocSpec, ReturnLawSumsToOne) {
  fuzz::Rng g(1);
  for (int t = 0; t < 50; ++t) {
    const HocSpec s = fuzz::hoc_spec(g, static_cast<std::size_t>(fuzz::pick(g, 1, 8)));
    for (std::size_t k = 1; k < 40; ++k) {
      double nu = 1.0;
      for (std::size_t i = 0; i + 2 <= k; ++i) nu *= s.r(i);
      ASSERT_NEAR(s.t(k), (1 - s.r(k - 1)) * nu, 1e-15);
    }
    double total = s.t_infinity(), prod = 1.0;
    for (std::size_t k = 1; k < 100000000 && prod > 1e-15; ++k) {
      total += (1 - s.r(k - 1)) * prod;
      prod *= s.r(k - 1);
    }
    // a tail of 1 leaves mass at infinity; anything below makes the return certain
    EXPECT_NEAR(total, 1.0, 1e-10) << s.label();
    EXPECT_EQ(s.summable(), s.t_infinity() > 0.0) << s.label();
  }
}

TEST(HocSpec, TInfinityMatchesProduct) {
  const HocSpec e = HocSpec::exponential(0.5, 0.1);
  double p = 1.0;
  for (std::size_t k = 0; k < 200; ++k) p *= e.r(k);
  EXPECT_NEAR(e.t_infinity(), p, 1e-14);
  EXPECT_GT(e.t_infinity(), 0.0);
  EXPECT_EQ(HocSpec::harmonic(0.2).t_infinity(), 0.0);
  EXPECT_EQ(HocSpec::constant(0.5).t_infinity(), 0.0);
  const HocSpec pw = HocSpec::power(0.3, 2.0);
  double q = 0.0;
  for (std::size_t k = 0; k < 4000000; ++k) q += std::log(pw.r(k));
  EXPECT_NEAR(pw.t_infinity(), std::exp(q), 1e-6);
}

TEST(VkDp, ConstantIsOneMinusR) {
  for (double r : {0.0, 0.3, 0.5, 0.9}) {
    const Eigen::VectorXd v = vk_dp(HocSpec::constant(r), 200);
    EXPECT_EQ(v(0), 1.0);
    for (Eigen::Index k = 1; k <= 200; ++k) ASSERT_NEAR(v(k), 1.0 - r, 1e-14) << r << ' ' << k;
  }
}

TEST(VkDp, TwoStepHandValue) {
  const HocSpec s = HocSpec::list({0.5, 0.5}, 0.5);
  EXPECT_NEAR(vk_dp(s, 2)(2), 0.5, 1e-15);
  EXPECT_NEAR(vk_combinatorial(s, 2), 0.5, 1e-15);
  EXPECT_NEAR(vk_combinatorial(s, 1), 0.5, 1e-15);
  EXPECT_EQ(vk_combinatorial(s, 0), 1.0);
  EXPECT_THROW(vk_combinatorial(s, 21), KTooLarge);
}

TEST(VkDp, MatchesPathEnumeration) {
  fuzz::Rng g(2);
  for (int t = 0; t < 20; ++t) {
    const HocSpec s = fuzz::hoc_spec(g, 6);
    const Eigen::VectorXd v = vk_dp(s, 12);
    for (std::size_t k = 0; k <= 12; ++k) ASSERT_NEAR(v(static_cast<Eigen::Index>(k)), vk_paths(s, k), 1e-13);
  }
}

// Composition sum and DP agree on 100 fuzzed specs.
TEST(VkProperty, DpEqualsCompositions) {
  fuzz::Rng g(3);
  for (int t = 0; t < 100; ++t) {
    const HocSpec s = fuzz::hoc_spec(g, static_cast<std::size_t>(fuzz::pick(g, 1, 16)));
    const Eigen::VectorXd v = vk_dp(s, 14);
    for (std::size_t k = 0; k <= 14; ++k)
      ASSERT_NEAR(v(static_cast<Eigen::Index>(k)), vk_combinatorial(s, k), 1e-12) << s.label() << ' ' << k;
  }
}

TEST(VkProperty, DpWithinUnitInterval) {
  fuzz::Rng g(4);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd v = vk_dp(fuzz::hoc_spec(g, 10), 300);
    EXPECT_EQ(v(0), 1.0);
    EXPECT_GE(v.minCoeff(), 0.0);
    EXPECT_LE(v.maxCoeff(), 1.0);
  }
}

// 250 correlated per-k comparisons: a stray 3 sigma excursion is expected, a 4.5 sigma one is not.
TEST(VkMc, AgreesWithDp) {
  fuzz::Rng g(5);
  int beyond3 = 0, points = 0;
  for (int t = 0; t < 5; ++t) {
    const HocSpec s = fuzz::hoc_spec(g, 10);
    const Eigen::VectorXd v = vk_dp(s, 50);
    const auto mc = vk_mc(s, 50, 100000, 7 + t);
    for (std::size_t k = 1; k <= 50; ++k) {
      const double vk = v(static_cast<Eigen::Index>(k));
      const double se = std::sqrt(vk * (1 - vk) / 1e5) + 1e-12;
      const double z = std::abs(mc[k].mean - vk) / se;
      ++points;
      beyond3 += z > 3;
      ASSERT_LT(z, 4.5) << s.label() << ' ' << k;
    }
  }
  EXPECT_LE(beyond3, 3) << "of " << points;
  const auto c = vk_mc(HocSpec::constant(0.5), 10, 100000, 1);
  EXPECT_NEAR(c[10].mean, 0.5, 3 * c[10].sigma);
  EXPECT_THROW(vk_mc(HocSpec::constant(0.5), 10, 0, 1), Error);
}

TEST(VkMc, WorkerCountDoesNotChangeEstimate) {
  const HocSpec s = HocSpec::exponential(0.5, 0.3);
  const auto a = vk_mc(s, 20, 20000, 3, 1), b = vk_mc(s, 20, 20000, 3, 4);
  for (std::size_t k = 0; k <= 20; ++k) EXPECT_EQ(a[k].mean, b[k].mean);
}

// P(I_l <= n for all l <= K) = (1 - nu_{n+1})^K.
TEST(Facts, ReturnTimesIndependent) {
  const HocSpec s = HocSpec::list({0.3, 0.6, 0.8}, 0.9);
  constexpr std::size_t n = 3, K = 2, reps = 50000;
  std::size_t hit = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto I = return_times(s, K, 100, replica_seed(11, r));
    hit += std::all_of(I.begin(), I.end(), [](std::size_t x) { return x <= n; });
  }
  const double exact = std::pow(1.0 - s.nu(n + 1), static_cast<double>(K));
  const double p = static_cast<double>(hit) / reps;
  EXPECT_NEAR(p, exact, 3 * std::sqrt(exact * (1 - exact) / reps));
}

TEST(Facts, ReturnLawBrackets) {
  fuzz::Rng g(6);
  for (int t = 0; t < 50; ++t) {
    const HocSpec s = fuzz::hoc_spec(g, 12);
    const double tinf = s.t_infinity();
    for (std::size_t n = 1; n < 30; ++n) {
      ASSERT_LE(tinf * (1 - s.r(n)), s.t(n + 1) + 1e-15);
      ASSERT_LE(s.t(n + 1), 1 - s.r(n) + 1e-15);
    }
  }
}

TEST(BoundExponential, ShiftedRateIsDominated) {
  // 1 - r_k = 0.5 * 0.1^{k+1} is within C_r rho^k with C_r = 0.5, rho = 0.1
  const HocSpec s = HocSpec::exponential(0.05, 0.1);
  const Eigen::VectorXd v = vk_dp(s, 60);
  for (std::size_t k = 0; k <= 60; ++k) EXPECT_LE(v(static_cast<Eigen::Index>(k)), bound_exponential(0.5, 0.1, k));
}

TEST(BoundExponential, Formula) {
  EXPECT_DOUBLE_EQ(bound_exponential(0.5, 0.1, 0), 2.0);
  EXPECT_NEAR(bound_exponential(0.5, 0.1, 1), 2.0 * std::exp(0.5) * 0.1, 1e-15);
  EXPECT_THROW(bound_exponential(std::log(10.0), 0.1, 3), CrTooLarge);
  EXPECT_THROW(bound_exponential(0.0, 0.1, 3), CrTooLarge);
}

// With 1 - r_k = 0.5 * 0.1^k, v_1 = 1 - r_0 = 0.5 exceeds 2 * e^{0.5} * 0.1.
TEST(BoundExponential, UnshiftedRateBreaksAtOne) {
  const Eigen::VectorXd v = vk_dp(HocSpec::exponential(0.5, 0.1), 60);
  EXPECT_DOUBLE_EQ(v(1), 0.5);
  EXPECT_GT(v(1), bound_exponential(0.5, 0.1, 1));
}

TEST(BoundGeneric, DominatesDp) {
  for (const HocSpec& s : {HocSpec::exponential(0.8, 0.5), HocSpec::exponential(0.5, 0.1), HocSpec::power(0.5, 3.0)}) {
    const Eigen::VectorXd v = vk_dp(s, 40);
    for (std::size_t n : {10u, 20u, 40u}) {
      const GenericBound b = bound_summable_generic(s, n);
      EXPECT_FALSE(b.degenerate);
      EXPECT_GE(b.value, v(static_cast<Eigen::Index>(n))) << s.label() << ' ' << n;
      EXPECT_GE(b.best_K, 1u);
    }
  }
}

TEST(BoundGeneric, MatchesBruteMinimum) {
  const HocSpec s = HocSpec::exponential(0.8, 0.5);
  const double tinf = s.t_infinity();
  for (std::size_t n = 1; n <= 30; ++n) {
    double best = 1e300;
    for (std::size_t K = 1; K <= n; ++K)
      best = std::min(best, double(K * K) * (1 - s.r(n / K)) + std::pow(1 - tinf, double(K)));
    EXPECT_DOUBLE_EQ(bound_summable_generic(s, n).value, best);
  }
}

TEST(BoundGeneric, DegenerateWithoutMassAtInfinity) {
  const GenericBound b = bound_summable_generic(HocSpec::constant(0.5), 10);
  EXPECT_TRUE(b.degenerate);
  EXPECT_THROW(bound_summable_generic(HocSpec::constant(0.5), 0), Error);
}

TEST(BoundNonsummable, ExponentAndGuard) {
  const double r = 0.2;
  EXPECT_NEAR(2.0 - (1 + r) * (1 + r), 0.56, 1e-15);
  const double k = 1000;
  EXPECT_NEAR(bound_nonsummable(r, 1000, 1.0), std::pow(std::log(k), 3.2) / std::pow(k, 0.56), 1e-9);
  EXPECT_THROW(bound_nonsummable(0.5, 10, 1.0), InvalidR);
  EXPECT_THROW(bound_nonsummable(0.42, 10, 1.0), InvalidR);
  EXPECT_NO_THROW(bound_nonsummable(0.41, 10, 1.0));
  EXPECT_THROW(bound_nonsummable(0.0, 10, 1.0), InvalidR);
}

TEST(BoundNonsummable, SlopeAndCalibratedDomination) {
  const HocSpec s = HocSpec::harmonic(0.2);
  const Eigen::VectorXd v = vk_dp(s, 10000);
  std::vector<double> x, y;
  for (std::size_t k = 100; k <= 10000; k += 10) {
    x.push_back(std::log(static_cast<double>(k)));
    y.push_back(std::log(v(static_cast<Eigen::Index>(k))));
  }
  EXPECT_LE(least_squares(x, y).slope, -0.5);
  const double C = calibrate_nonsummable_constant(v, 0.2, 16, 64);
  EXPECT_GT(C, 0.0);
  for (std::size_t k = 65; k <= 10000; ++k)
    ASSERT_LE(v(static_cast<Eigen::Index>(k)), bound_nonsummable(0.2, k, C)) << k;
}

TEST(Qualitative, ConstantHasNoDivergencePrecondition) {
  const QualitativeReport q = qualitative_checks(HocSpec::constant(0.5), 500);
  ASSERT_EQ(q.items.size(), 4u);
  EXPECT_FALSE(q.items[0].applicable);
  EXPECT_FALSE(q.items[1].applicable);
  EXPECT_FALSE(q.items[3].applicable);
}

TEST(Qualitative, ExponentialSpec) {
  const QualitativeReport q = qualitative_checks(HocSpec::exponential(0.5, 0.5), 500);
  for (const auto& it : q.items) {
    if (it.applicable) EXPECT_TRUE(it.holds) << it.item << ": " << it.detail;
  }
  EXPECT_TRUE(q.items[1].applicable);
  EXPECT_TRUE(q.items[3].applicable);
  EXPECT_EQ(q.ratio.size(), 501);
}

TEST(Qualitative, HarmonicTendsToZero) {
  const QualitativeReport q = qualitative_checks(HocSpec::harmonic(0.2), 2000);
  EXPECT_TRUE(q.items[0].applicable);
  EXPECT_TRUE(q.items[0].holds) << q.items[0].detail;
  EXPECT_FALSE(q.items[1].applicable);
}

TEST(Qualitative, SummablePartialSumsFlatten) {
  const QualitativeReport q = qualitative_checks(HocSpec::power(0.5, 2.0), 2000);
  EXPECT_TRUE(q.items[1].applicable);
  EXPECT_TRUE(q.items[1].holds) << q.items[1].detail;
}
