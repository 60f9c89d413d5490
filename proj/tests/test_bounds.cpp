#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fuzz.hpp"
#include "infinichain/bounds.hpp"
#include "infinichain/errors.hpp"
#include "infinichain/house_of_cards.hpp"
#include "infinichain/kernel_io.hpp"

using namespace infinichain;

namespace {

ReportConfig small_config(std::vector<std::size_t> ks) {
  ReportConfig c;
  c.k_grid = std::move(ks);
  c.horizon = 50;
  c.replicas = 200;
  c.theta_replicas = 2000;
  c.seed = 3;
  return c;
}

std::vector<std::string> csv_lines(const DbarReport& r) {
  std::ostringstream os;
  write_report_csv(r, os);
  std::vector<std::string> out;
  std::istringstream is(os.str());
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Dbar, EstimateFields) {
  const Kernel k = load_kernel("renewal_alt");
  const RenewalPartition p(k);
  const DbarEstimate d = estimate_dbar(p, 2, 40, 300, 8);
  EXPECT_EQ(d.sites, 12000u);
  EXPECT_EQ(d.replicas, 300u);
  EXPECT_NEAR(d.mean, static_cast<double>(d.disagreements) / 12000.0, 1e-15);
  EXPECT_LE(d.ci.lo, d.mean);
  EXPECT_GE(d.ci.hi, d.mean);
  EXPECT_GT(d.se, 0.0);
}

TEST(Dbar, IndependentOfWorkerCount) {
  const Kernel k = load_kernel("mixture_geom8");
  const CanonicalPartition p(k);
  const DbarEstimate a = estimate_dbar(p, 3, 50, 400, 2, 1), b = estimate_dbar(p, 3, 50, 400, 2, 7);
  EXPECT_EQ(a.disagreements, b.disagreements);
  EXPECT_EQ(a.se, b.se);
}

// Same seeds, larger k: pooled disagreements do not grow beyond noise.
TEST(Dbar, RefinementInK) {
  fuzz::Rng g(41);
  for (int t = 0; t < 15; ++t) {
    const Kernel k = fuzz::pick(g, 0, 1) ? fuzz::renewal(g) : fuzz::mixture(g, 2, 4);
    const bool renewal = k.family() == Kernel::Family::renewal;
    std::unique_ptr<RangePartition> p;
    if (renewal)
      p = std::make_unique<RenewalPartition>(k);
    else
      p = std::make_unique<CanonicalPartition>(k);
    DbarEstimate prev = estimate_dbar(*p, 0, 40, 300, 5);
    for (std::size_t kk = 1; kk <= 5; ++kk) {
      const DbarEstimate d = estimate_dbar(*p, kk, 40, 300, 5);
      EXPECT_LE(d.mean, prev.mean + 3 * std::hypot(d.se, prev.se)) << t << ' ' << kk;
      prev = d;
    }
  }
}

TEST(Theta, EstimateTail) {
  const Kernel k = load_kernel("mixture_532");
  const CanonicalPartition p(k);
  const ThetaEstimate t = estimate_theta(p, Detector::theta_prime, 5000, 1);
  EXPECT_EQ(t.depth.size(), 5000u);
  double over = 0;
  for (auto d : t.depth) over += d > 3;
  EXPECT_DOUBLE_EQ(t.tail(3), over / 5000);
  EXPECT_GE(t.tail(0), t.tail(3));
  EXPECT_GT(t.tail_se(0), 0.0);
}

TEST(Bounds, AchierIsVkDpBitForBit) {
  for (const auto& name : builtin_kernel_names()) {
    const Kernel k = load_kernel(name);
    const AlphaSequence a = alpha_seq(k, 12);
    const Eigen::VectorXd v = vk_dp(a.values, 12);
    for (std::size_t kk = 0; kk <= 12; ++kk) EXPECT_EQ(bound_achier(a, kk), v(static_cast<Eigen::Index>(kk))) << name;
  }
}

TEST(Bounds, AchierNotApplicableOnPlateau) {
  const AlphaSequence a = alpha_seq(load_kernel("renewal_alt"), 10);
  EXPECT_FALSE(bound_achier_checked(a, 5).applicable);
  const AlphaSequence m = alpha_seq(load_kernel("mixture_532"), 4);
  const BoundValue b = bound_achier_checked(m, 3);
  EXPECT_TRUE(b.applicable);
  EXPECT_EQ(b.value, bound_achier(m, 3));
}

TEST(Bounds, SummableOnIidIsZero) {
  const Kernel k = load_kernel("iid_uniform");
  const ThetaEstimate t = estimate_theta(CanonicalPartition(k), Detector::theta_prime, 100, 1);
  EXPECT_EQ(t.mean, 0.0);
  for (std::size_t kk : {0u, 1u, 5u}) EXPECT_EQ(bound_summable(k, kk, t).value, 0.0);
}

// For lambda_j proportional to 2^-j, 1 - alpha_k = sum_{j>k} lambda_j.
TEST(Bounds, SummableTracksWeightTail) {
  const Kernel k = load_kernel("mixture_geom8");
  const ThetaEstimate t = estimate_theta(CanonicalPartition(k), Detector::theta_prime, 2000, 1);
  const auto& w = k.mixture_spec()->weights;
  for (std::size_t kk = 0; kk <= 8; ++kk) {
    const double tail = w.tail(w.size() - 1 - static_cast<Eigen::Index>(kk)).sum();
    const BoundValue b = bound_summable(k, kk, t);
    EXPECT_TRUE(b.applicable);
    EXPECT_NEAR(b.value, t.mean * tail, 1e-12) << kk;
    EXPECT_GE(b.upper, b.value);
  }
  EXPECT_FALSE(bound_summable(load_kernel("renewal_alt"), 2, t).applicable);
  EXPECT_TRUE(summable_continuity(load_kernel("renewal_half")));
  EXPECT_FALSE(summable_continuity(load_kernel("renewal_alt")));
}

TEST(Bounds, ThetaTailBeyondCapIsNotApplicable) {
  ThetaEstimate t;
  t.depth = {0, 1, 2};
  t.window_cap = 4;
  EXPECT_FALSE(bound_theta_tail(4, t).applicable);
  EXPECT_TRUE(bound_theta_tail(2, t).applicable);
  EXPECT_NEAR(bound_theta_tail(1, t).value, 1.0 / 3.0, 1e-15);
}

TEST(Bounds, EllAtZeroIsDirectProduct) {
  const Kernel k = load_kernel("renewal_alt");
  const ThetaEstimate t = estimate_theta(CanonicalPartition(k), Detector::ell_based, 2000, 2);
  const auto ell = sample_ell(k, 20000, 3, 1 << 20);
  double over = 0;
  for (auto e : ell) over += (e < 0 || e > 0);
  EXPECT_NEAR(bound_ell(0, t, ell).value, t.mean * over / 20000, 1e-12);
}

TEST(Verdict, Names) {
  EXPECT_EQ(to_string(Verdict::ok), "OK");
  EXPECT_EQ(to_string(Verdict::violated), "VIOLATED");
  EXPECT_EQ(to_string(Verdict::not_applicable), "NA");
}

TEST(LocalContinuity, StrongRenewalLike) {
  const double a0 = 0.6, a2 = 0.3;
  const auto s = LocalContinuitySpec::strong(a0, a2, [](std::int64_t i) { return i + 1; });
  EXPECT_EQ(s.ell_inverse(0), 0);
  EXPECT_EQ(s.ell_inverse(5), 4);
  const Eigen::VectorXd r = s.r_values(30);
  double prev = a0;
  EXPECT_DOUBLE_EQ(r(0), a0);
  for (Eigen::Index k = 1; k < 30; ++k) {
    prev = std::max(prev, 1 - std::pow(1 - a2, static_cast<double>(k - 1)));
    EXPECT_DOUBLE_EQ(r(k), prev);
  }
}

TEST(LocalContinuity, UniformHalvingAbar) {
  const double a2 = 0.4;
  const auto s = LocalContinuitySpec::uniform(0.2, a2, [](std::size_t k) { return 1 - std::pow(2.0, -double(k)); });
  const Eigen::VectorXd r = s.r_values(40);
  double prev = 0.2;
  for (Eigen::Index k = 1; k < 40; ++k) {
    prev = std::max(prev, std::max(0.0, 1 - std::pow(2.0, -double(k)) / a2));
    EXPECT_DOUBLE_EQ(r(k), prev) << k;
  }
  for (Eigen::Index k = 1; k < 40; ++k) EXPECT_GE(r(k), r(k - 1));
}

TEST(LocalContinuity, FromRenewal) {
  const Kernel k = load_kernel("renewal_half");
  const auto s = LocalContinuitySpec::from_renewal(k);
  EXPECT_EQ(s.variant(), LocalContinuitySpec::Variant::uniform);
  EXPECT_DOUBLE_EQ(s.alpha2(), 0.3);
  const LocalBound b = bound_local_continuity(s, 40);
  EXPECT_EQ(b.n, 6u);
  EXPECT_NEAR(b.uk, uk(0.3, 40, UkMode::exact), 1e-15);
  EXPECT_NEAR(b.vk, vk_dp(s.r_values(100000), 6)(6), 1e-15);
  EXPECT_THROW(bound_local_continuity(s, 3), KTooSmall);
  EXPECT_THROW(LocalContinuitySpec::from_renewal(load_kernel("markov1")), InvalidKernel);
  // alpha_k plateaus at 0.9 < 1: r stays below 1 and the products are summable
  EXPECT_THROW(bound_local_continuity(LocalContinuitySpec::from_renewal(load_kernel("renewal_alt")), 40),
               DivergenceCheckFailed);
}

TEST(LocalContinuity, DivergenceGate) {
  // r_k -> 1 fast: the product stays positive, the sum of products diverges
  const auto ok = LocalContinuitySpec::uniform(0.5, 0.5, [](std::size_t k) { return 1 - std::pow(2.0, -double(k)); });
  EXPECT_TRUE(divergence_check(ok.r_values(1000)));
  // r stuck at 0.5: the products are summable
  const auto bad = LocalContinuitySpec::uniform(0.5, 0.5, [](std::size_t) { return 0.5; });
  EXPECT_FALSE(divergence_check(bad.r_values(1000)));
  EXPECT_THROW(bound_local_continuity(bad, 100, UkMode::exact, 1000), DivergenceCheckFailed);
}

// Polynomially slow r: the v term dominates and u_k / v tends to 0.
TEST(LocalContinuity, VTermLeads) {
  const double a2 = 0.5;
  const auto s = LocalContinuitySpec::uniform(0.5, a2, [](std::size_t k) { return 1 - 0.2 / double(k + 1); });
  double prev = 1e300;
  for (std::size_t k : {100u, 400u, 1600u, 6400u}) {
    const LocalBound b = bound_local_continuity(s, k, UkMode::exact, 10000);
    const double ratio = b.uk / b.vk;
    EXPECT_LT(ratio, prev) << k;
    prev = ratio;
  }
  EXPECT_LT(prev, 1e-10);
}

TEST(Report, RenewalCellsAndVerdicts) {
  const DbarReport r = report(load_kernel("renewal_alt"), small_config({2, 8, 12}));
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_TRUE(r.theta_renewal.has_value());
  EXPECT_TRUE(r.theta_ell.has_value());
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.summable.verdict, Verdict::not_applicable);
    EXPECT_EQ(row.achier.verdict, Verdict::not_applicable);
    EXPECT_NE(row.ell.verdict, Verdict::violated);
    EXPECT_NE(row.theta.verdict, Verdict::violated);
    EXPECT_TRUE(row.dbar_other.has_value());
  }
  for (const auto& row : r.rows) EXPECT_FALSE(row.local.bound.applicable);
  EXPECT_FALSE(r.any_violation());
}

TEST(Report, ContinuousRenewalHasLocalBound) {
  const DbarReport r = report(load_kernel("renewal_half"), small_config({2, 8, 12}));
  // 2 < 2 / alpha(2): u_k undefined
  EXPECT_EQ(r.rows[0].local.verdict, Verdict::not_applicable);
  EXPECT_TRUE(r.rows[2].local.bound.applicable);
  EXPECT_EQ(r.rows[2].local.verdict, Verdict::ok);
  EXPECT_EQ(r.rows[2].summable.verdict, Verdict::ok);
}

TEST(Report, MarkovIsExactAtOrder) {
  const DbarReport r = report(load_kernel("markov2"), small_config({2, 3}));
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.dbar.disagreements, 0u);
    EXPECT_EQ(row.summable.bound.value, 0.0);
    EXPECT_EQ(row.summable.verdict, Verdict::ok);
    EXPECT_EQ(row.local.verdict, Verdict::not_applicable);
  }
}

TEST(Report, VwnnKernelHasNoThetaTail) {
  const DbarReport r = report(load_kernel("mixture_vwnn"), small_config({1, 2}));
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.theta.verdict, Verdict::not_applicable);
    EXPECT_EQ(row.summable.verdict, Verdict::ok);
  }
}

TEST(Report, BoundsOnlyMode) {
  ReportConfig c = small_config({1, 4});
  c.empirical = false;
  const DbarReport r = report(load_kernel("mixture_geom8"), c);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.summable.bound.applicable);
    EXPECT_EQ(row.summable.verdict, Verdict::not_applicable);
  }
  const auto lines = csv_lines(r);
  EXPECT_NE(lines[1].find(",NA,NA,"), std::string::npos);
}

TEST(Report, CsvLayout) {
  const DbarReport r = report(load_kernel("mixture_532"), small_config({1, 2}));
  const auto lines = csv_lines(r);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "kernel,k,dbar_hat,dbar_ci,b_summable,b_ell,b_theta,b_achier,b_local,verdicts");
  EXPECT_EQ(lines[1].rfind("mixture_532,1,", 0), 0u);
  EXPECT_NE(lines[1].find("summable=OK;ell=NA;theta=OK;achier=OK;local=NA"), std::string::npos) << lines[1];
}

// Every shipped kernel: no applicable bound is violated.
TEST(Report, SoundnessSweep) {
  for (const auto& name : builtin_kernel_names()) {
    const DbarReport r = report(load_kernel(name), small_config({1, 2, 4, 8}));
    for (const auto& row : r.rows) {
      for (const BoundCell* c : {&row.summable, &row.ell, &row.theta, &row.achier, &row.local})
        EXPECT_NE(c->verdict, Verdict::violated) << name << " k=" << row.k;
      EXPECT_GE(row.dbar.mean, 0.0);
      EXPECT_LE(row.dbar.mean, 1.0);
    }
  }
}
