#include <gtest/gtest.h>

#include <sstream>

#include "fuzz.hpp"
#include "infinichain/errors.hpp"
#include "infinichain/kernel_io.hpp"
#include "infinichain/markov_approx.hpp"
#include "infinichain/partition.hpp"

using namespace infinichain;

namespace {

Kernel identity_mixture() {
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  Eigen::MatrixXd q0(1, 2);
  q0 << 0.5, 0.5;
  Eigen::MatrixXd q1(2, 2);
  q1 << 1, 0, 0, 1;
  return Kernel::mixture(2, w, {q0, q1}, "identity");
}

// Level 0 inflated by half: violates the lemma inequality on purpose.
class InflatedPartition final : public RangePartition {
 public:
  explicit InflatedPartition(const Kernel& k) : RangePartition(k), base_(k) {}
  std::string kind() const override { return "inflated"; }
  Eigen::VectorXd level(std::size_t k, const Past& past) const override {
    Eigen::VectorXd v = base_.level(k, past);
    if (k == 0) v *= 1.5;
    return v;
  }
  Locate try_locate_upto(const Past&, double, std::size_t) const override { return Locate::beyond(0.0); }

 private:
  CanonicalPartition base_;
};

}  // namespace

TEST(Partition, IidAllMassAtRangeZero) {
  const Kernel k = load_kernel("iid_uniform");
  const CanonicalPartition p(k);
  EXPECT_TRUE(p.level(0, Past()).isApprox(Eigen::Vector2d(0.5, 0.5)));
  for (double u : {0.0, 0.3, 0.7, 0.999}) {
    const Lookup l = p.locate(Past(), u);
    EXPECT_EQ(l.range, 0);
    EXPECT_EQ(l.symbol, u < 0.5 ? 1 : 2);
  }
}

TEST(Partition, IdentityMixtureLookup) {
  const Kernel k = identity_mixture();
  const CanonicalPartition p(k);
  EXPECT_EQ(p.locate(Past::parse("1"), 0.75), (Lookup{1, 1}));
  EXPECT_EQ(p.locate(Past::parse("2"), 0.75), (Lookup{2, 1}));
  EXPECT_EQ(p.locate(Past(), 0.1), (Lookup{1, 0}));
  EXPECT_EQ(p.locate(Past(), 0.3), (Lookup{2, 0}));
  EXPECT_THROW(p.locate(Past(), 0.75), PastTooShort);
  const Locate l = p.try_locate(Past(), 0.75);
  EXPECT_EQ(l.status, Locate::Status::needs_past);
  EXPECT_EQ(l.needed, 1);
}

TEST(Partition, CopyMixtureLevelsAreWeightTimesComponent) {
  const Kernel k = load_kernel("mixture_geom8");
  const CanonicalPartition p(k);
  const auto& w = k.mixture_spec()->weights;
  fuzz::Rng g(5);
  for (int t = 0; t < 20; ++t) {
    const Past past = fuzz::past(g, 2, 10, true);
    EXPECT_NEAR(p.level(0, past)(0), w(0) * 0.5, 1e-14);
    for (std::size_t j = 1; j <= 8; ++j) {
      const Eigen::VectorXd lv = p.level(j, past);
      for (int a = 1; a <= 2; ++a)
        EXPECT_NEAR(lv(a - 1), past.at(j) == a ? w(static_cast<Eigen::Index>(j)) : 0.0, 1e-14);
    }
    EXPECT_NEAR(p.level(9, past).sum(), 0.0, 1e-14);
  }
}

TEST(Partition, CanonicalRangeZeroMassIsAlpha0) {
  for (const char* name : {"renewal_alt", "mixture_532", "markov2"}) {
    const Kernel k = load_kernel(name);
    const CanonicalPartition p(k);
    EXPECT_NEAR(p.level(0, Past()).sum(), alpha_seq(k, 0).at(0), 1e-14) << name;
  }
}

TEST(Partition, CanonicalRangeBoundedWhenBelowAlpha) {
  const Kernel k = load_kernel("mixture_532");
  const CanonicalPartition p(k);
  const AlphaSequence a = alpha_seq(k, 3);
  fuzz::Rng g(6);
  for (int t = 0; t < 2000; ++t) {
    const double u = fuzz::unif(g);
    const Past past = fuzz::past(g, 2, 5, true);
    const Lookup l = p.locate(past, u);
    for (std::size_t j = 0; j <= 3; ++j)
      if (u < a.at(j)) ASSERT_LE(l.range, static_cast<int>(j));
  }
}

TEST(Partition, RenewalConstantHazard) {
  const Kernel k = load_kernel("renewal_p04");
  const RenewalPartition p(k);
  EXPECT_DOUBLE_EQ(p.alpha1(), 0.6);
  EXPECT_DOUBLE_EQ(p.alpha2(), 0.4);
  EXPECT_NEAR(p.level(0, Past()).sum(), 1.0, 1e-15);
  fuzz::Rng g(7);
  for (int t = 0; t < 1000; ++t) EXPECT_EQ(p.locate(Past(), fuzz::unif(g)).range, 0);
}

TEST(Partition, RenewalLevelLengths) {
  const Kernel k = load_kernel("renewal_half");  // p = 0.5, 0.3, 0.3, ...
  const RenewalPartition p(k);
  EXPECT_DOUBLE_EQ(p.alpha2(), 0.3);
  EXPECT_DOUBLE_EQ(p.alpha1(), 0.5);
  const Eigen::VectorXd l1 = p.level(1, Past::parse("2"));
  EXPECT_NEAR(l1(0), 0.0, 1e-15);
  EXPECT_NEAR(l1(1), 0.2, 1e-15);
  // only level t+1 is populated
  const Past past = Past::parse("112", 1);
  EXPECT_THROW(p.level(4, Past::parse("112")), PastTooShort);
  for (std::size_t j = 1; j <= 5; ++j) {
    if (j != 3) EXPECT_NEAR(p.level(j, past).sum(), 0.0, 1e-15) << j;
  }
}

TEST(Partition, RenewalLookups) {
  const Kernel k = load_kernel("renewal_alt");
  const RenewalPartition p(k);
  EXPECT_EQ(p.locate(Past::parse("1"), 0.1), (Lookup{2, 0}));
  EXPECT_EQ(p.locate(Past(), 0.1), (Lookup{2, 0}));
  EXPECT_EQ(p.locate(Past::parse("112"), 0.95).range, 3);
  EXPECT_EQ(p.locate(Past::parse("2"), 0.5), (Lookup{1, 0}));
  EXPECT_EQ(p.try_locate(Past::parse("11"), 0.95).status, Locate::Status::needs_past);
}

// L^(2) = (t + 1) 1{u >= alpha_0}.
TEST(Partition, RenewalRangeFormula) {
  fuzz::Rng g(8);
  for (int t = 0; t < 200; ++t) {
    const Kernel k = fuzz::renewal(g);
    const RenewalPartition p(k);
    const double a0 = p.alpha1() + p.alpha2();
    const std::size_t tt = static_cast<std::size_t>(fuzz::pick(g, 0, 6));
    const Past past = Past::parse(std::string(tt, '1') + "2", fuzz::pick(g, 1, 2));
    for (int s = 0; s < 20; ++s) {
      const double u = fuzz::unif(g);
      const Lookup l = p.locate(past, u);
      ASSERT_EQ(l.range, u < a0 ? 0 : static_cast<int>(tt) + 1);
    }
  }
}

TEST(Truncation, MarkovLeftoversVanish) {
  for (const char* name : {"markov1", "markov2", "mixture_532"}) {
    const Kernel k = load_kernel(name);
    const CanonicalPartition p(k);
    const std::size_t order = static_cast<std::size_t>(*k.order());
    for (std::size_t kk = order; kk <= order + 2; ++kk) {
      const TruncatedPartition t(p, pk_canonical(k, kk));
      EXPECT_NEAR(t.leftover().maxCoeff(), 0.0, 1e-12) << name << ' ' << kk;
    }
  }
}

TEST(Truncation, RenewalLeftovers) {
  const Kernel k = load_kernel("renewal_alt");
  const RenewalPartition p(k);
  const TruncatedPartition t(p, pk_canonical(k, 4));
  const Past c = Past::parse("1112");
  const auto idx = static_cast<Eigen::Index>(c.context_index(4, 2));
  EXPECT_NEAR(t.leftover()(idx, 1), 0.0, 1e-15);
  EXPECT_NEAR(t.pk()(2, static_cast<std::uint64_t>(idx)), k.p(3), 1e-15);
  const auto ones = static_cast<Eigen::Index>(Past::parse("1111").context_index(4, 2));
  EXPECT_GE(t.leftover()(ones, 1), 0.0);
  EXPECT_NEAR(t.leftover()(ones, 1), t.pk()(2, static_cast<std::uint64_t>(ones)) - p.alpha2(), 1e-15);
}

TEST(Truncation, InconsistentTableRejected) {
  const Kernel k = load_kernel("markov1");
  const CanonicalPartition p(k);
  CanonicalPkTable pk = pk_canonical(k, 1);
  pk.table(0, 0) -= 0.2;
  pk.table(0, 1) += 0.2;
  EXPECT_THROW(TruncatedPartition(p, pk), NegativeLeftover);
}

TEST(Lemma, CanonicalAndRenewalHaveNoViolations) {
  std::vector<Past> ctx;
  for (std::size_t len = 0; len <= 6; ++len)
    for (std::uint64_t c = 0; c < ipow(2, len); ++c) ctx.push_back(context_from_index(c, len, 2));
  for (const auto& name : builtin_kernel_names()) {
    const Kernel k = load_kernel(name);
    if (k.alphabet_size() != 2) continue;
    EXPECT_TRUE(check_lemma_simple(CanonicalPartition(k), ctx).ok()) << name;
    if (k.family() == Kernel::Family::renewal) EXPECT_TRUE(check_lemma_simple(RenewalPartition(k), ctx).ok()) << name;
  }
}

TEST(Lemma, InflatedPartitionIsCaught) {
  const Kernel k = load_kernel("mixture_532");
  const InflatedPartition bad(k);
  const LemmaReport r = check_lemma_simple(bad, {Past(), Past::parse("1"), Past::parse("21")});
  EXPECT_FALSE(r.ok());
  EXPECT_GT(r.violations.size(), 0u);
}

// Lemma inequality and mass conservation on 1000 fuzzed (kernel, context) pairs.
TEST(PartitionProperty, LemmaAndMassConservation) {
  fuzz::Rng g(21);
  for (int t = 0; t < 1000; ++t) {
    const Kernel k = fuzz::any_kernel(g);
    const int n = k.alphabet_size();
    const bool renewal = k.family() == Kernel::Family::renewal;
    std::unique_ptr<RangePartition> part;
    if (renewal && fuzz::pick(g, 0, 1))
      part = std::make_unique<RenewalPartition>(k);
    else
      part = std::make_unique<CanonicalPartition>(k);
    const std::size_t len = static_cast<std::size_t>(fuzz::pick(g, 0, 5));
    const Past ctx = fuzz::past(g, n, len, false);
    ASSERT_TRUE(check_lemma_simple(*part, {ctx}).ok()) << t;

    // A completed past: the levels resum to P(.|past) once deep enough, leaving no residual.
    std::vector<Symbol> full(ctx.chronological());
    if (renewal) full.insert(full.begin(), 2);
    const Past past = Past::from_chronological(full, fuzz::pick(g, 1, n));
    const std::size_t depth = renewal ? full.size() + 1 : static_cast<std::size_t>(*k.order());
    const Eigen::VectorXd cum = part->cumulative(depth, past);
    const Eigen::VectorXd prob = k.probs(past);
    ASSERT_NEAR(cum.sum(), 1.0, 1e-12) << t;
    for (int a = 0; a < n; ++a) ASSERT_NEAR(cum(a), prob(a), 1e-12) << t;
  }
}

// If the full partition resolves u with range <= k under two different completions of the
// same length-k context, the truncated partition returns the same lookup.
TEST(PartitionProperty, TruncationAgreesBelowRangeK) {
  fuzz::Rng g(22);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const Kernel k = fuzz::pick(g, 0, 1) ? fuzz::renewal(g) : fuzz::mixture(g, 2, fuzz::pick(g, 1, 3));
    const int n = k.alphabet_size();
    std::unique_ptr<RangePartition> part;
    if (k.family() == Kernel::Family::renewal && fuzz::pick(g, 0, 1))
      part = std::make_unique<RenewalPartition>(k);
    else
      part = std::make_unique<CanonicalPartition>(k);
    const std::size_t kk = static_cast<std::size_t>(fuzz::pick(g, 0, 3));
    const TruncatedPartition trunc(*part, pk_canonical(k, kk));
    const Past ctx = fuzz::past(g, n, kk, false);
    auto complete = [&] {
      std::vector<Symbol> b(8);
      for (auto& s : b) s = fuzz::pick(g, 1, n);
      b.insert(b.begin(), 2);
      for (Symbol s : ctx.chronological()) b.push_back(s);
      return Past::from_chronological(b, fuzz::pick(g, 1, n));
    };
    const Past b1 = complete(), b2 = complete();
    const double u = fuzz::unif(g);
    const Lookup l1 = part->locate(b1, u);
    const Lookup l2 = part->locate(b2, u);
    if (l1.range <= static_cast<int>(kk) && l2.range <= static_cast<int>(kk)) {
      ++checked;
      ASSERT_EQ(l1, l2) << t;
      ASSERT_EQ(trunc.locate(ctx, u), l1) << t;
      ASSERT_EQ(trunc.locate(b1, u), l1) << t;
    }
    // the truncated chain never looks further back than k
    ASSERT_LE(trunc.locate(b1, u).range, static_cast<int>(kk));
  }
  EXPECT_GT(checked, 300);
}

TEST(PartitionProperty, CanonicalRangeNondecreasingInU) {
  fuzz::Rng g(23);
  for (int t = 0; t < 200; ++t) {
    const Kernel k = fuzz::mixture(g, fuzz::pick(g, 2, 3), fuzz::pick(g, 1, 3));
    const CanonicalPartition p(k);
    const Past past = fuzz::past(g, k.alphabet_size(), 6, true);
    int prev = 0;
    for (int s = 0; s < 200; ++s) {
      const Lookup l = p.locate(past, s / 200.0);
      ASSERT_GE(l.range, prev);
      prev = l.range;
    }
  }
}

TEST(Partition, CsvDump) {
  const Kernel k = load_kernel("mixture_532");
  std::ostringstream os;
  write_partition_csv(CanonicalPartition(k), 2, os);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "context,symbol,range,length");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 2 * (1 + 2 + 4));
}
