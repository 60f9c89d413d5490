#include "infinichain/partition.hpp"

#include <algorithm>
#include <mutex>
#include <ostream>

#include "infinichain/errors.hpp"
#include "infinichain/stats.hpp"

namespace infinichain {

namespace {
constexpr double kLeak = 1e-9;
constexpr std::uint64_t kPrecomputeCap = std::uint64_t{1} << 20;
}  // namespace

Lookup UpdateRule::locate(const Past& past, double u) const {
  const Locate r = try_locate(past, u);
  if (r.status == Locate::Status::found) return r.lookup;
  if (r.status == Locate::Status::needs_past) throw PastTooShort(r.needed, 0);
  throw NoResidualMass("u beyond every level");
}

Eigen::VectorXd RangePartition::cumulative(std::size_t k, const Past& past) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(alphabet_size());
  for (std::size_t j = 0; j <= k; ++j) acc += level(j, past);
  return acc;
}

std::vector<Symbol> RangePartition::level_order(std::size_t) const {
  std::vector<Symbol> out(static_cast<std::size_t>(alphabet_size()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Symbol>(i + 1);
  return out;
}

// ---------------------------------------------------------------- canonical

CanonicalPartition::CanonicalPartition(const Kernel& kernel) : RangePartition(kernel) {
  const auto ord = kernel.order();
  if (!ord) return;
  order_ = static_cast<std::size_t>(*ord);
  const auto n = static_cast<std::uint64_t>(kernel.alphabet_size());
  std::uint64_t total = 0;
  for (std::size_t k = 0; k <= order_; ++k) {
    total += ipow(n, k);
    if (total > kPrecomputeCap) return;
  }
  precomputed_ = true;
  Eigen::MatrixXd prev;
  for (std::size_t k = 0; k <= order_; ++k) {
    const auto rows = ipow(n, k);
    Eigen::MatrixXd alpha(static_cast<Eigen::Index>(rows), kernel.alphabet_size());
    for (std::uint64_t c = 0; c < rows; ++c)
      alpha.row(static_cast<Eigen::Index>(c)) =
          kernel.infima(context_from_index(c, k, kernel.alphabet_size()), k).transpose();
    Eigen::MatrixXd lv = alpha;
    if (k > 0) {
      const auto span = ipow(n, k - 1);
      for (std::uint64_t c = 0; c < rows; ++c)
        lv.row(static_cast<Eigen::Index>(c)) -= prev.row(static_cast<Eigen::Index>(c % span));
    }
    levels_.push_back(lv.cwiseMax(0.0));
    prev = std::move(alpha);
  }
}

Eigen::VectorXd CanonicalPartition::level_row(std::size_t k, std::uint64_t ctx) const {
  if (precomputed_) return levels_[k].row(static_cast<Eigen::Index>(ctx)).transpose();
  const std::uint64_t key = ctx * 64 + k;
  {
    std::shared_lock lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const int n = kernel_.alphabet_size();
  const Past c = context_from_index(ctx, k, n);
  Eigen::VectorXd lv = kernel_.infima(c, k);
  if (k > 0) lv -= kernel_.infima(c, k - 1);
  lv = lv.cwiseMax(0.0);
  std::unique_lock lock(cache_mutex_);
  cache_.emplace(key, lv);
  return lv;
}

Eigen::VectorXd CanonicalPartition::level(std::size_t k, const Past& past) const {
  if (!past.resolves(k)) throw PastTooShort(static_cast<int>(k), 0);
  if (kernel_.order()) {
    if (k > order_) return Eigen::VectorXd::Zero(alphabet_size());
    return level_row(k, past.context_index(k, alphabet_size()));
  }
  Eigen::VectorXd lv = kernel_.infima(past, k);
  if (k > 0) lv -= kernel_.infima(past, k - 1);
  return lv.cwiseMax(0.0);
}

Eigen::VectorXd CanonicalPartition::cumulative(std::size_t k, const Past& past) const {
  if (kernel_.order()) return RangePartition::cumulative(std::min(k, order_), past);
  return RangePartition::cumulative(k, past);
}

Locate CanonicalPartition::try_locate_upto(const Past& past, double u, std::size_t max_level) const {
  return kernel_.order() ? locate_finite_order(past, u, max_level) : locate_renewal(past, u, max_level);
}

Locate CanonicalPartition::locate_finite_order(const Past& past, double u, std::size_t max_level) const {
  const int n = alphabet_size();
  const std::size_t top = std::min(order_, max_level);
  double cum = 0.0;
  Lookup last{1, 0};
  std::uint64_t idx = 0, w = 1;
  for (std::size_t k = 0; k <= top; ++k) {
    if (k > 0) {
      if (!past.resolves(k)) return Locate::needs(static_cast<int>(k));
      idx += static_cast<std::uint64_t>(past.at(k) - 1) * w;
      w *= static_cast<std::uint64_t>(n);
    }
    for (int a = 0; a < n; ++a) {
      const double len = precomputed_ ? levels_[k](static_cast<Eigen::Index>(idx), a) : level_row(k, idx)(a);
      if (len <= 0.0) continue;
      cum += len;
      last = {a + 1, static_cast<int>(k)};
      if (u < cum) return Locate::found(a + 1, static_cast<int>(k));
    }
  }
  if (max_level < order_) return Locate::beyond(cum);
  if (1.0 - cum <= kLeak) return Locate::found(last.symbol, last.range);
  throw NoResidualMass("residual mass " + fmt(1.0 - cum) + " in a finite-order kernel");
}

Locate CanonicalPartition::locate_renewal(const Past& past, double u, std::size_t max_level) const {
  double prev1 = 1.0 - kernel_.p_sup_from(0);
  double prev2 = kernel_.p_inf_from(0);
  double cum = prev1;
  Lookup last{1, 0};
  if (u < cum) return Locate::found(1, 0);
  if (prev2 > 0.0) last = {2, 0};
  cum += prev2;
  if (u < cum) return Locate::found(2, 0);
  const std::size_t head = kernel_.renewal_head_size();
  for (std::size_t k = 1;; ++k) {
    if (k > max_level) return Locate::beyond(cum);
    if (!past.resolves(k)) return Locate::needs(static_cast<int>(k));
    const bool pinned = past.at(k) == 2;
    double n1, n2;
    if (pinned) {
      const double pt = kernel_.p(k - 1);
      n1 = 1.0 - pt;
      n2 = pt;
    } else {
      n1 = 1.0 - kernel_.p_sup_from(k);
      n2 = kernel_.p_inf_from(k);
    }
    const double l1 = std::max(0.0, n1 - prev1);
    const double l2 = std::max(0.0, n2 - prev2);
    if (l1 > 0.0) {
      cum += l1;
      last = {1, static_cast<int>(k)};
      if (u < cum) return Locate::found(1, static_cast<int>(k));
    }
    if (l2 > 0.0) {
      cum += l2;
      last = {2, static_cast<int>(k)};
      if (u < cum) return Locate::found(2, static_cast<int>(k));
    }
    if (pinned) {
      if (1.0 - cum <= kLeak) return Locate::found(last.symbol, last.range);
      throw NoResidualMass("renewal level sums do not reach 1");
    }
    prev1 = n1;
    prev2 = n2;
    if (past.infinite() && k > past.length() && k > head) {
      // Only ones remain and the tail is periodic: no further level carries mass.
      if (1.0 - cum <= kLeak) return Locate::found(last.symbol, last.range);
      throw UndeterminedProbability("u falls in the residual interval of the all-ones past");
    }
  }
}

// ---------------------------------------------------------------- renewal I^(2)

RenewalPartition::RenewalPartition(const Kernel& kernel) : RangePartition(kernel) {
  if (kernel.family() != Kernel::Family::renewal)
    throw InvalidKernel("renewal partition needs a renewal kernel");
  alpha1_ = kernel.alpha1();
  alpha2_ = kernel.alpha2();
  if (!(alpha2_ > 0.0) || !(alpha1_ > 0.0)) throw InvalidKernel("renewal infima must be positive");
}

std::vector<Symbol> RenewalPartition::level_order(std::size_t k) const {
  if (k == 0) return {2, 1};
  return {1, 2};
}

Eigen::VectorXd RenewalPartition::level(std::size_t k, const Past& past) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2);
  if (k == 0) {
    out << alpha1_, alpha2_;
    return out;
  }
  if (!past.resolves(k)) throw PastTooShort(static_cast<int>(k), 0);
  for (std::size_t lag = 1; lag < k; ++lag)
    if (past.at(lag) == 2) return out;
  if (past.at(k) != 2) return out;
  const double pt = kernel_.p(k - 1);
  out << std::max(0.0, 1.0 - pt - alpha1_), std::max(0.0, pt - alpha2_);
  return out;
}

Locate RenewalPartition::try_locate_upto(const Past& past, double u, std::size_t max_level) const {
  if (u < alpha2_) return Locate::found(2, 0);
  const double a0 = alpha1_ + alpha2_;
  if (u < a0) return Locate::found(1, 0);
  for (std::size_t lag = 1;; ++lag) {
    if (lag > max_level) return Locate::beyond(a0);
    if (!past.resolves(lag)) return Locate::needs(static_cast<int>(lag));
    if (past.infinite() && lag > past.length() && past.fill() != 2)
      throw UndeterminedProbability("u falls in the residual interval of the all-ones past");
    if (past.at(lag) != 2) continue;
    const double pt = kernel_.p(lag - 1);
    const double l1 = std::max(0.0, 1.0 - pt - alpha1_);
    const int k = static_cast<int>(lag);
    if (l1 > 0.0 && u < a0 + l1) return Locate::found(1, k);
    if (pt - alpha2_ > 0.0) return Locate::found(2, k);
    return Locate::found(1, k);
  }
}

// ---------------------------------------------------------------- truncation

TruncatedPartition::TruncatedPartition(const RangePartition& base, CanonicalPkTable pk)
    : base_(base), pk_(std::move(pk)) {
  const int n = base.alphabet_size();
  if (pk_.alphabet != n) throw Error("pk table alphabet does not match the partition");
  const auto rows = ipow(static_cast<std::uint64_t>(n), pk_.k);
  if (static_cast<std::uint64_t>(pk_.table.rows()) != rows) throw Error("pk table has wrong shape");
  leftover_.resize(static_cast<Eigen::Index>(rows), n);
  for (std::uint64_t c = 0; c < rows; ++c) {
    const Past ctx = context_from_index(c, pk_.k, n);
    Eigen::VectorXd left = pk_.table.row(static_cast<Eigen::Index>(c)).transpose() - base.cumulative(pk_.k, ctx);
    const double worst = left.minCoeff();
    if (worst < -kLeak)
      throw NegativeLeftover("leftover " + fmt(worst) + " for context " + ctx.to_string());
    clamped_ = std::min(clamped_, worst);
    leftover_.row(static_cast<Eigen::Index>(c)) = left.cwiseMax(0.0).transpose();
  }
}

Locate TruncatedPartition::try_locate(const Past& past, double u) const {
  const std::size_t k = pk_.k;
  Locate r = base_.try_locate_upto(past, u, k);
  if (r.status != Locate::Status::beyond) return r;
  if (!past.resolves(k)) return Locate::needs(static_cast<int>(k));
  const int n = alphabet_size();
  const auto idx = static_cast<Eigen::Index>(past.context_index(k, n));
  double cum = r.covered;
  for (int a = 0; a < n; ++a) {
    const double len = leftover_(idx, a);
    if (len <= 0.0) continue;
    cum += len;
    if (u < cum) return Locate::found(a + 1, static_cast<int>(k));
  }
  if (1.0 - cum > kLeak) throw NoResidualMass("truncated layout does not reach 1");
  Eigen::Index best;
  leftover_.row(idx).maxCoeff(&best);
  if (leftover_(idx, best) <= 0.0) pk_.table.row(idx).maxCoeff(&best);
  return Locate::found(static_cast<Symbol>(best) + 1, static_cast<int>(k));
}

// ---------------------------------------------------------------- helpers

std::unique_ptr<RangePartition> make_partition(const Kernel& kernel, const std::string& kind) {
  if (kind == "renewal" || (kind == "auto" && kernel.family() == Kernel::Family::renewal))
    return std::make_unique<RenewalPartition>(kernel);
  if (kind == "canonical" || kind == "auto") return std::make_unique<CanonicalPartition>(kernel);
  throw Error("unknown partition kind " + kind);
}

LemmaReport check_lemma_simple(const RangePartition& partition, const std::vector<Past>& contexts,
                               double tol) {
  LemmaReport rep;
  const auto& kernel = partition.kernel();
  for (const Past& ctx : contexts) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(partition.alphabet_size());
    for (std::size_t k = 0; k <= ctx.length(); ++k) {
      acc += partition.level(k, ctx);
      const Eigen::VectorXd inf = kernel.infima(ctx, k);
      ++rep.checked;
      for (Eigen::Index a = 0; a < acc.size(); ++a) {
        if (acc(a) > inf(a) + tol)
          rep.violations.push_back({ctx.head(k).to_string(), k, static_cast<Symbol>(a + 1), acc(a), inf(a)});
      }
    }
  }
  return rep;
}

void write_partition_csv(const RangePartition& partition, std::size_t depth, std::ostream& out) {
  const int n = partition.alphabet_size();
  out << "context,symbol,range,length\n";
  for (std::size_t k = 0; k <= depth; ++k) {
    const auto rows = ipow(static_cast<std::uint64_t>(n), k);
    for (std::uint64_t c = 0; c < rows; ++c) {
      const Past ctx = context_from_index(c, k, n);
      const Eigen::VectorXd lv = partition.level(k, ctx);
      for (Symbol a : partition.level_order(k))
        out << ctx.to_string() << ',' << a << ',' << k << ',' << fmt(lv(a - 1)) << '\n';
    }
  }
}

}  // namespace infinichain
