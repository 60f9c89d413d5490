#include "infinichain/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "infinichain/errors.hpp"

namespace infinichain {

namespace {

void check_rows(const Eigen::MatrixXd& t, const std::string& what) {
  if ((t.array() < 0.0).any() || (t.array() > 1.0).any())
    throw InvalidKernel(what + ": entries must lie in [0,1]");
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    if (std::abs(t.row(r).sum() - 1.0) > 1e-12)
      throw InvalidKernel(what + ": row " + std::to_string(r) + " does not sum to 1");
  }
}

}  // namespace

Kernel Kernel::markov(int alphabet, int order, Eigen::MatrixXd table, std::string name) {
  if (alphabet < 2) throw InvalidKernel("alphabet size must be at least 2");
  if (order < 0) throw InvalidKernel("negative order");
  const auto rows = ipow(static_cast<std::uint64_t>(alphabet), static_cast<std::size_t>(order));
  if (static_cast<std::uint64_t>(table.rows()) != rows || table.cols() != alphabet)
    throw InvalidKernel("markov table must be N^order x N");
  check_rows(table, "markov table");
  Kernel k;
  k.alphabet_ = alphabet;
  k.name_ = std::move(name);
  k.spec_ = MarkovSpec{order, std::move(table)};
  return k;
}

Kernel Kernel::renewal(std::vector<double> head, std::vector<double> cycle, std::string name) {
  if (cycle.empty()) throw InvalidKernel("renewal tail must be nonempty");
  for (const auto* v : {&head, &cycle}) {
    for (double p : *v) {
      if (!(p > 0.0 && p < 1.0)) throw InvalidKernel("renewal p_i must lie strictly in (0,1)");
    }
  }
  Kernel k;
  k.alphabet_ = 2;
  k.name_ = std::move(name);
  k.spec_ = RenewalSpec{std::move(head), std::move(cycle)};
  return k;
}

Kernel Kernel::mixture(int alphabet, Eigen::VectorXd weights, std::vector<Eigen::MatrixXd> comps,
                       std::string name) {
  if (alphabet < 2) throw InvalidKernel("alphabet size must be at least 2");
  if (weights.size() == 0 || static_cast<std::size_t>(weights.size()) != comps.size())
    throw InvalidKernel("mixture needs one component per weight");
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12)
    throw InvalidKernel("mixture weights must be nonnegative and sum to 1");
  for (std::size_t j = 0; j < comps.size(); ++j) {
    const auto rows = ipow(static_cast<std::uint64_t>(alphabet), j);
    if (static_cast<std::uint64_t>(comps[j].rows()) != rows || comps[j].cols() != alphabet)
      throw InvalidKernel("mixture component " + std::to_string(j) + " must be N^j x N");
    check_rows(comps[j], "mixture component " + std::to_string(j));
  }
  Kernel k;
  k.alphabet_ = alphabet;
  k.name_ = std::move(name);
  k.spec_ = MixtureSpec{std::move(weights), std::move(comps)};
  return k;
}

Kernel::Family Kernel::family() const {
  switch (spec_.index()) {
    case 0: return Family::markov;
    case 1: return Family::renewal;
    default: return Family::mixture;
  }
}

std::optional<int> Kernel::order() const {
  if (const auto* m = markov_spec()) return m->order;
  if (const auto* x = mixture_spec()) return static_cast<int>(x->components.size()) - 1;
  return std::nullopt;
}

double Kernel::p(std::size_t i) const {
  const auto& r = std::get<RenewalSpec>(spec_);
  if (i < r.head.size()) return r.head[i];
  return r.cycle[(i - r.head.size()) % r.cycle.size()];
}

double Kernel::p_inf_from(std::size_t k) const {
  const auto& r = std::get<RenewalSpec>(spec_);
  double m = *std::min_element(r.cycle.begin(), r.cycle.end());
  for (std::size_t i = k; i < r.head.size(); ++i) m = std::min(m, r.head[i]);
  return m;
}

double Kernel::p_sup_from(std::size_t k) const {
  const auto& r = std::get<RenewalSpec>(spec_);
  double m = *std::max_element(r.cycle.begin(), r.cycle.end());
  for (std::size_t i = k; i < r.head.size(); ++i) m = std::max(m, r.head[i]);
  return m;
}

std::size_t Kernel::renewal_head_size() const { return std::get<RenewalSpec>(spec_).head.size(); }

std::optional<std::size_t> Kernel::time_since_last2(const Past& past) const {
  for (std::size_t lag = 1; lag <= past.length(); ++lag) {
    if (past.at(lag) == 2) return lag - 1;
  }
  if (past.fill() == 2) return past.length();
  return std::nullopt;
}

Eigen::VectorXd Kernel::extremes(const Past& past, std::size_t k, bool lower) const {
  if (!past.resolves(k)) throw PastTooShort(static_cast<int>(k), 0);
  const int n = alphabet_;
  Eigen::VectorXd out(n);

  if (const auto* r = renewal_spec()) {
    (void)r;
    for (std::size_t lag = 1; lag <= k; ++lag) {
      if (past.at(lag) == 2) {
        const double p2 = p(lag - 1);
        out << 1.0 - p2, p2;
        return out;
      }
    }
    if (lower)
      out << 1.0 - p_sup_from(k), p_inf_from(k);
    else
      out << 1.0 - p_inf_from(k), p_sup_from(k);
    return out;
  }

  const std::uint64_t nn = static_cast<std::uint64_t>(n);
  const std::uint64_t ctx = past.context_index(k, n);

  if (const auto* m = markov_spec()) {
    const auto order = static_cast<std::size_t>(m->order);
    if (k >= order) return m->table.row(static_cast<Eigen::Index>(past.context_index(order, n))).transpose();
    const std::uint64_t span = ipow(nn, k);
    const std::uint64_t n_ext = ipow(nn, order - k);
    if (n_ext > kExtensionCap) throw ContextSpaceTooLarge("too many extensions to enumerate");
    out.setConstant(lower ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity());
    for (std::uint64_t e = 0; e < n_ext; ++e) {
      const auto row = m->table.row(static_cast<Eigen::Index>(ctx + e * span)).transpose();
      if (lower)
        out = out.cwiseMin(row);
      else
        out = out.cwiseMax(row);
    }
    return out;
  }

  const auto& x = std::get<MixtureSpec>(spec_);
  const std::size_t K = x.components.size() - 1;
  Eigen::VectorXd known = Eigen::VectorXd::Zero(n);
  std::uint64_t span = 1;
  for (std::size_t j = 0; j <= std::min(k, K); ++j) {
    if (x.weights(static_cast<Eigen::Index>(j)) > 0.0)
      known += x.weights(static_cast<Eigen::Index>(j)) *
               x.components[j].row(static_cast<Eigen::Index>(ctx % span)).transpose();
    span *= nn;
  }
  if (k >= K) return known;
  const std::uint64_t base = ipow(nn, k);
  const std::uint64_t n_ext = ipow(nn, K - k);
  if (n_ext > kExtensionCap) throw ContextSpaceTooLarge("too many extensions to enumerate");
  Eigen::VectorXd best = Eigen::VectorXd::Constant(
      n, lower ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity());
  Eigen::VectorXd acc(n);
  for (std::uint64_t e = 0; e < n_ext; ++e) {
    const std::uint64_t full = ctx + e * base;
    acc.setZero();
    std::uint64_t w = base * nn;
    for (std::size_t j = k + 1; j <= K; ++j, w *= nn) {
      const double lam = x.weights(static_cast<Eigen::Index>(j));
      if (lam > 0.0) acc += lam * x.components[j].row(static_cast<Eigen::Index>(full % w)).transpose();
    }
    if (lower)
      best = best.cwiseMin(acc);
    else
      best = best.cwiseMax(acc);
  }
  return known + best;
}

Eigen::VectorXd Kernel::infima(const Past& past, std::size_t k) const { return extremes(past, k, true); }
Eigen::VectorXd Kernel::suprema(const Past& past, std::size_t k) const { return extremes(past, k, false); }

Eigen::VectorXd Kernel::probs(const Past& past) const {
  if (renewal_spec()) {
    const auto t = time_since_last2(past);
    if (!t) throw UndeterminedProbability("renewal past without a 2 does not pin P(.|past)");
    Eigen::VectorXd out(2);
    out << 1.0 - p(*t), p(*t);
    return out;
  }
  const auto m = static_cast<std::size_t>(*order());
  if (!past.resolves(m))
    throw UndeterminedProbability("past shorter than the kernel order");
  return extremes(past, m, true);
}

double Kernel::prob(Symbol a, const Past& past, ExtensionRule rule) const {
  if (a < 1 || a > alphabet_) throw Error("symbol out of range");
  const auto i = static_cast<Eigen::Index>(a - 1);
  if (rule == ExtensionRule::exact) return probs(past)(i);
  if (past.infinite()) {
    if (renewal_spec() && !time_since_last2(past))
      throw UndeterminedProbability("renewal kernel undefined on the all-ones past");
    return probs(past)(i);
  }
  return extremes(past, past.length(), rule == ExtensionRule::infimum)(i);
}

double alpha_context(const Kernel& kernel, const Past& context) {
  return std::min(1.0, kernel.infima(context, context.length()).sum());
}

double renewal_alpha(const Kernel& kernel, std::size_t k) {
  return 1.0 - (kernel.p_sup_from(k) - kernel.p_inf_from(k));
}

AlphaSequence alpha_seq(const Kernel& kernel, std::size_t kmax, std::uint64_t context_cap) {
  AlphaSequence a;
  a.values.resize(static_cast<Eigen::Index>(kmax + 1));
  const auto ord = kernel.order();
  const auto n = static_cast<std::uint64_t>(kernel.alphabet_size());
  for (std::size_t k = 0; k <= kmax; ++k) {
    double v;
    if (!ord) {
      v = renewal_alpha(kernel, k);
    } else if (k >= static_cast<std::size_t>(*ord)) {
      v = 1.0;
    } else {
      const auto n_ctx = ipow(n, k);
      if (n_ctx > context_cap) throw ContextSpaceTooLarge("N^k exceeds the context cap");
      v = 1.0;
      for (std::uint64_t c = 0; c < n_ctx; ++c)
        v = std::min(v, alpha_context(kernel, context_from_index(c, k, kernel.alphabet_size())));
    }
    a.values(static_cast<Eigen::Index>(k)) = v;
  }
  return a;
}

}  // namespace infinichain
