#include "infinichain/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "infinichain/errors.hpp"
#include "infinichain/house_of_cards.hpp"
#include "infinichain/markov_approx.hpp"

namespace infinichain {

DbarEstimate estimate_dbar(const RangePartition& partition, const TruncatedPartition& truncated,
                           std::size_t horizon, std::size_t n_replicas, std::uint64_t seed, unsigned workers,
                           const CftpConfig& cfg) {
  if (horizon == 0 || n_replicas == 0) throw Error("estimate_dbar needs horizon and replicas >= 1");
  std::vector<std::size_t> dis(n_replicas, 0);
  parallel_for(n_replicas, workers, [&](std::size_t r) {
    dis[r] = coupled_sample(partition, truncated, replica_seed(seed, r), horizon, cfg).disagreements();
  });
  DbarEstimate e;
  e.k = truncated.k();
  e.replicas = n_replicas;
  e.sites = static_cast<std::uint64_t>(horizon) * n_replicas;
  std::vector<double> frac(n_replicas);
  for (std::size_t r = 0; r < n_replicas; ++r) {
    e.disagreements += dis[r];
    frac[r] = static_cast<double>(dis[r]) / static_cast<double>(horizon);
  }
  e.mean = static_cast<double>(e.disagreements) / static_cast<double>(e.sites);
  e.se = n_replicas > 1 ? mean_sd(frac).se : 0.0;
  e.ci = wilson(e.disagreements, e.sites, 3.0);
  return e;
}

DbarEstimate estimate_dbar(const RangePartition& partition, std::size_t k, std::size_t horizon,
                           std::size_t n_replicas, std::uint64_t seed, unsigned workers, const CftpConfig& cfg) {
  const TruncatedPartition truncated(partition, pk_canonical(partition.kernel(), k));
  return estimate_dbar(partition, truncated, horizon, n_replicas, seed, workers, cfg);
}

double ThetaEstimate::tail(std::size_t k) const {
  if (depth.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto c = std::count_if(depth.begin(), depth.end(),
                               [k](std::int64_t d) { return d > static_cast<std::int64_t>(k); });
  return static_cast<double>(c) / static_cast<double>(depth.size());
}

double ThetaEstimate::tail_se(std::size_t k) const {
  const double p = tail(k);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(depth.size()));
}

ThetaEstimate estimate_theta(const RangePartition& partition, Detector detector, std::size_t n_replicas,
                             std::uint64_t seed, unsigned workers, const CftpConfig& cfg) {
  if (n_replicas == 0) throw Error("estimate_theta needs replicas >= 1");
  const auto* canonical = dynamic_cast<const CanonicalPartition*>(&partition);
  const bool renewal_partition = dynamic_cast<const RenewalPartition*>(&partition) != nullptr;
  if ((detector == Detector::vwnn_WYQ || detector == Detector::ell_based) && !canonical)
    throw Error(to_string(detector) + " needs the canonical partition");
  if (detector == Detector::renewal_last2 && !renewal_partition)
    throw Error("renewal_last2 needs the renewal partition");

  ThetaEstimate t;
  t.detector = detector;
  t.window_cap = cfg.window_cap;
  t.depth.assign(n_replicas, 0);
  parallel_for(n_replicas, workers, [&](std::size_t r) {
    const UniformStream u(replica_seed(seed, r));
    CoalescenceResult c;
    switch (detector) {
      case Detector::theta_prime:
      case Detector::renewal_last2: c = theta_prime(partition, u, cfg); break;
      case Detector::vwnn_WYQ: c = theta_vwnn(*canonical, u, cfg); break;
      case Detector::ell_based: c = theta_ell(*canonical, u, cfg); break;
    }
    t.depth[r] = -c.theta0;
  });
  std::vector<double> d(t.depth.begin(), t.depth.end());
  const MeanSd m = mean_sd(d);
  t.mean = m.mean;
  t.se = n_replicas > 1 ? m.se : 0.0;
  return t;
}

std::vector<std::int64_t> sample_ell(const Kernel& renewal, std::size_t n_replicas, std::uint64_t seed,
                                     std::int64_t cap, unsigned workers) {
  if (renewal.family() != Kernel::Family::renewal) throw InvalidKernel("ell is defined for renewal kernels");
  std::vector<std::int64_t> out(n_replicas);
  parallel_for(n_replicas, workers, [&](std::size_t r) {
    out[r] = ell_value(renewal, UniformStream(replica_seed(seed, r)), 0, cap);
  });
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::ok: return "OK";
    case Verdict::violated: return "VIOLATED";
    case Verdict::not_applicable: return "NA";
  }
  return "?";
}

bool summable_continuity(const Kernel& kernel) {
  if (kernel.order()) return true;
  const auto a = alpha_seq(kernel, kernel.renewal_head_size() + 2);
  return a.values(a.values.size() - 1) >= 1.0;
}

namespace {

BoundValue not_applicable(std::string note) {
  BoundValue b;
  b.note = std::move(note);
  return b;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

BoundValue bound_summable(const Kernel& kernel, std::size_t k, const ThetaEstimate& theta) {
  if (!summable_continuity(kernel)) return not_applicable("non-summable continuity");
  if (theta.depth.empty()) return not_applicable("no theta estimate");
  const double gap = 1.0 - alpha_seq(kernel, k).at(k);
  BoundValue b;
  b.applicable = true;
  b.value = theta.mean * gap;
  b.upper = (theta.mean + 3.0 * theta.se) * gap;
  return b;
}

BoundValue bound_ell(std::size_t k, const ThetaEstimate& theta, const std::vector<std::int64_t>& ell) {
  if (theta.depth.empty() || ell.empty()) return not_applicable("no theta or ell estimate");
  const auto over = std::count_if(ell.begin(), ell.end(),
                                  [k](std::int64_t e) { return e < 0 || e > static_cast<std::int64_t>(k); });
  const double n = static_cast<double>(ell.size());
  const double p = static_cast<double>(over) / n;
  const double se = std::sqrt(p * (1.0 - p) / n);
  BoundValue b;
  b.applicable = true;
  b.value = theta.mean * p;
  b.upper = (theta.mean + 3.0 * theta.se) * std::min(1.0, p + 3.0 * se);
  return b;
}

BoundValue bound_theta_tail(std::size_t k, const ThetaEstimate& theta) {
  if (theta.depth.empty()) return not_applicable("no theta estimate");
  if (static_cast<std::int64_t>(k) >= theta.window_cap) return not_applicable("k beyond window cap");
  BoundValue b;
  b.applicable = true;
  b.value = theta.tail(k);
  b.upper = std::min(1.0, b.value + 3.0 * theta.tail_se(k));
  return b;
}

double bound_achier(const AlphaSequence& alpha, std::size_t k) { return vk_dp(alpha.values, k)(static_cast<Eigen::Index>(k)); }

BoundValue bound_achier_checked(const AlphaSequence& alpha, std::size_t k) {
  const Eigen::Index n = alpha.values.size();
  const double last = alpha.values(n - 1);
  const bool rising = n >= 2 && last > alpha.values(n - 2);
  if (!(last >= 1.0 - 1e-12 || rising)) return not_applicable("alpha_k does not tend to 1");
  BoundValue b;
  b.applicable = true;
  b.value = bound_achier(alpha, k);
  b.upper = b.value;
  return b;
}

LocalContinuitySpec LocalContinuitySpec::strong(double alpha0, double alpha2,
                                                std::function<std::int64_t(std::int64_t)> ell,
                                                std::int64_t inverse_cap) {
  if (!(alpha2 > 0.0 && alpha2 < 1.0)) throw Error("alpha(2) must lie in (0,1)");
  LocalContinuitySpec s;
  s.variant_ = Variant::strong;
  s.alpha0_ = alpha0;
  s.alpha2_ = alpha2;
  s.ell_ = std::move(ell);
  s.inverse_cap_ = inverse_cap;
  return s;
}

LocalContinuitySpec LocalContinuitySpec::uniform(double alpha0, double alpha2,
                                                 std::function<double(std::size_t)> abar) {
  if (!(alpha2 > 0.0 && alpha2 < 1.0)) throw Error("alpha(2) must lie in (0,1)");
  LocalContinuitySpec s;
  s.variant_ = Variant::uniform;
  s.alpha0_ = alpha0;
  s.alpha2_ = alpha2;
  s.abar_ = std::move(abar);
  return s;
}

LocalContinuitySpec LocalContinuitySpec::from_renewal(const Kernel& renewal) {
  if (renewal.family() != Kernel::Family::renewal) throw InvalidKernel("from_renewal needs a renewal kernel");
  const Kernel* kp = &renewal;
  return uniform(renewal_alpha(renewal, 0), renewal.alpha2(), [kp](std::size_t k) { return renewal_alpha(*kp, k); });
}

std::int64_t LocalContinuitySpec::ell_inverse(std::int64_t k) const {
  if (ell_(0) > k) return 0;
  std::int64_t lo = 0, hi = inverse_cap_;
  if (ell_(hi) <= k) return hi;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (ell_(mid) <= k ? lo : hi) = mid;
  }
  return lo;
}

Eigen::VectorXd LocalContinuitySpec::r_values(std::size_t n) const {
  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  if (n == 0) return r;
  r(0) = clamp01(alpha0_);
  for (std::size_t k = 1; k < n; ++k) {
    double cand = 0.0;
    if (variant_ == Variant::strong) {
      const auto inv = static_cast<double>(ell_inverse(static_cast<std::int64_t>(k)));
      cand = 1.0 - std::pow(1.0 - alpha2_, inv);
    } else {
      cand = 1.0 - (1.0 - abar_(k)) / alpha2_;
    }
    const auto i = static_cast<Eigen::Index>(k);
    r(i) = std::max(r(i - 1), clamp01(cand));
  }
  return r;
}

bool divergence_check(const Eigen::VectorXd& r) {
  if (r.size() == 0) return false;
  double log_prod = 0.0;
  for (Eigen::Index l = 0; l + 1 < r.size(); ++l) {
    if (r(l) <= 0.0) return false;
    log_prod += std::log(r(l));
  }
  return log_prod + std::log(static_cast<double>(r.size())) >= std::log(1e-3);
}

LocalBound bound_local_continuity(const LocalContinuitySpec& spec, std::size_t k, UkMode mode,
                                  std::size_t horizon) {
  LocalBound b;
  b.n = static_cast<std::size_t>(std::floor(static_cast<double>(k) * spec.alpha2() / 2.0));
  b.uk = uk(spec.alpha2(), k, mode);
  const Eigen::VectorXd r = spec.r_values(std::max(horizon, b.n + 1));
  if (!divergence_check(r)) throw DivergenceCheckFailed("sum of prod r_i does not diverge numerically");
  b.vk = vk_dp(r, b.n)(static_cast<Eigen::Index>(b.n));
  return b;
}

bool DbarReport::any_violation() const {
  for (const auto& row : rows)
    for (const BoundCell* c : {&row.summable, &row.ell, &row.theta, &row.achier, &row.local})
      if (c->verdict == Verdict::violated) return true;
  return false;
}

namespace {

Verdict judge(const BoundValue& b, const std::optional<DbarEstimate>& d) {
  if (!b.applicable || !d) return Verdict::not_applicable;
  return d->mean <= b.upper + 3.0 * d->se ? Verdict::ok : Verdict::violated;
}

template <class F>
std::optional<ThetaEstimate> try_theta(F&& f) {
  try {
    return f();
  } catch (const WindowCapExceeded&) {
    return std::nullopt;
  }
}

}  // namespace

DbarReport report(const Kernel& kernel, const ReportConfig& cfg) {
  if (cfg.k_grid.empty()) throw Error("report needs a nonempty k grid");
  const bool is_renewal = kernel.family() == Kernel::Family::renewal;
  const CanonicalPartition canonical(kernel);
  std::unique_ptr<RenewalPartition> renewal;
  if (is_renewal) renewal = std::make_unique<RenewalPartition>(kernel);

  DbarReport rep;
  rep.kernel = kernel.name();
  std::string kind = cfg.partition;
  if (kind == "auto") kind = is_renewal ? "renewal" : "canonical";
  if (kind != "canonical" && kind != "renewal") throw Error("unknown partition " + kind);
  if (kind == "renewal" && !is_renewal) throw InvalidKernel("renewal partition needs a renewal kernel");
  rep.partition = kind;

  const std::uint64_t theta_seed = replica_seed(cfg.seed, 0x7468657461ULL);
  const std::size_t ks = kstar(kernel);
  if (summable_continuity(kernel)) {
    const Detector d = ks == 0 ? Detector::theta_prime : Detector::vwnn_WYQ;
    rep.theta_canonical = try_theta(
        [&] { return estimate_theta(canonical, d, cfg.theta_replicas, theta_seed, cfg.workers, cfg.cftp); });
  } else if (ks == 0) {
    rep.theta_canonical = try_theta([&] {
      return estimate_theta(canonical, Detector::theta_prime, cfg.theta_replicas, theta_seed, cfg.workers, cfg.cftp);
    });
  }
  std::vector<std::int64_t> ell;
  std::optional<LocalContinuitySpec> local;
  if (is_renewal) {
    rep.theta_ell = try_theta([&] {
      return estimate_theta(canonical, Detector::ell_based, cfg.theta_replicas, theta_seed, cfg.workers, cfg.cftp);
    });
    rep.theta_renewal = try_theta([&] {
      return estimate_theta(*renewal, Detector::renewal_last2, cfg.theta_replicas, theta_seed, cfg.workers,
                            cfg.cftp);
    });
    ell = sample_ell(kernel, cfg.theta_replicas, replica_seed(cfg.seed, 0x656c6cULL), cfg.cftp.window_cap,
                     cfg.workers);
    if (kernel.alpha2() > 0.0 && kernel.alpha2() < 1.0) local = LocalContinuitySpec::from_renewal(kernel);
  }

  const std::size_t kmax = *std::max_element(cfg.k_grid.begin(), cfg.k_grid.end());
  const AlphaSequence alpha = alpha_seq(kernel, kmax + 1);

  for (std::size_t k : cfg.k_grid) {
    DbarRow row;
    row.k = k;
    std::optional<DbarEstimate> dc, dr;
    if (cfg.empirical) {
      dc = estimate_dbar(canonical, k, cfg.horizon, cfg.replicas, cfg.seed, cfg.workers, cfg.cftp);
      if (is_renewal) dr = estimate_dbar(*renewal, k, cfg.horizon, cfg.replicas, cfg.seed, cfg.workers, cfg.cftp);
      row.dbar = kind == "renewal" ? *dr : *dc;
      row.dbar_other = kind == "renewal" ? dc : dr;
    } else {
      row.dbar.k = k;
      row.dbar.mean = row.dbar.se = std::numeric_limits<double>::quiet_NaN();
    }

    row.summable.bound = rep.theta_canonical && summable_continuity(kernel)
                             ? bound_summable(kernel, k, *rep.theta_canonical)
                             : not_applicable(summable_continuity(kernel) ? "no theta estimate"
                                                                          : "non-summable continuity");
    row.summable.verdict = judge(row.summable.bound, dc);

    if (is_renewal && rep.theta_ell) {
      row.ell.bound = bound_ell(k, *rep.theta_ell, ell);
      row.ell.verdict = judge(row.ell.bound, dc);
    } else {
      row.ell.bound = not_applicable(is_renewal ? "no theta estimate" : "renewal kernels only");
    }

    if (is_renewal) {
      row.theta.bound = rep.theta_renewal ? bound_theta_tail(k, *rep.theta_renewal) : not_applicable("no theta estimate");
      row.theta.verdict = judge(row.theta.bound, dr);
    } else if (rep.theta_canonical && rep.theta_canonical->detector == Detector::theta_prime) {
      row.theta.bound = bound_theta_tail(k, *rep.theta_canonical);
      row.theta.verdict = judge(row.theta.bound, dc);
    } else {
      row.theta.bound = not_applicable("theta_prime unavailable");
    }

    row.achier.bound = bound_achier_checked(alpha, k);
    row.achier.verdict = judge(row.achier.bound, dc);

    if (local) {
      try {
        const LocalBound lb = bound_local_continuity(*local, k);
        row.local.bound.applicable = true;
        row.local.bound.value = lb.value();
        row.local.bound.upper = lb.value();
        row.local.verdict = judge(row.local.bound, dr);
      } catch (const DivergenceCheckFailed&) {
        row.local.bound = not_applicable("divergence check failed");
      } catch (const KTooSmall&) {
        row.local.bound = not_applicable("k below 2/alpha(2)");
      }
    } else {
      row.local.bound = not_applicable(is_renewal ? "alpha(2) outside (0,1)" : "renewal kernels only");
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

void write_report_csv(const DbarReport& report, std::ostream& out) {
  out << "kernel,k,dbar_hat,dbar_ci,b_summable,b_ell,b_theta,b_achier,b_local,verdicts\n";
  for (const auto& row : report.rows) {
    auto cell = [](const BoundCell& c) { return c.bound.applicable ? fmt(c.bound.value) : std::string("NA"); };
    out << report.kernel << ',' << row.k << ',' << fmt(row.dbar.mean) << ',' << fmt(3.0 * row.dbar.se) << ','
        << cell(row.summable) << ',' << cell(row.ell) << ',' << cell(row.theta) << ',' << cell(row.achier) << ','
        << cell(row.local) << ",summable=" << to_string(row.summable.verdict)
        << ";ell=" << to_string(row.ell.verdict) << ";theta=" << to_string(row.theta.verdict)
        << ";achier=" << to_string(row.achier.verdict) << ";local=" << to_string(row.local.verdict) << '\n';
  }
}

}  // namespace infinichain
