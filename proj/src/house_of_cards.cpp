#include "infinichain/house_of_cards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "infinichain/errors.hpp"
#include "infinichain/stats.hpp"
#include "infinichain/stream.hpp"

namespace infinichain {

namespace {

bool diverges_numerically(const Eigen::VectorXd& r) {
  // sum_m prod_{l<m} r_l: the last product times the horizon stays bounded away from 0.
  double prod = 1.0;
  for (Eigen::Index l = 0; l + 1 < r.size(); ++l) prod *= r(l);
  return prod * static_cast<double>(r.size()) >= 1e-3;
}

}  // namespace

HocSpec::HocSpec(Family f, std::string label, std::function<double(std::size_t)> r, std::vector<double> params)
    : family_(f), label_(std::move(label)), r_(std::move(r)), params_(std::move(params)) {
  validate();
}

void HocSpec::validate() const {
  double prev = 0.0;
  for (std::size_t k = 0; k < 1000; ++k) {
    const double v = r_(k);
    if (!(v >= 0.0 && v <= 1.0)) throw Error("r_k must lie in [0,1] (" + label_ + ")");
    if (v < prev) throw Error("r_k must be nondecreasing (" + label_ + ")");
    prev = v;
  }
}

HocSpec HocSpec::constant(double r) {
  return HocSpec(Family::constant, "const:" + fmt(r), [r](std::size_t) { return r; }, {r});
}

HocSpec HocSpec::exponential(double c, double rho) {
  if (!(rho > 0.0 && rho < 1.0) || !(c > 0.0 && c <= 1.0)) throw Error("exponential spec needs c in (0,1], rho in (0,1)");
  return HocSpec(Family::exponential, "exp:" + fmt(c) + "," + fmt(rho),
                 [c, rho](std::size_t k) { return 1.0 - c * std::pow(rho, static_cast<double>(k)); }, {c, rho});
}

HocSpec HocSpec::harmonic(double r) {
  if (!(r > 0.0 && r < 1.0)) throw Error("harmonic spec needs r in (0,1)");
  return HocSpec(Family::harmonic, "harmonic:" + fmt(r),
                 [r](std::size_t k) { return 1.0 - r / static_cast<double>(std::max<std::size_t>(k, 1)); }, {r});
}

HocSpec HocSpec::power(double c, double zeta) {
  if (!(c > 0.0 && c <= 1.0) || !(zeta > 0.0)) throw Error("power spec needs c in (0,1], zeta > 0");
  return HocSpec(Family::power, "pow:" + fmt(c) + "," + fmt(zeta),
                 [c, zeta](std::size_t k) { return 1.0 - c * std::pow(static_cast<double>(k + 1), -zeta); },
                 {c, zeta});
}

HocSpec HocSpec::list(std::vector<double> head, double tail) {
  std::string label = "list:";
  for (std::size_t i = 0; i < head.size(); ++i) label += (i ? "," : "") + fmt(head[i]);
  label += ";" + fmt(tail);
  std::vector<double> params = head;
  params.push_back(tail);
  return HocSpec(Family::list, label,
                 [head = std::move(head), tail](std::size_t k) { return k < head.size() ? head[k] : tail; },
                 std::move(params));
}

HocSpec HocSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw Error("r spec must look like family:params, got " + text);
  const std::string fam = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (fam == "list") {
    const auto semi = rest.find(';');
    auto head = parse_double_list(rest.substr(0, semi));
    const double tail = semi == std::string::npos ? (head.empty() ? 1.0 : head.back())
                                                  : std::stod(rest.substr(semi + 1));
    return list(std::move(head), tail);
  }
  const auto v = parse_double_list(rest);
  auto need = [&](std::size_t n) {
    if (v.size() != n) throw Error("wrong parameter count in " + text);
  };
  if (fam == "const") return need(1), constant(v[0]);
  if (fam == "exp") return need(2), exponential(v[0], v[1]);
  if (fam == "harmonic") return need(1), harmonic(v[0]);
  if (fam == "pow") return need(2), power(v[0], v[1]);
  throw Error("unknown r family " + fam);
}

Eigen::VectorXd HocSpec::r_values(std::size_t n) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) out(static_cast<Eigen::Index>(k)) = r_(k);
  return out;
}

double HocSpec::nu(std::size_t n) const {
  double p = 1.0;
  for (std::size_t i = 0; i + 2 <= n; ++i) p *= r_(i);
  return p;
}

double HocSpec::t(std::size_t k) const {
  if (k == 0) return 0.0;
  return (1.0 - r_(k - 1)) * nu(k);
}

double HocSpec::t_infinity() const {
  switch (family_) {
    case Family::constant: return params_[0] >= 1.0 ? 1.0 : 0.0;
    case Family::harmonic: return 0.0;
    case Family::exponential: {
      double s = 0.0;
      for (std::size_t k = 0;; ++k) {
        const double q = 1.0 - r_(k);
        if (q >= 1.0) return 0.0;
        s += std::log1p(-q);
        if (q < 1e-18) break;
      }
      return std::exp(s);
    }
    case Family::power: {
      const double c = params_[0], zeta = params_[1];
      if (zeta <= 1.0 || c >= 1.0) return 0.0;
      constexpr std::size_t K = 1000000;
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += std::log1p(-c * std::pow(static_cast<double>(k + 1), -zeta));
      s -= c * std::pow(static_cast<double>(K), 1.0 - zeta) / (zeta - 1.0);
      return std::exp(s);
    }
    case Family::list: {
      if (params_.back() < 1.0) return 0.0;
      double p = 1.0;
      for (std::size_t i = 0; i + 1 < params_.size(); ++i) p *= params_[i];
      return p;
    }
  }
  return 0.0;
}

bool HocSpec::summable() const {
  switch (family_) {
    case Family::constant: return params_[0] >= 1.0;
    case Family::exponential: return true;
    case Family::harmonic: return false;
    case Family::power: return params_[1] > 1.0;
    case Family::list: return params_.back() >= 1.0;
  }
  return false;
}

Eigen::VectorXd vk_dp(const Eigen::VectorXd& r, std::size_t kmax) {
  if (r.size() == 0) throw Error("empty r sequence");
  auto r_at = [&](std::size_t i) {
    return i < static_cast<std::size_t>(r.size()) ? r(static_cast<Eigen::Index>(i)) : r(r.size() - 1);
  };
  Eigen::VectorXd v(static_cast<Eigen::Index>(kmax + 1));
  std::vector<double> p(kmax + 2, 0.0);
  p[0] = 1.0;
  v(0) = 1.0;
  std::size_t top = 0;
  for (std::size_t step = 1; step <= kmax; ++step) {
    double back = 0.0;
    for (std::size_t i = top + 1; i-- > 0;) {
      const double ri = r_at(i);
      back += p[i] * (1.0 - ri);
      p[i + 1] = p[i] * ri;
    }
    p[0] = back;
    ++top;
    while (top > 0 && p[top] < 1e-300) p[top--] = 0.0;
    v(static_cast<Eigen::Index>(step)) = p[0];
  }
  return v;
}

Eigen::VectorXd vk_dp(const HocSpec& spec, std::size_t kmax) { return vk_dp(spec.r_values(kmax + 1), kmax); }

double vk_combinatorial(const HocSpec& spec, std::size_t k) {
  if (k > 20) throw KTooLarge("composition sum limited to k <= 20");
  if (k == 0) return 1.0;
  std::vector<double> t(k + 1);
  for (std::size_t j = 1; j <= k; ++j) t[j] = spec.t(j);
  double total = 0.0;
  const std::uint32_t n_masks = 1u << (k - 1);
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
    // bit b set: a part ends after position b+1
    double prod = 1.0;
    std::size_t start = 0;
    for (std::size_t b = 0; b < k - 1; ++b) {
      if (mask >> b & 1u) {
        prod *= t[b + 1 - start];
        start = b + 1;
      }
    }
    prod *= t[k - start];
    total += prod;
  }
  return total;
}

std::vector<McEstimate> vk_mc(const HocSpec& spec, std::size_t kmax, std::size_t n_replicas, std::uint64_t seed,
                              unsigned workers) {
  if (n_replicas == 0) throw Error("vk_mc needs at least one replica");
  const Eigen::VectorXd r = spec.r_values(kmax + 1);
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (n_replicas + kChunk - 1) / kChunk;
  std::vector<std::vector<std::uint64_t>> counts(chunks, std::vector<std::uint64_t>(kmax + 1, 0));
  parallel_for(chunks, workers, [&](std::size_t c) {
    auto& cnt = counts[c];
    const std::size_t hi = std::min(n_replicas, (c + 1) * kChunk);
    for (std::size_t rep = c * kChunk; rep < hi; ++rep) {
      const UniformStream u(replica_seed(seed, rep));
      std::size_t h = 0;
      ++cnt[0];
      for (std::size_t step = 1; step <= kmax; ++step) {
        h = u(static_cast<std::int64_t>(step)) < r(static_cast<Eigen::Index>(h)) ? h + 1 : 0;
        if (h == 0) ++cnt[step];
      }
    }
  });
  std::vector<McEstimate> out(kmax + 1);
  for (std::size_t k = 0; k <= kmax; ++k) {
    std::uint64_t z = 0;
    for (const auto& c : counts) z += c[k];
    auto& e = out[k];
    e.n = n_replicas;
    e.mean = static_cast<double>(z) / static_cast<double>(n_replicas);
    e.sigma = std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(n_replicas));
    const Interval ci = wilson(z, n_replicas, 3.0);
    e.lo = ci.lo;
    e.hi = ci.hi;
  }
  return out;
}

std::vector<std::size_t> return_times(const HocSpec& spec, std::size_t count, std::size_t cap, std::uint64_t seed) {
  const UniformStream u(seed);
  std::vector<std::size_t> out;
  out.reserve(count);
  std::int64_t idx = 0;
  while (out.size() < count) {
    std::size_t h = 0, steps = 0;
    do {
      h = u(idx++) < spec.r(h) ? h + 1 : 0;
      ++steps;
    } while (h != 0 && steps <= cap);
    out.push_back(std::min(steps, cap + 1));
  }
  return out;
}

double nonsummable_rate(double r, std::size_t k) {
  const double lk = std::log(static_cast<double>(k));
  return std::pow(lk, 3.0 + r) / std::pow(static_cast<double>(k), 2.0 - (1.0 + r) * (1.0 + r));
}

double bound_nonsummable(double r, std::size_t k, double C) {
  if (!(r > 0.0) || !(2.0 - (1.0 + r) * (1.0 + r) > 0.0))
    throw InvalidR("r must lie in (0, sqrt(2) - 1), got " + fmt(r));
  return C * nonsummable_rate(r, k);
}

double calibrate_nonsummable_constant(const Eigen::VectorXd& v, double r, std::size_t k_lo, std::size_t k_hi) {
  double c = 0.0;
  for (std::size_t k = k_lo; k <= k_hi; ++k)
    c = std::max(c, v(static_cast<Eigen::Index>(k)) / nonsummable_rate(r, k));
  return c;
}

GenericBound bound_summable_generic(const HocSpec& spec, std::size_t n) {
  if (n == 0) throw Error("generic summable bound needs n >= 1");
  const double tinf = spec.t_infinity();
  GenericBound b;
  b.degenerate = !(tinf > 0.0);
  b.value = std::numeric_limits<double>::infinity();
  for (std::size_t K = 1; K <= n; ++K) {
    const double kk = static_cast<double>(K);
    const double val = kk * kk * (1.0 - spec.r(n / K)) + std::pow(1.0 - tinf, kk);
    if (val < b.value) {
      b.value = val;
      b.best_K = K;
    }
  }
  return b;
}

double bound_exponential(double c_r, double rho, std::size_t k) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error("rho must lie in (0,1)");
  if (!(c_r > 0.0) || !(c_r < std::log(1.0 / rho)))
    throw CrTooLarge("C_r must lie in (0, ln(1/rho))");
  return std::pow(std::exp(c_r) * rho, static_cast<double>(k)) / c_r;
}

QualitativeReport qualitative_checks(const HocSpec& spec, std::size_t kmax) {
  QualitativeReport rep;
  const Eigen::VectorXd r = spec.r_values(kmax + 1);
  const Eigen::VectorXd v = vk_dp(r, kmax);

  QualitativeItem i1{"(i) v_k -> 0", diverges_numerically(r), false, ""};
  if (i1.applicable) {
    const double late = v(static_cast<Eigen::Index>(kmax));
    const double early = v(static_cast<Eigen::Index>(kmax / 8));
    i1.holds = late < 1e-12 || late < 0.9 * early;
    i1.detail = "v_" + std::to_string(kmax / 8) + "=" + fmt(early) + " v_" + std::to_string(kmax) + "=" + fmt(late);
  } else {
    i1.detail = "precondition unmet: sum_m prod_{l<m} r_l converges";
  }
  rep.items.push_back(i1);

  QualitativeItem i2{"(ii) sum v_k < inf", spec.summable(), false, ""};
  if (i2.applicable) {
    const double full = v.sum();
    const double tail = v.tail(static_cast<Eigen::Index>(kmax / 2)).sum();
    i2.holds = tail < 0.05 * full;
    i2.detail = "partial sum " + fmt(full) + ", last half contributes " + fmt(tail);
  } else {
    i2.detail = "precondition unmet: sum (1 - r_k) diverges";
  }
  rep.items.push_back(i2);

  rep.ratio.resize(static_cast<Eigen::Index>(kmax + 1));
  for (Eigen::Index k = 0; k <= static_cast<Eigen::Index>(kmax); ++k) {
    const double q = 1.0 - r(k);
    rep.ratio(k) = q > 0.0 ? v(k) / q : std::numeric_limits<double>::quiet_NaN();
  }
  QualitativeItem i3{"(iii) v_k = O(1 - r_k)", spec.summable(), false, "diagnostic curve"};
  if (i3.applicable) {
    const auto half = static_cast<Eigen::Index>(kmax / 2);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (Eigen::Index k = half; k <= static_cast<Eigen::Index>(kmax); ++k) {
      if (std::isnan(rep.ratio(k))) continue;
      lo = std::min(lo, rep.ratio(k));
      hi = std::max(hi, rep.ratio(k));
    }
    i3.holds = std::isfinite(hi);
    i3.detail = "ratio range on second half [" + fmt(lo) + ", " + fmt(hi) + "]";
  }
  rep.items.push_back(i3);

  QualitativeItem i4{"(iv) exponential decay", spec.family() == HocSpec::Family::exponential, false, ""};
  if (i4.applicable) {
    std::vector<double> xs, ys;
    for (std::size_t k = 10; k <= std::min<std::size_t>(60, kmax); ++k) {
      if (v(static_cast<Eigen::Index>(k)) <= 0.0) break;
      xs.push_back(static_cast<double>(k));
      ys.push_back(std::log(v(static_cast<Eigen::Index>(k))));
    }
    if (xs.size() >= 3) {
      const LinearFit f = least_squares(xs, ys);
      i4.holds = f.slope < 0.0 && f.r2 > 0.999;
      i4.detail = "log-linear slope " + fmt(f.slope) + ", R^2 " + fmt(f.r2);
    }
  } else {
    i4.detail = "spec is not in the exponential family";
  }
  rep.items.push_back(i4);
  return rep;
}

}  // namespace infinichain
