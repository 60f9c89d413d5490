#include "infinichain/geom_conc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "infinichain/errors.hpp"
#include "infinichain/stream.hpp"

namespace infinichain {

namespace {

double log_binom_pmf(double m, double j, double alpha) {
  return std::lgamma(m + 1.0) - std::lgamma(j + 1.0) - std::lgamma(m - j + 1.0) + j * std::log(alpha) +
         (m - j) * std::log1p(-alpha);
}

double log_sum_exp(const std::vector<double>& xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

void check_alpha(double a) {
  if (!(a > 0.0 && a < 1.0)) throw Error("alpha must lie in (0,1)");
}

}  // namespace

GeomParams::GeomParams(double a) : alpha(a) { check_alpha(a); }

double GeomParams::c1() const {
  const double q = (1.0 - alpha) / alpha;
  return q + 4.0 * q * q;
}

double GeomParams::c2() const { return std::log(std::min((2.0 - alpha) / (2.0 * (1.0 - alpha)), 2.0)); }

double GeomParams::c3() const {
  return std::min(alpha / (4.0 * (1.0 - alpha) * (4.0 - 3.0 * alpha)), c2() / 4.0);
}

double chernoff_upper(double alpha, std::size_t n, double x) {
  const GeomParams g(alpha);
  const double rate = std::min(x * x / (2.0 * g.c1()), g.c2() * x / 2.0);
  return std::exp(-static_cast<double>(n) * rate);
}

double chernoff_lower(double alpha, std::size_t n, double x) {
  const GeomParams g(alpha);
  const double rate = std::min(x * x / (2.0 * g.c1()), x / 2.0);
  return std::exp(-static_cast<double>(n) * rate);
}

double log_exact_tail(double alpha, std::size_t n, double threshold) {
  check_alpha(alpha);
  if (n == 0) return threshold < 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  // S_n > T  iff  fewer than n successes among the first floor(T) trials.
  const double m = std::floor(threshold);
  if (m < static_cast<double>(n)) return 0.0;
  std::vector<double> terms;
  terms.reserve(n);
  for (std::size_t j = 0; j < n; ++j) terms.push_back(log_binom_pmf(m, static_cast<double>(j), alpha));
  return std::min(0.0, log_sum_exp(terms));
}

double exact_tail(double alpha, std::size_t n, double threshold) {
  return std::exp(log_exact_tail(alpha, n, threshold));
}

double exact_lower_tail(double alpha, std::size_t n, double threshold) {
  check_alpha(alpha);
  // S_n < T  iff  S_n <= ceil(T) - 1  iff  at least n successes among the first ceil(T) - 1 trials.
  const double m = std::ceil(threshold) - 1.0;
  if (m < static_cast<double>(n)) return 0.0;
  std::vector<double> terms;
  for (double j = static_cast<double>(n); j <= m; j += 1.0) terms.push_back(log_binom_pmf(m, j, alpha));
  return std::min(1.0, std::exp(log_sum_exp(terms)));
}

std::size_t uk_min_k(double alpha) {
  check_alpha(alpha);
  return static_cast<std::size_t>(std::ceil(2.0 / alpha));
}

double log_uk(double alpha, std::size_t k, UkMode mode) {
  check_alpha(alpha);
  const auto n = static_cast<std::size_t>(std::floor(static_cast<double>(k) * alpha / 2.0));
  if (n < 1) throw KTooSmall("u_k needs k >= " + std::to_string(uk_min_k(alpha)));
  const double nn = static_cast<double>(n);
  const double dev = static_cast<double>(k) / 2.0;
  switch (mode) {
    case UkMode::exact: {
      // The lower deviation n/alpha - k/2 is <= 0 < S_n, so only the upper tail contributes.
      return std::log(nn) + log_exact_tail(alpha, n, nn / alpha + dev);
    }
    case UkMode::chernoff: {
      const GeomParams g(alpha);
      const double x = dev / nn;
      return std::log(nn) - nn * std::min(x * x / (2.0 * g.c1()), g.c2() * x / 2.0);
    }
    case UkMode::corollary: return std::log(alpha) - static_cast<double>(k) * GeomParams(alpha).c3();
  }
  return 0.0;
}

double uk(double alpha, std::size_t k, UkMode mode) { return std::exp(log_uk(alpha, k, mode)); }

double mc_tail(double alpha, std::size_t n, double threshold, std::size_t n_replicas, std::uint64_t seed) {
  check_alpha(alpha);
  const UniformStream u(seed);
  const double denom = std::log1p(-alpha);
  std::size_t hits = 0;
  std::int64_t idx = 0;
  for (std::size_t r = 0; r < n_replicas; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += 1.0 + std::floor(std::log1p(-u(idx++)) / denom);
    hits += s > threshold;
  }
  return static_cast<double>(hits) / static_cast<double>(n_replicas);
}

}  // namespace infinichain
