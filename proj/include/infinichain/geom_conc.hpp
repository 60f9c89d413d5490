#pragma once

#include <cstddef>
#include <cstdint>

namespace infinichain {

// Sums of n i.i.d. geometric variables on {1, 2, ...} with success probability alpha.
struct GeomParams {
  double alpha;
  explicit GeomParams(double a);
  double c1() const;  // (1-a)/a + 4((1-a)/a)^2
  double c2() const;  // ln min((2-a)/(2(1-a)), 2)
  double c3() const;  // min(a / (4(1-a)(4-3a)), c2/4)
};

// Bound on P(S_n > n(1/alpha + x)).
double chernoff_upper(double alpha, std::size_t n, double x);
// Bound on P(S_n < n(1/alpha - x)).
double chernoff_lower(double alpha, std::size_t n, double x);

// P(S_n > threshold) and P(S_n < threshold), exact (negative binomial), log-space.
double exact_tail(double alpha, std::size_t n, double threshold);
double exact_lower_tail(double alpha, std::size_t n, double threshold);
double log_exact_tail(double alpha, std::size_t n, double threshold);

enum class UkMode { exact, chernoff, corollary };
// n P(|S_n - n/alpha| > k/2) with n = floor(k alpha / 2); corollary mode is alpha e^{-k C3}.
double uk(double alpha, std::size_t k, UkMode mode);
double log_uk(double alpha, std::size_t k, UkMode mode);
std::size_t uk_min_k(double alpha);

// Fraction of n_replicas sums exceeding threshold.
double mc_tail(double alpha, std::size_t n, double threshold, std::size_t n_replicas, std::uint64_t seed);

}  // namespace infinichain
