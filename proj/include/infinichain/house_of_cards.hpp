#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace infinichain {

// Nondecreasing r_0, r_1, ... in [0,1]; the chain climbs i -> i+1 with
// probability r_i and falls back to 0 otherwise.
class HocSpec {
 public:
  enum class Family { constant, exponential, harmonic, power, list };

  static HocSpec constant(double r);
  // 1 - r_k = c rho^k
  static HocSpec exponential(double c, double rho);
  // 1 - r_k = r / k for k >= 1, r_0 = 1 - r
  static HocSpec harmonic(double r);
  // 1 - r_k = c (k+1)^-zeta
  static HocSpec power(double c, double zeta);
  // explicit r_0..r_{n-1}, then `tail` forever
  static HocSpec list(std::vector<double> head, double tail);
  // "const:0.5", "exp:0.5,0.1", "harmonic:0.2", "pow:0.3,2", "list:0.2,0.5,0.7;0.9"
  static HocSpec parse(const std::string& text);

  Family family() const { return family_; }
  const std::string& label() const { return label_; }
  double r(std::size_t k) const { return r_(k); }
  Eigen::VectorXd r_values(std::size_t n) const;

  // Return-time law: t_k = (1 - r_{k-1}) prod_{i<=k-2} r_i, k >= 1.
  double t(std::size_t k) const;
  // nu_n = P(I >= n) = prod_{i<=n-2} r_i.
  double nu(std::size_t n) const;
  double t_infinity() const;
  // sum_k (1 - r_k) < infinity, decided from the family.
  bool summable() const;

  // Family parameters (c, rho), (r), (c, zeta); empty for constant/list.
  const std::vector<double>& params() const { return params_; }

 private:
  HocSpec(Family f, std::string label, std::function<double(std::size_t)> r, std::vector<double> params);
  void validate() const;

  Family family_;
  std::string label_;
  std::function<double(std::size_t)> r_;
  std::vector<double> params_;
};

// v_k = P(H_k = 0 | H_0 = 0) for k = 0..kmax by forward recursion.
Eigen::VectorXd vk_dp(const HocSpec& spec, std::size_t kmax);
// Same sequence from an explicit r vector (entries beyond its end repeat the last one).
Eigen::VectorXd vk_dp(const Eigen::VectorXd& r, std::size_t kmax);

// Sum over compositions of k of prod t_{parts}; k <= 20.
double vk_combinatorial(const HocSpec& spec, std::size_t k);

struct McEstimate {
  double mean = 0.0;
  double sigma = 0.0;
  std::size_t n = 0;
  double lo = 0.0;
  double hi = 0.0;
};
// Estimates of v_0..v_kmax from the same n_replicas paths.
std::vector<McEstimate> vk_mc(const HocSpec& spec, std::size_t kmax, std::size_t n_replicas,
                              std::uint64_t seed, unsigned workers = 1);
// Return times I_1, I_2, ... of one replica, each capped at `cap` (cap+1 stands for "larger").
std::vector<std::size_t> return_times(const HocSpec& spec, std::size_t count, std::size_t cap,
                                      std::uint64_t seed);

double nonsummable_rate(double r, std::size_t k);
// C (ln k)^{3+r} / k^{2-(1+r)^2}; r must lie in (0, sqrt 2 - 1).
double bound_nonsummable(double r, std::size_t k, double C);
// max over k in [k_lo, k_hi] of v_k / rate(k)
double calibrate_nonsummable_constant(const Eigen::VectorXd& v, double r, std::size_t k_lo, std::size_t k_hi);

struct GenericBound {
  double value = 0.0;
  std::size_t best_K = 0;
  bool degenerate = false;  // t_infinity = 0, only the K^2 term is informative
};
// inf_{K=1..n} K^2 (1 - r_{floor(n/K)}) + (1 - t_inf)^K
GenericBound bound_summable_generic(const HocSpec& spec, std::size_t n);

// (1/C_r)(e^{C_r} rho)^k with C_r in (0, ln(1/rho)).
double bound_exponential(double c_r, double rho, std::size_t k);

struct QualitativeItem {
  std::string item;
  bool applicable = false;
  bool holds = false;
  std::string detail;
};
struct QualitativeReport {
  std::vector<QualitativeItem> items;
  Eigen::VectorXd ratio;  // v_k / (1 - r_k), diagnostic only
};
QualitativeReport qualitative_checks(const HocSpec& spec, std::size_t kmax = 2000);

}  // namespace infinichain
