#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "infinichain/cftp.hpp"
#include "infinichain/geom_conc.hpp"
#include "infinichain/kernel.hpp"
#include "infinichain/partition.hpp"
#include "infinichain/stats.hpp"

namespace infinichain {

// Pooled site-disagreement fraction of the coupling (X, X^[k]) over n_replicas windows.
struct DbarEstimate {
  std::size_t k = 0;
  std::size_t replicas = 0;
  std::uint64_t sites = 0;
  std::uint64_t disagreements = 0;
  double mean = 0.0;
  double se = 0.0;  // replica-level standard error
  Interval ci;      // Wilson, z = 3, pooled counts
};

DbarEstimate estimate_dbar(const RangePartition& partition, const TruncatedPartition& truncated,
                           std::size_t horizon, std::size_t n_replicas, std::uint64_t seed, unsigned workers = 1,
                           const CftpConfig& cfg = {});
// Truncation built from the canonical k-step table of the partition's kernel.
DbarEstimate estimate_dbar(const RangePartition& partition, std::size_t k, std::size_t horizon,
                           std::size_t n_replicas, std::uint64_t seed, unsigned workers = 1,
                           const CftpConfig& cfg = {});

// |theta[0]| over independent replicas of one detector.
struct ThetaEstimate {
  Detector detector = Detector::theta_prime;
  std::vector<std::int64_t> depth;  // |theta[0]| per replica
  double mean = 0.0;
  double se = 0.0;
  std::int64_t window_cap = 0;

  // P(|theta[0]| > k) and its standard error.
  double tail(std::size_t k) const;
  double tail_se(std::size_t k) const;
};

ThetaEstimate estimate_theta(const RangePartition& partition, Detector detector, std::size_t n_replicas,
                             std::uint64_t seed, unsigned workers = 1, const CftpConfig& cfg = {});

// ell(U_{-inf}^0) for a renewal kernel under I^(1), one value per replica; -1 means beyond cap.
std::vector<std::int64_t> sample_ell(const Kernel& renewal, std::size_t n_replicas, std::uint64_t seed,
                                     std::int64_t cap, unsigned workers = 1);

enum class Verdict { ok, violated, not_applicable };
std::string to_string(Verdict v);

struct BoundValue {
  bool applicable = false;
  double value = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();  // CI upper edge
  std::string note;
};

// Sum of (1 - alpha_k) finite: alpha_k reaches 1 (finite order, or a renewal tail that becomes constant).
bool summable_continuity(const Kernel& kernel);

// E|theta[0]| (1 - alpha_k).
BoundValue bound_summable(const Kernel& kernel, std::size_t k, const ThetaEstimate& theta);
// E|theta[0]| P(ell > k).
BoundValue bound_ell(std::size_t k, const ThetaEstimate& theta, const std::vector<std::int64_t>& ell);
// P(theta[0] < -k).
BoundValue bound_theta_tail(std::size_t k, const ThetaEstimate& theta);
// v_k of the house of cards with r_l = alpha_l.
double bound_achier(const AlphaSequence& alpha, std::size_t k);
BoundValue bound_achier_checked(const AlphaSequence& alpha, std::size_t k);

class LocalContinuitySpec {
 public:
  enum class Variant { strong, uniform };

  // r_k = max(r_{k-1}, 1 - (1 - alpha2)^{ell^{-1}(k)}), ell nondecreasing.
  static LocalContinuitySpec strong(double alpha0, double alpha2, std::function<std::int64_t(std::int64_t)> ell,
                                    std::int64_t inverse_cap = 1000000);
  // r_k = max(r_{k-1}, 1 - (1 - abar_k) / alpha2).
  static LocalContinuitySpec uniform(double alpha0, double alpha2, std::function<double(std::size_t)> abar);
  // Uniform variant with abar_k = alpha_k along the all-1 past.
  static LocalContinuitySpec from_renewal(const Kernel& renewal);

  Variant variant() const { return variant_; }
  double alpha0() const { return alpha0_; }
  double alpha2() const { return alpha2_; }
  // max{i <= cap : ell(i) <= k}, 0 when empty.
  std::int64_t ell_inverse(std::int64_t k) const;
  // r_0 .. r_{n-1}
  Eigen::VectorXd r_values(std::size_t n) const;

 private:
  Variant variant_ = Variant::uniform;
  double alpha0_ = 0.0;
  double alpha2_ = 0.0;
  std::function<std::int64_t(std::int64_t)> ell_;
  std::function<double(std::size_t)> abar_;
  std::int64_t inverse_cap_ = 1000000;
};

// sum_k prod_{i<k} r_i = infinity, judged on the first `horizon` terms.
bool divergence_check(const Eigen::VectorXd& r);

struct LocalBound {
  double uk = 0.0;
  double vk = 0.0;
  std::size_t n = 0;  // floor(k alpha2 / 2)
  double value() const { return uk + vk; }
};
// u_k + v_{floor(k alpha2 / 2)}; throws DivergenceCheckFailed or KTooSmall.
LocalBound bound_local_continuity(const LocalContinuitySpec& spec, std::size_t k, UkMode mode = UkMode::exact,
                                  std::size_t horizon = 100000);

struct ReportConfig {
  std::vector<std::size_t> k_grid;
  std::size_t horizon = 100;
  std::size_t replicas = 1000;
  std::size_t theta_replicas = 10000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  CftpConfig cftp;
  std::string partition = "auto";  // coupling behind dbar_hat
  bool empirical = true;           // false: bound columns only, no coupled runs
};

struct BoundCell {
  BoundValue bound;
  Verdict verdict = Verdict::not_applicable;
};

struct DbarRow {
  std::size_t k = 0;
  DbarEstimate dbar;
  // The other coupling of a renewal kernel, used for the verdicts of bounds that analyse it.
  std::optional<DbarEstimate> dbar_other;
  BoundCell summable, ell, theta, achier, local;
};

struct DbarReport {
  std::string kernel;
  std::string partition;
  std::optional<ThetaEstimate> theta_canonical;  // theta_prime or vwnn on I^(1)
  std::optional<ThetaEstimate> theta_ell;        // renewal kernels on I^(1)
  std::optional<ThetaEstimate> theta_renewal;    // renewal kernels on I^(2)
  std::vector<DbarRow> rows;
  bool any_violation() const;
};

// Each bound is judged against an estimate of the coupling it analyses:
// I^(1) for summable, ell and achier, I^(2) for theta and local on renewal kernels
// (I^(1) with theta_prime otherwise).
DbarReport report(const Kernel& kernel, const ReportConfig& cfg);

// Columns: kernel, k, dbar_hat, dbar_ci, b_summable, b_ell, b_theta, b_achier, b_local, verdicts.
void write_report_csv(const DbarReport& report, std::ostream& out);

}  // namespace infinichain
