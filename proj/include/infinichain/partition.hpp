#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "infinichain/kernel.hpp"
#include "infinichain/pk_table.hpp"

namespace infinichain {

inline constexpr int kInfiniteRange = std::numeric_limits<int>::max();
inline constexpr std::size_t kAllLevels = std::numeric_limits<std::size_t>::max();

struct Lookup {
  Symbol symbol = 1;
  int range = 0;
  bool operator==(const Lookup&) const = default;
};

struct Locate {
  enum class Status { found, needs_past, beyond };
  Status status = Status::found;
  Lookup lookup;
  int needed = 0;        // needs_past: context length required
  double covered = 0.0;  // beyond: total length of the levels examined

  static Locate found(Symbol a, int k) { return {Status::found, {a, k}, 0, 0.0}; }
  static Locate needs(int k) { return {Status::needs_past, {}, k, 0.0}; }
  static Locate beyond(double mass) { return {Status::beyond, {}, 0, mass}; }
};

// Anything that maps (past, u) to a symbol and a range: F and L.
class UpdateRule {
 public:
  virtual ~UpdateRule() = default;
  virtual Locate try_locate(const Past& past, double u) const = 0;
  virtual int alphabet_size() const = 0;
  // Throws PastTooShort when u cannot be resolved from the stored past.
  Lookup locate(const Past& past, double u) const;
};

class RangePartition : public UpdateRule {
 public:
  explicit RangePartition(const Kernel& kernel) : kernel_(kernel) {}
  const Kernel& kernel() const { return kernel_; }
  int alphabet_size() const override { return kernel_.alphabet_size(); }
  virtual std::string kind() const = 0;

  // |I_k(a | a_{-k}^{-1})| for every a, from the k most recent symbols of `past`.
  virtual Eigen::VectorXd level(std::size_t k, const Past& past) const = 0;
  // sum_{j<=k} |I_j(a | a_{-j}^{-1})| for every a.
  virtual Eigen::VectorXd cumulative(std::size_t k, const Past& past) const;
  // Symbols of level k in layout order.
  virtual std::vector<Symbol> level_order(std::size_t k) const;

  // Walks levels 0..max_level only; `beyond` when u lies past all of them.
  virtual Locate try_locate_upto(const Past& past, double u, std::size_t max_level) const = 0;
  Locate try_locate(const Past& past, double u) const override {
    return try_locate_upto(past, u, kAllLevels);
  }

 protected:
  const Kernel& kernel_;
};

// I^(1): |I_k(a|.)| = alpha_k(a|a_{-k}^{-1}) - alpha_{k-1}(a|a_{-k+1}^{-1}).
class CanonicalPartition final : public RangePartition {
 public:
  explicit CanonicalPartition(const Kernel& kernel);
  std::string kind() const override { return "canonical"; }
  Eigen::VectorXd level(std::size_t k, const Past& past) const override;
  Eigen::VectorXd cumulative(std::size_t k, const Past& past) const override;
  Locate try_locate_upto(const Past& past, double u, std::size_t max_level) const override;

 private:
  Locate locate_finite_order(const Past& past, double u, std::size_t max_level) const;
  Locate locate_renewal(const Past& past, double u, std::size_t max_level) const;
  // Level table row for (k, context index); tables are precomputed when small, cached otherwise.
  Eigen::VectorXd level_row(std::size_t k, std::uint64_t ctx) const;

  std::size_t order_ = 0;
  bool precomputed_ = false;
  std::vector<Eigen::MatrixXd> levels_;  // levels_[k] is N^k x N when precomputed

  mutable std::shared_mutex cache_mutex_;
  mutable std::unordered_map<std::uint64_t, Eigen::VectorXd> cache_;
};

// I^(2) for the renewal kernel: I(2|0) = [0, alpha(2)), I(1|0) = [alpha(2), alpha_0),
// then level t+1 holds 1 - p_t - alpha(1) for symbol 1 and p_t - alpha(2) for symbol 2.
class RenewalPartition final : public RangePartition {
 public:
  explicit RenewalPartition(const Kernel& kernel);
  std::string kind() const override { return "renewal"; }
  Eigen::VectorXd level(std::size_t k, const Past& past) const override;
  std::vector<Symbol> level_order(std::size_t k) const override;
  Locate try_locate_upto(const Past& past, double u, std::size_t max_level) const override;

  double alpha1() const { return alpha1_; }
  double alpha2() const { return alpha2_; }

 private:
  double alpha1_;
  double alpha2_;
};

// I^[k]: levels 0..k of the base partition in place, then the leftover
// P^[k](a|.) - sum_{j<=k}|I_j(a|.)| for each symbol, labelled range k.
class TruncatedPartition final : public UpdateRule {
 public:
  TruncatedPartition(const RangePartition& base, CanonicalPkTable pk);
  Locate try_locate(const Past& past, double u) const override;
  int alphabet_size() const override { return base_.alphabet_size(); }
  std::size_t k() const { return pk_.k; }
  const RangePartition& base() const { return base_; }
  const CanonicalPkTable& pk() const { return pk_; }
  const Eigen::MatrixXd& leftover() const { return leftover_; }
  // Largest negative leftover that was clamped to 0.
  double clamped() const { return clamped_; }

 private:
  const RangePartition& base_;
  CanonicalPkTable pk_;
  Eigen::MatrixXd leftover_;
  double clamped_ = 0.0;
};

std::unique_ptr<RangePartition> make_partition(const Kernel& kernel, const std::string& kind);

struct LemmaViolation {
  std::string context;
  std::size_t k;
  Symbol symbol;
  double cumulative;
  double infimum;
};

struct LemmaReport {
  std::size_t checked = 0;
  std::vector<LemmaViolation> violations;
  bool ok() const { return violations.empty(); }
};

// sum_{i<=k}|I_i(a|a_{-i}^{-1})| <= inf_z P(a|a_{-k}^{-1} z) for every k up to each context's length.
LemmaReport check_lemma_simple(const RangePartition& partition, const std::vector<Past>& contexts,
                               double tol = 1e-12);

// Columns: context, symbol, range, length; all contexts up to `depth`.
void write_partition_csv(const RangePartition& partition, std::size_t depth, std::ostream& out);

}  // namespace infinichain
