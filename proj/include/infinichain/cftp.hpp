#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "infinichain/kernel.hpp"
#include "infinichain/partition.hpp"
#include "infinichain/stream.hpp"

namespace infinichain {

enum class Detector { theta_prime, vwnn_WYQ, ell_based, renewal_last2 };
std::string to_string(Detector d);

struct CoalescenceResult {
  std::int64_t theta0 = 0;
  Detector method = Detector::theta_prime;
  std::int64_t window_used = 0;
  // Symbols before this time may depend on the past even when theta0 is earlier
  // (only the vwnn construction separates the two).
  std::int64_t determined_from = 0;
};

struct CftpConfig {
  // Search depth below the lowest time that must be covered.
  std::int64_t window_cap = std::int64_t{1} << 20;
  std::int64_t initial_window = 1;
};

struct Sample {
  std::vector<Symbol> symbols;
  std::vector<int> ranges;
  Symbol last() const { return symbols.back(); }
};

// F_{m,n}: symbols at times m..n generated from `past` with U_m..U_n.
Sample apply_update(const UpdateRule& rule, const Past& past, const UniformStream& u, std::int64_t m,
                    std::int64_t n);

// Canonical partition: max{i <= lower : U_j < alpha_{j-i} for all j in [i,0]}.
// Renewal partition:   max{i <= lower : U_i in I(2|0)}.
CoalescenceResult theta_prime(const RangePartition& partition, const UniformStream& u,
                              const CftpConfig& cfg = {}, std::int64_t lower = 0);

// theta[0] = Y_Q from the W_i / Y_i / Q construction on I^(1).
CoalescenceResult theta_vwnn(const CanonicalPartition& partition, const UniformStream& u,
                             const CftpConfig& cfg = {}, std::int64_t lower = 0);

// sup{j <= lower : ell(U^i) <= i - j for i = j..0} on I^(1) of a renewal kernel.
CoalescenceResult theta_ell(const CanonicalPartition& partition, const UniformStream& u,
                            const CftpConfig& cfg = {}, std::int64_t lower = 0);

// ell(U_{-inf}^i) for a renewal kernel under I^(1); -1 if it exceeds `cap`.
std::int64_t ell_value(const Kernel& renewal, const UniformStream& u, std::int64_t i, std::int64_t cap);

// Detector matching the partition and kernel.
Detector default_detector(const RangePartition& partition);
CoalescenceResult detect(const RangePartition& partition, const UniformStream& u,
                         const CftpConfig& cfg = {}, std::int64_t lower = 0);

// k* = min{k : alpha_k > 0}, with alpha_k the global continuity sequence.
std::size_t kstar(const Kernel& kernel);
// Whether the F* propagation of `block` (uniforms below alpha_{k*}) coalesces
// in its last k* symbols from every length-k* context.
bool in_coalescence_set(const CanonicalPartition& partition, std::size_t kst,
                        const std::vector<double>& block);

// 10 random infinite pasts plus the constant pasts 1 and N.
std::vector<Past> probe_pasts(int alphabet, std::uint64_t seed, int n_random = 10);

struct Reconstruction {
  std::int64_t theta0 = 0;
  std::vector<Symbol> symbols;  // times theta0..end from the first probe
  // Earliest time from which every probe produced identical symbols.
  std::int64_t agree_from = 0;
};

// Phi: runs the update from theta0 under every probe past; throws CoalescenceViolation
// if the symbol at `end` differs between probes.
Reconstruction reconstruct(const UpdateRule& rule, const UniformStream& u, std::int64_t theta0,
                           const std::vector<Past>& probes, std::int64_t end = 0);

// Stationary sample at times -(n_steps-1)..0.
std::vector<Symbol> perfect_trajectory(const RangePartition& partition, std::uint64_t seed,
                                       std::size_t n_steps, const CftpConfig& cfg = {});

struct CouplingTrace {
  std::uint64_t seed = 0;
  std::size_t k = 0;
  CoalescenceResult coalescence;
  std::int64_t first_time = 0;  // time of x[0]
  std::vector<Symbol> x;
  std::vector<Symbol> xk;
  std::vector<int> range;    // range used by the full chain
  std::vector<int> range_k;  // range used by the truncated chain
  // Largest range used by the full chain on [theta0, first_time).
  int max_range_before = 0;

  std::size_t size() const { return x.size(); }
  std::size_t disagreements() const;
};

// (X, X^[k]) at times -(n_steps-1)..0 driven by the same stream.
CouplingTrace coupled_sample(const RangePartition& partition, const TruncatedPartition& truncated,
                             std::uint64_t seed, std::size_t n_steps, const CftpConfig& cfg = {});

// Columns: seed, i, x, xk, range, disagree.
void write_trace_csv(const std::vector<CouplingTrace>& traces, std::ostream& out);

}  // namespace infinichain
