#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "infinichain/cftp.hpp"
#include "infinichain/kernel.hpp"
#include "infinichain/partition.hpp"
#include "infinichain/pk_table.hpp"

namespace infinichain {

// Stationary law of the time since the last 2 for a renewal kernel:
// pi_j proportional to prod_{i<j} (1 - p_i), cut once the tail is below `tail_tol`.
struct AgeDistribution {
  Eigen::VectorXd pi;
  double tail_bound = 0.0;  // mass beyond pi.size() before renormalisation
};
AgeDistribution age_distribution(const Kernel& renewal, double tail_tol = 1e-12);

// Stationary law over the N^order contexts of a finite-order kernel (index as Past::context_index).
Eigen::VectorXd stationary_contexts(const Kernel& kernel, std::uint64_t state_cap = 2048);

CanonicalPkTable pk_exact(const Kernel& kernel, std::size_t k);
CanonicalPkTable pk_stationary(const Kernel& kernel, std::size_t k);
CanonicalPkTable pk_renewal(const Kernel& kernel, std::size_t k);
// exact, stationary or age-distribution table, whichever applies.
CanonicalPkTable pk_canonical(const Kernel& kernel, std::size_t k);

// Conditional frequencies from perfect samples; rows never observed fall back to
// uniform and are flagged in `unseen`. CIs are Wilson intervals at z = 3.
CanonicalPkTable pk_empirical(const RangePartition& partition, std::size_t k, std::size_t n_samples,
                              std::uint64_t seed, unsigned workers = 1, std::size_t trajectory = 4096);

// Order-k simulation from a uniform-random initial context, discarding `burn_in` steps.
std::vector<Symbol> simulate_markov(const CanonicalPkTable& table, std::size_t n, std::uint64_t seed,
                                    std::size_t burn_in);

}  // namespace infinichain
