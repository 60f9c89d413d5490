#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace infinichain {

enum class Provenance { exact, stationary, age_distribution, empirical };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

// P^[k](a | a_{-k}^{-1}); rows indexed by Past::context_index over k symbols.
struct CanonicalPkTable {
  std::size_t k = 0;
  int alphabet = 2;
  Eigen::MatrixXd table;
  Provenance provenance = Provenance::exact;

  // empirical provenance only
  std::size_t n_samples = 0;
  Eigen::MatrixXd ci_low;
  Eigen::MatrixXd ci_high;
  std::vector<bool> unseen;

  double operator()(int a, std::uint64_t ctx) const {
    return table(static_cast<Eigen::Index>(ctx), a - 1);
  }
  bool has_unseen() const;
};

// Columns: context (most recent symbol first), symbol, probability, provenance.
void write_pk_csv(const CanonicalPkTable& pk, std::ostream& out);
CanonicalPkTable read_pk_csv(std::istream& in);

}  // namespace infinichain
