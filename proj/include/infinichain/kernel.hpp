#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "infinichain/past.hpp"

namespace infinichain {

enum class ExtensionRule { exact, infimum, supremum };

// Rows indexed by Past::context_index over `order` symbols, one column per symbol.
struct MarkovSpec {
  int order = 1;
  Eigen::MatrixXd table;
};

// p_i = P(2 | past with time i since the last 2). Values past `head` repeat `cycle`.
struct RenewalSpec {
  std::vector<double> head;
  std::vector<double> cycle;
};

// P(a|past) = sum_j weights(j) * components[j](a | a_{-j}^{-1}); components[j] has N^j rows.
struct MixtureSpec {
  Eigen::VectorXd weights;
  std::vector<Eigen::MatrixXd> components;
};

class Kernel {
 public:
  enum class Family { markov, renewal, mixture };

  static Kernel markov(int alphabet, int order, Eigen::MatrixXd table, std::string name = "markov");
  static Kernel renewal(std::vector<double> head, std::vector<double> cycle,
                        std::string name = "renewal");
  static Kernel mixture(int alphabet, Eigen::VectorXd weights,
                        std::vector<Eigen::MatrixXd> components, std::string name = "mixture");

  Family family() const;
  int alphabet_size() const { return alphabet_; }
  // Finite Markov order, empty for the renewal family.
  std::optional<int> order() const;
  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  const MarkovSpec* markov_spec() const { return std::get_if<MarkovSpec>(&spec_); }
  const RenewalSpec* renewal_spec() const { return std::get_if<RenewalSpec>(&spec_); }
  const MixtureSpec* mixture_spec() const { return std::get_if<MixtureSpec>(&spec_); }

  double prob(Symbol a, const Past& past, ExtensionRule rule = ExtensionRule::exact) const;
  Eigen::VectorXd probs(const Past& past) const;
  // inf_z P(a | a_{-k}^{-1} z) for every a, using the k most recent symbols of `past`.
  Eigen::VectorXd infima(const Past& past, std::size_t k) const;
  Eigen::VectorXd suprema(const Past& past, std::size_t k) const;

  // Renewal family only.
  double p(std::size_t i) const;
  double p_inf_from(std::size_t k) const;
  double p_sup_from(std::size_t k) const;
  double alpha1() const { return 1.0 - p_sup_from(0); }
  double alpha2() const { return p_inf_from(0); }
  // t(past): number of leading 1s before the most recent 2.
  std::optional<std::size_t> time_since_last2(const Past& past) const;
  // Index from which p_i is periodic.
  std::size_t renewal_head_size() const;

  static constexpr std::uint64_t kExtensionCap = std::uint64_t{1} << 22;

 private:
  Kernel() = default;
  Eigen::VectorXd extremes(const Past& past, std::size_t k, bool lower) const;

  int alphabet_ = 2;
  std::string name_;
  std::variant<MarkovSpec, RenewalSpec, MixtureSpec> spec_;
};

struct AlphaSequence {
  Eigen::VectorXd values;
  double at(std::size_t k) const {
    return k < static_cast<std::size_t>(values.size()) ? values(static_cast<Eigen::Index>(k))
                                                       : values(values.size() - 1);
  }
  std::size_t kmax() const { return static_cast<std::size_t>(values.size()) - 1; }
};

// sum_a inf_z P(a | context z) over the whole context.
double alpha_context(const Kernel& kernel, const Past& context);
AlphaSequence alpha_seq(const Kernel& kernel, std::size_t kmax,
                        std::uint64_t context_cap = std::uint64_t{1} << 20);

// Renewal closed form: 1 - sup_{l,m >= k} |p_l - p_m|.
double renewal_alpha(const Kernel& kernel, std::size_t k);

}  // namespace infinichain
