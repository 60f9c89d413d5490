#include "infinichain/markov_approx.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "infinichain/errors.hpp"
#include "infinichain/stats.hpp"

namespace infinichain {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::exact: return "exact";
    case Provenance::stationary: return "stationary";
    case Provenance::age_distribution: return "age_distribution";
    case Provenance::empirical: return "empirical";
  }
  return "?";
}

Provenance provenance_from_string(const std::string& s) {
  for (auto p : {Provenance::exact, Provenance::stationary, Provenance::age_distribution, Provenance::empirical})
    if (to_string(p) == s) return p;
  throw Error("unknown provenance " + s);
}

bool CanonicalPkTable::has_unseen() const {
  return std::any_of(unseen.begin(), unseen.end(), [](bool b) { return b; });
}

namespace {
// Shortest text that reads back to the same double.
std::string exact_repr(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}
}  // namespace

void write_pk_csv(const CanonicalPkTable& pk, std::ostream& out) {
  out << "context,symbol,probability,provenance\n";
  const auto rows = static_cast<std::uint64_t>(pk.table.rows());
  for (std::uint64_t c = 0; c < rows; ++c) {
    const std::string ctx = context_from_index(c, pk.k, pk.alphabet).to_string();
    for (int a = 1; a <= pk.alphabet; ++a)
      out << ctx << ',' << a << ',' << exact_repr(pk(a, c)) << ',' << to_string(pk.provenance) << '\n';
  }
}

CanonicalPkTable read_pk_csv(std::istream& in) {
  std::string line;
  std::getline(in, line);
  struct Row {
    std::string ctx;
    int a;
    double p;
  };
  std::vector<Row> rows;
  CanonicalPkTable pk;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string ctx, a, p, prov;
    std::getline(ss, ctx, ',');
    std::getline(ss, a, ',');
    std::getline(ss, p, ',');
    std::getline(ss, prov, ',');
    rows.push_back({ctx, std::stoi(a), std::stod(p)});
    pk.provenance = provenance_from_string(prov);
  }
  if (rows.empty()) throw Error("empty pk table");
  pk.k = rows.front().ctx.size();
  for (const auto& r : rows) pk.alphabet = std::max(pk.alphabet, r.a);
  const auto n_rows = ipow(static_cast<std::uint64_t>(pk.alphabet), pk.k);
  pk.table = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows), pk.alphabet);
  for (const auto& r : rows) {
    const Past c = Past::parse(r.ctx);
    pk.table(static_cast<Eigen::Index>(c.context_index(pk.k, pk.alphabet)), r.a - 1) = r.p;
  }
  return pk;
}

AgeDistribution age_distribution(const Kernel& renewal, double tail_tol) {
  if (renewal.family() != Kernel::Family::renewal) throw InvalidKernel("age distribution needs a renewal kernel");
  const double a2 = renewal.alpha2();
  std::vector<double> w{1.0};
  double sum = 1.0;
  // Survival beyond j is at most w_j (1 - alpha(2)) / alpha(2).
  while (w.back() * (1.0 - a2) / a2 > tail_tol * sum) {
    const double next = w.back() * (1.0 - renewal.p(w.size() - 1));
    w.push_back(next);
    sum += next;
  }
  AgeDistribution d;
  d.tail_bound = w.back() * (1.0 - a2) / a2 / sum;
  d.pi = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())) / sum;
  return d;
}

Eigen::VectorXd stationary_contexts(const Kernel& kernel, std::uint64_t state_cap) {
  const auto ord = kernel.order();
  if (!ord) throw InvalidKernel("stationary_contexts needs a finite-order kernel");
  const int n = kernel.alphabet_size();
  const auto K = static_cast<std::size_t>(*ord);
  const auto states = ipow(static_cast<std::uint64_t>(n), K);
  if (states > state_cap) throw ContextSpaceTooLarge("too many contexts for a dense stationary solve");
  const auto S = static_cast<Eigen::Index>(states);
  if (S == 1) return Eigen::VectorXd::Ones(1);
  const auto span = ipow(static_cast<std::uint64_t>(n), K - 1);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(S, S);
  for (std::uint64_t s = 0; s < states; ++s) {
    const Eigen::VectorXd row = kernel.probs(context_from_index(s, K, n));
    for (int a = 0; a < n; ++a) {
      const auto next = static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(n) * (s % span);
      T(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(next)) += row(a);
    }
  }
  // pi (T - I) = 0, sum pi = 1: replace one balance equation by the normalisation.
  Eigen::MatrixXd A = (T - Eigen::MatrixXd::Identity(S, S)).transpose();
  A.row(S - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(S);
  b(S - 1) = 1.0;
  Eigen::VectorXd pi = A.fullPivLu().solve(b);
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

CanonicalPkTable pk_exact(const Kernel& kernel, std::size_t k) {
  const auto ord = kernel.order();
  if (!ord) throw OrderTooHigh("renewal kernels have unbounded order");
  if (static_cast<std::size_t>(*ord) > k)
    throw OrderTooHigh("kernel order " + std::to_string(*ord) + " exceeds k = " + std::to_string(k));
  const int n = kernel.alphabet_size();
  const auto rows = ipow(static_cast<std::uint64_t>(n), k);
  CanonicalPkTable pk;
  pk.k = k;
  pk.alphabet = n;
  pk.provenance = Provenance::exact;
  pk.table.resize(static_cast<Eigen::Index>(rows), n);
  for (std::uint64_t c = 0; c < rows; ++c)
    pk.table.row(static_cast<Eigen::Index>(c)) = kernel.probs(context_from_index(c, k, n)).transpose();
  return pk;
}

CanonicalPkTable pk_stationary(const Kernel& kernel, std::size_t k) {
  const auto ord = kernel.order();
  if (!ord) throw InvalidKernel("pk_stationary needs a finite-order kernel");
  const auto K = static_cast<std::size_t>(*ord);
  if (k >= K) return pk_exact(kernel, k);
  const int n = kernel.alphabet_size();
  const Eigen::VectorXd pi = stationary_contexts(kernel);
  const auto rows = ipow(static_cast<std::uint64_t>(n), k);
  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), n);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
  Eigen::MatrixXd plain = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), n);
  for (Eigen::Index s = 0; s < pi.size(); ++s) {
    const Eigen::VectorXd row = kernel.probs(context_from_index(static_cast<std::uint64_t>(s), K, n));
    const auto c = static_cast<Eigen::Index>(static_cast<std::uint64_t>(s) % rows);
    num.row(c) += pi(s) * row.transpose();
    den(c) += pi(s);
    plain.row(c) += row.transpose();
  }
  CanonicalPkTable pk;
  pk.k = k;
  pk.alphabet = n;
  pk.provenance = Provenance::stationary;
  pk.table.resize(static_cast<Eigen::Index>(rows), n);
  for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(rows); ++c) {
    // Contexts of stationary probability 0: any average over extensions keeps the leftovers >= 0.
    pk.table.row(c) = den(c) > 0.0 ? Eigen::RowVectorXd(num.row(c) / den(c))
                                   : Eigen::RowVectorXd(plain.row(c) / plain.row(c).sum());
  }
  return pk;
}

CanonicalPkTable pk_renewal(const Kernel& kernel, std::size_t k) {
  if (kernel.family() != Kernel::Family::renewal) throw InvalidKernel("pk_renewal needs a renewal kernel");
  const AgeDistribution age = age_distribution(kernel);
  double tail_num = 0.0, tail_den = 0.0;
  for (Eigen::Index j = static_cast<Eigen::Index>(k); j < age.pi.size(); ++j) {
    tail_num += age.pi(j) * kernel.p(static_cast<std::size_t>(j));
    tail_den += age.pi(j);
  }
  const auto rows = ipow(2, k);
  CanonicalPkTable pk;
  pk.k = k;
  pk.alphabet = 2;
  pk.provenance = Provenance::age_distribution;
  pk.table.resize(static_cast<Eigen::Index>(rows), 2);
  for (std::uint64_t c = 0; c < rows; ++c) {
    const auto t = kernel.time_since_last2(context_from_index(c, k, 2));
    double p2;
    if (t) {
      p2 = kernel.p(*t);
    } else if (tail_den > 0.0) {
      p2 = tail_num / tail_den;
    } else {
      // k beyond the truncation point: the conditional hazard is the limit over the tail.
      p2 = 0.5 * (kernel.p_inf_from(k) + kernel.p_sup_from(k));
    }
    pk.table(static_cast<Eigen::Index>(c), 0) = 1.0 - p2;
    pk.table(static_cast<Eigen::Index>(c), 1) = p2;
  }
  return pk;
}

CanonicalPkTable pk_canonical(const Kernel& kernel, std::size_t k) {
  if (kernel.family() == Kernel::Family::renewal) return pk_renewal(kernel, k);
  if (static_cast<std::size_t>(*kernel.order()) <= k) return pk_exact(kernel, k);
  return pk_stationary(kernel, k);
}

CanonicalPkTable pk_empirical(const RangePartition& partition, std::size_t k, std::size_t n_samples,
                              std::uint64_t seed, unsigned workers, std::size_t trajectory) {
  if (n_samples == 0) throw Error("pk_empirical needs n_samples >= 1");
  const int n = partition.alphabet_size();
  const auto rows = static_cast<Eigen::Index>(ipow(static_cast<std::uint64_t>(n), k));
  const std::size_t per = std::min(n_samples, trajectory);
  const std::size_t replicas = (n_samples + per - 1) / per;
  std::vector<Eigen::MatrixXd> counts(replicas);
  parallel_for(replicas, workers, [&](std::size_t r) {
    const std::size_t len = std::min(per, n_samples - r * per);
    const auto traj = perfect_trajectory(partition, replica_seed(seed, r), len + k);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(rows, n);
    Past p = Past::from_chronological({traj.begin(), traj.begin() + static_cast<std::ptrdiff_t>(k)});
    for (std::size_t i = k; i < traj.size(); ++i) {
      c(static_cast<Eigen::Index>(p.context_index(k, n)), traj[i] - 1) += 1.0;
      p.push(traj[i]);
    }
    counts[r] = std::move(c);
  });
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(rows, n);
  for (const auto& c : counts) total += c;

  CanonicalPkTable pk;
  pk.k = k;
  pk.alphabet = n;
  pk.provenance = Provenance::empirical;
  pk.n_samples = n_samples;
  pk.table.resize(rows, n);
  pk.ci_low.resize(rows, n);
  pk.ci_high.resize(rows, n);
  pk.unseen.assign(static_cast<std::size_t>(rows), false);
  for (Eigen::Index c = 0; c < rows; ++c) {
    const double m = total.row(c).sum();
    if (m == 0.0) {
      pk.unseen[static_cast<std::size_t>(c)] = true;
      pk.table.row(c).setConstant(1.0 / n);
      pk.ci_low.row(c).setZero();
      pk.ci_high.row(c).setOnes();
      continue;
    }
    pk.table.row(c) = total.row(c) / m;
    for (int a = 0; a < n; ++a) {
      const Interval ci = wilson(static_cast<std::uint64_t>(total(c, a)), static_cast<std::uint64_t>(m), 3.0);
      pk.ci_low(c, a) = ci.lo;
      pk.ci_high(c, a) = ci.hi;
    }
  }
  return pk;
}

std::vector<Symbol> simulate_markov(const CanonicalPkTable& table, std::size_t n, std::uint64_t seed,
                                    std::size_t burn_in) {
  const UniformStream u(seed);
  const int N = table.alphabet;
  std::vector<Symbol> init(table.k);
  std::int64_t idx = 0;
  for (auto& s : init) s = static_cast<Symbol>(u(idx++) * N) + 1;
  Past p = Past::from_chronological(std::move(init));
  std::vector<Symbol> out;
  out.reserve(n);
  for (std::size_t step = 0; step < burn_in + n; ++step) {
    const auto c = static_cast<Eigen::Index>(p.context_index(table.k, N));
    const double x = u(idx++);
    double cum = 0.0;
    Symbol a = N;
    for (int b = 0; b < N; ++b) {
      cum += table.table(c, b);
      if (x < cum) {
        a = b + 1;
        break;
      }
    }
    if (step >= burn_in) out.push_back(a);
    p.push(a);
  }
  return out;
}

}  // namespace infinichain
