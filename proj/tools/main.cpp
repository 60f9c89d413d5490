#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "infinichain/bounds.hpp"
#include "infinichain/cftp.hpp"
#include "infinichain/errors.hpp"
#include "infinichain/geom_conc.hpp"
#include "infinichain/house_of_cards.hpp"
#include "infinichain/kernel_io.hpp"
#include "infinichain/markov_approx.hpp"
#include "infinichain/partition.hpp"
#include "infinichain/stats.hpp"
#include "infinichain/stream.hpp"

using namespace infinichain;

namespace {

struct Options {
  std::string kernel = "renewal_p04";
  std::string k_list = "1";
  std::uint64_t seed = 1;
  std::size_t replicas = 0;
  std::size_t horizon = 100;
  std::int64_t window_cap = std::int64_t{1} << 20;
  int workers = 0;
  std::string out;
  std::string partition = "auto";
  std::string r = "const:0.5";
  std::size_t kmax = 20;
  std::string alpha = "0.2,0.5,0.8";
  std::string n_list = "10,100";
  std::string x_list;
  std::string side = "upper";
  std::size_t steps = 1000;
  std::size_t theta_replicas = 10000;
  double c_r = 0.0;
};

std::vector<std::size_t> k_grid(const std::string& s) {
  std::vector<std::size_t> out;
  for (long v : parse_int_list(s)) {
    if (v < 0) throw Error("k values must be nonnegative");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw Error("empty k list");
  return out;
}

// Writes to --out if given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error("cannot open " + path);
    }
  }
  std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::unique_ptr<RangePartition> partition_for(const Kernel& kernel, const std::string& kind) {
  return make_partition(kernel, kind);
}

CftpConfig cftp_config(const Options& o) {
  CftpConfig c;
  c.window_cap = o.window_cap;
  return c;
}

int run_sample(const Options& o) {
  const Kernel kernel = load_kernel(o.kernel);
  const auto part = partition_for(kernel, o.partition);
  const std::size_t reps = o.replicas ? o.replicas : 1;
  const unsigned workers = resolve_workers(o.workers);
  std::vector<std::vector<Symbol>> paths(reps);
  parallel_for(reps, workers, [&](std::size_t r) {
    paths[r] = perfect_trajectory(*part, replica_seed(o.seed, r), o.steps, cftp_config(o));
  });
  Sink sink(o.out);
  auto& os = sink.os();
  os << "seed,i,x\n";
  for (std::size_t r = 0; r < reps; ++r) {
    const auto s = replica_seed(o.seed, r);
    const auto first = -static_cast<std::int64_t>(o.steps) + 1;
    for (std::size_t j = 0; j < paths[r].size(); ++j)
      os << s << ',' << first + static_cast<std::int64_t>(j) << ',' << paths[r][j] << '\n';
  }
  return 0;
}

int run_couple(const Options& o) {
  const Kernel kernel = load_kernel(o.kernel);
  const auto ks = k_grid(o.k_list);
  if (ks.size() != 1) throw Error("couple takes a single k");
  const auto part = partition_for(kernel, o.partition);
  const TruncatedPartition trunc(*part, pk_canonical(kernel, ks[0]));
  const std::size_t reps = o.replicas ? o.replicas : 1;
  const unsigned workers = resolve_workers(o.workers);
  std::vector<CouplingTrace> traces(reps);
  parallel_for(reps, workers, [&](std::size_t r) {
    traces[r] = coupled_sample(*part, trunc, replica_seed(o.seed, r), o.horizon, cftp_config(o));
  });
  Sink sink(o.out);
  write_trace_csv(traces, sink.os());
  return 0;
}

int run_report(const Options& o, bool empirical) {
  const Kernel kernel = load_kernel(o.kernel);
  ReportConfig cfg;
  cfg.k_grid = k_grid(o.k_list);
  cfg.horizon = o.horizon;
  cfg.replicas = o.replicas ? o.replicas : 1000;
  cfg.theta_replicas = o.theta_replicas;
  cfg.seed = o.seed;
  cfg.workers = resolve_workers(o.workers);
  cfg.cftp = cftp_config(o);
  cfg.partition = o.partition;
  cfg.empirical = empirical;
  const DbarReport rep = report(kernel, cfg);
  Sink sink(o.out);
  write_report_csv(rep, sink.os());
  if (rep.any_violation()) {
    std::cerr << "bound violated beyond its confidence interval\n";
    return 2;
  }
  return 0;
}

int run_hoc(const Options& o) {
  const HocSpec spec = HocSpec::parse(o.r);
  const std::size_t kmax = o.kmax;
  const Eigen::VectorXd v = vk_dp(spec, std::max<std::size_t>(kmax, 64));
  std::vector<McEstimate> mc;
  if (o.replicas) mc = vk_mc(spec, kmax, o.replicas, o.seed, resolve_workers(o.workers));

  // bound_i: exponential family, C_r = c unless --cr is given.
  double c_r = o.c_r, rho = 0.0;
  bool exp_ok = false;
  if (spec.family() == HocSpec::Family::exponential) {
    rho = spec.params()[1];
    if (c_r <= 0.0) c_r = spec.params()[0];
    exp_ok = c_r > 0.0 && c_r < std::log(1.0 / rho);
  }
  const bool summable = spec.summable();
  const bool harmonic = spec.family() == HocSpec::Family::harmonic && spec.params()[0] < std::sqrt(2.0) - 1.0;
  const double C = harmonic ? calibrate_nonsummable_constant(v, spec.params()[0], 16, 64) : 0.0;

  Sink sink(o.out);
  auto& os = sink.os();
  os << "k,v_dp,v_comb,v_mc,ci,bound_i,bound_ii,bound_iii\n";
  for (std::size_t k = 0; k <= kmax; ++k) {
    os << k << ',' << fmt(v(static_cast<Eigen::Index>(k))) << ',';
    os << (k <= 20 ? fmt(vk_combinatorial(spec, k)) : "NA") << ',';
    if (!mc.empty())
      os << fmt(mc[k].mean) << ',' << fmt(3.0 * mc[k].sigma) << ',';
    else
      os << "NA,NA,";
    os << (exp_ok ? fmt(bound_exponential(c_r, rho, k)) : "NA") << ',';
    os << (summable && k >= 1 ? fmt(bound_summable_generic(spec, k).value) : "NA") << ',';
    os << (harmonic && k >= 2 ? fmt(bound_nonsummable(spec.params()[0], k, C)) : "NA") << '\n';
  }
  return 0;
}

int run_conc(const Options& o) {
  const auto alphas = parse_double_list(o.alpha);
  std::vector<std::size_t> ns;
  for (long n : parse_int_list(o.n_list)) {
    if (n < 1) throw Error("n must be >= 1");
    ns.push_back(static_cast<std::size_t>(n));
  }
  if (o.side != "upper" && o.side != "lower") throw Error("--side must be upper or lower");
  const bool upper = o.side == "upper";
  Sink sink(o.out);
  auto& os = sink.os();
  os << "alpha,n,x,exact,chernoff,ratio\n";
  for (double a : alphas) {
    for (std::size_t n : ns) {
      std::vector<double> xs = o.x_list.empty() ? std::vector<double>{} : parse_double_list(o.x_list);
      if (xs.empty()) {
        // 20 points spanning the informative range of each tail
        const double top = upper ? 4.0 / a : 1.0 / a - 1.0;
        for (int j = 1; j <= 20; ++j) xs.push_back(top * j / 20.0);
      }
      for (double x : xs) {
        const double nn = static_cast<double>(n);
        const double exact = upper ? exact_tail(a, n, nn * (1.0 / a + x)) : exact_lower_tail(a, n, nn * (1.0 / a - x));
        const double bound = upper ? chernoff_upper(a, n, x) : chernoff_lower(a, n, x);
        os << fmt(a) << ',' << n << ',' << fmt(x) << ',' << fmt(exact) << ',' << fmt(bound) << ','
           << (exact > 0.0 ? fmt(bound / exact) : std::string("NA")) << '\n';
      }
    }
  }
  return 0;
}

int run_selftest(const Options& o) {
  int failed = 0;
  auto check = [&](const std::string& name, bool ok) {
    std::cout << "selftest " << name << ' ' << (ok ? "PASS" : "FAIL") << '\n';
    failed += !ok;
  };
  const auto ph = philox4x32({0, 0, 0, 0}, {0, 0});
  check("philox_known_answer", ph[0] == 0x6627e8d5u && ph[1] == 0xe169c58du && ph[2] == 0xbc57ac4cu &&
                                   ph[3] == 0x9b00dbd8u);
  {
    const auto spec = HocSpec::list({0.5, 0.5}, 0.5);
    check("hoc_dp_vs_compositions", std::abs(vk_dp(spec, 2)(2) - vk_combinatorial(spec, 2)) < 1e-15);
  }
  {
    const Kernel k = load_kernel("markov1");
    const auto part = make_partition(k, "canonical");
    check("markov_k_ge_order_zero_disagreement",
          estimate_dbar(*part, 1, 200, 50, o.seed, resolve_workers(o.workers)).disagreements == 0);
  }
  {
    bool ok = true;
    for (const auto& name : builtin_kernel_names()) {
      const Kernel k = load_kernel(name);
      const auto part = make_partition(k, "auto");
      const auto probes = probe_pasts(k.alphabet_size(), o.seed);
      for (std::uint64_t s = 0; s < 5; ++s) {
        const UniformStream u(replica_seed(o.seed, s));
        try {
          reconstruct(*part, u, detect(*part, u).theta0, probes);
        } catch (const CoalescenceViolation&) {
          ok = false;
        }
      }
    }
    check("coalescence_reconstruction", ok);
  }
  check("chernoff_dominates_exact", chernoff_upper(0.5, 10, 1.0) >= exact_tail(0.5, 10, 30.0));
  return failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"infinichain: perfect simulation and d-bar bounds for chains of infinite order"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "base seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--workers", o.workers, "worker threads (INFINICHAIN_WORKERS otherwise)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output CSV (stdout when omitted)");
  };
  auto add_kernel = [&](CLI::App* sub) {
    sub->add_option("--kernel", o.kernel, "builtin kernel name or kernel file");
    sub->add_option("--partition", o.partition, "canonical | renewal | auto")
        ->check(CLI::IsMember({"canonical", "renewal", "auto"}));
    sub->add_option("--window-cap", o.window_cap, "CFTP search depth")->check(CLI::PositiveNumber);
  };

  auto* sample = app.add_subcommand("sample", "perfect samples at times -(n-1)..0");
  add_common(sample);
  add_kernel(sample);
  sample->add_option("--n", o.steps, "trajectory length")->check(CLI::PositiveNumber);
  sample->add_option("--replicas", o.replicas, "number of trajectories")->check(CLI::PositiveNumber);

  auto* couple = app.add_subcommand("couple", "coupled traces of X and X^[k]");
  add_common(couple);
  add_kernel(couple);
  couple->add_option("--k", o.k_list, "truncation order");
  couple->add_option("--horizon", o.horizon, "sites per trace")->check(CLI::PositiveNumber);
  couple->add_option("--replicas", o.replicas, "number of traces")->check(CLI::PositiveNumber);

  CLI::App* reports[2];
  reports[0] = app.add_subcommand("dbar", "empirical d-bar against every applicable bound");
  reports[1] = app.add_subcommand("bounds", "theoretical bounds only");
  for (auto* sub : reports) {
    add_common(sub);
    add_kernel(sub);
    sub->add_option("--k", o.k_list, "k grid, comma separated");
    sub->add_option("--horizon", o.horizon, "sites per coupled window")->check(CLI::PositiveNumber);
    sub->add_option("--replicas", o.replicas, "coupled windows per k")->check(CLI::PositiveNumber);
    sub->add_option("--theta-replicas", o.theta_replicas, "CFTP replicas for E|theta|")
        ->check(CLI::PositiveNumber);
  }

  auto* hoc = app.add_subcommand("hoc", "house-of-cards v_k and its bounds");
  add_common(hoc);
  hoc->add_option("--r", o.r, "const:r | exp:c,rho | harmonic:r | pow:c,zeta | list:a,b;tail");
  hoc->add_option("--kmax", o.kmax, "largest k");
  hoc->add_option("--replicas", o.replicas, "Monte Carlo paths (0 = none)");
  hoc->add_option("--cr", o.c_r, "C_r of the exponential bound (defaults to c)");

  auto* conc = app.add_subcommand("conc", "geometric-sum tails against the Chernoff bounds");
  add_common(conc);
  conc->add_option("--alpha", o.alpha, "alpha list");
  conc->add_option("--n", o.n_list, "n list");
  conc->add_option("--x", o.x_list, "deviation list (default: 20-point grid)");
  conc->add_option("--side", o.side, "upper | lower")->check(CLI::IsMember({"upper", "lower"}));

  auto* selftest = app.add_subcommand("selftest", "quick internal checks");
  add_common(selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*sample) return run_sample(o);
    if (*couple) return run_couple(o);
    if (*reports[0]) return run_report(o, true);
    if (*reports[1]) return run_report(o, false);
    if (*hoc) return run_hoc(o);
    if (*conc) return run_conc(o);
    if (*selftest) return run_selftest(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: bad number: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
