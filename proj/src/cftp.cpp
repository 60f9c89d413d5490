#include "infinichain/cftp.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include "infinichain/errors.hpp"

namespace infinichain {

namespace {

constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max() / 4;
constexpr std::int64_t kNotFound = std::numeric_limits<std::int64_t>::min();
constexpr std::int64_t kImpossible = std::numeric_limits<std::int64_t>::min() + 1;

// First k with u < alpha_k, kNever if u is above the whole sequence.
std::int64_t need_from_alpha(const Eigen::VectorXd& alpha, double u) {
  for (Eigen::Index k = 0; k < alpha.size(); ++k)
    if (u < alpha(k)) return k;
  return kNever;
}

// Largest m in [bottom, lower] with m <= j - need(j) for every j in [m, top].
template <class Need>
std::int64_t scan_window(std::int64_t top, std::int64_t lower, std::int64_t bottom, Need&& need) {
  std::int64_t run = std::numeric_limits<std::int64_t>::max();
  for (std::int64_t i = top; i >= bottom; --i) {
    const std::int64_t n = need(i);
    if (n >= kNever) return kImpossible;
    run = std::min(run, i - n);
    if (i <= lower && i <= run) return i;
  }
  return kNotFound;
}

// Doubling search below `lower`; never looks below `floor`.
template <class Need>
std::pair<std::int64_t, std::int64_t> grow(std::int64_t top, std::int64_t lower, std::int64_t floor,
                                           const CftpConfig& cfg, Need&& need) {
  for (std::int64_t w = std::max<std::int64_t>(1, cfg.initial_window);; w *= 2) {
    const std::int64_t bottom = std::max(floor, lower - w + 1);
    const std::int64_t r = scan_window(top, lower, bottom, need);
    if (r == kImpossible) throw WindowCapExceeded(cfg.window_cap);
    if (r != kNotFound) return {r, lower - bottom + 1};
    if (bottom == floor) throw WindowCapExceeded(cfg.window_cap);
  }
}

}  // namespace

std::string to_string(Detector d) {
  switch (d) {
    case Detector::theta_prime: return "theta_prime";
    case Detector::vwnn_WYQ: return "vwnn_WYQ";
    case Detector::ell_based: return "ell_based";
    case Detector::renewal_last2: return "renewal_last2";
  }
  return "?";
}

Sample apply_update(const UpdateRule& rule, const Past& past, const UniformStream& u, std::int64_t m,
                    std::int64_t n) {
  if (m > n) throw Error("apply_update needs m <= n");
  Sample s;
  const auto len = static_cast<std::size_t>(n - m + 1);
  s.symbols.reserve(len);
  s.ranges.reserve(len);
  Past work = past;
  for (std::int64_t i = m; i <= n; ++i) {
    const Locate r = rule.try_locate(work, u(i));
    if (r.status != Locate::Status::found) {
      const int extra = r.needed - static_cast<int>(work.length());
      throw PastTooShort(extra, i);
    }
    s.symbols.push_back(r.lookup.symbol);
    s.ranges.push_back(r.lookup.range);
    work.push(r.lookup.symbol);
  }
  return s;
}

CoalescenceResult theta_prime(const RangePartition& partition, const UniformStream& u,
                              const CftpConfig& cfg, std::int64_t lower) {
  const std::int64_t floor = lower - cfg.window_cap + 1;
  if (const auto* rp = dynamic_cast<const RenewalPartition*>(&partition)) {
    const double a2 = rp->alpha2();
    for (std::int64_t w = std::max<std::int64_t>(1, cfg.initial_window);; w *= 2) {
      const std::int64_t bottom = std::max(floor, lower - w + 1);
      for (std::int64_t i = lower; i >= bottom; --i)
        if (u(i) < a2) return {i, Detector::renewal_last2, lower - bottom + 1, i};
      if (bottom == floor) throw WindowCapExceeded(cfg.window_cap);
    }
  }
  const auto& kernel = partition.kernel();
  Eigen::VectorXd alpha;
  if (const auto ord = kernel.order()) {
    alpha = alpha_seq(kernel, static_cast<std::size_t>(*ord)).values;
  } else {
    // Renewal under I^(1): alpha_k settles once k passes the periodic head.
    alpha = alpha_seq(kernel, kernel.renewal_head_size() + 1).values;
  }
  const auto [theta, window] =
      grow(0, lower, floor, cfg, [&](std::int64_t i) { return need_from_alpha(alpha, u(i)); });
  return {theta, Detector::theta_prime, window, theta};
}

std::size_t kstar(const Kernel& kernel) {
  const auto ord = kernel.order();
  const std::size_t kmax = ord ? static_cast<std::size_t>(*ord) : kernel.renewal_head_size() + 1;
  const auto a = alpha_seq(kernel, kmax);
  for (std::size_t k = 0; k <= kmax; ++k)
    if (a.values(static_cast<Eigen::Index>(k)) > 0.0) return k;
  throw InvalidKernel("alpha_k vanishes for every k");
}

bool in_coalescence_set(const CanonicalPartition& partition, std::size_t kst,
                        const std::vector<double>& block) {
  if (block.size() < kst + 1) return false;
  if (kst == 0) return true;
  const int n = partition.alphabet_size();
  const auto n_ctx = ipow(static_cast<std::uint64_t>(n), kst);
  std::vector<Symbol> first;
  for (std::uint64_t c = 0; c < n_ctx; ++c) {
    Past p = context_from_index(c, kst, n);
    for (double x : block) {
      const Locate r = partition.try_locate(p, x);
      if (r.status != Locate::Status::found)
        throw Error("F* step left the range-k* region");
      p.push(r.lookup.symbol);
    }
    auto tail = p.recent_first(kst);
    if (c == 0)
      first = std::move(tail);
    else if (tail != first)
      return false;
  }
  return true;
}

CoalescenceResult theta_vwnn(const CanonicalPartition& partition, const UniformStream& u,
                             const CftpConfig& cfg, std::int64_t lower) {
  const auto& kernel = partition.kernel();
  const auto ord = kernel.order();
  if (!ord) throw InvalidKernel("vwnn detector needs a finite-order kernel");
  const Eigen::VectorXd alpha = alpha_seq(kernel, static_cast<std::size_t>(*ord)).values;
  const std::size_t ks = kstar(kernel);
  const double ak = alpha(static_cast<Eigen::Index>(ks));
  const auto shift = static_cast<std::int64_t>(ks);
  const std::int64_t floor = lower - cfg.window_cap + 1;
  auto need = [&](std::int64_t i) {
    const std::int64_t n = need_from_alpha(alpha, u(i));
    return n >= kNever ? n : n - shift;
  };

  auto [w, window] = grow(0, lower, floor, cfg, need);
  for (;;) {
    if (ak >= 1.0) {
      // Runs below alpha_{k*} never end; test blocks directly below W.
      for (std::int64_t len = static_cast<std::int64_t>(ks) + 1; w - len - 1 >= floor; ++len) {
        std::vector<double> block;
        for (std::int64_t j = w - len; j < w; ++j) block.push_back(u(j));
        if (in_coalescence_set(partition, ks, block))
          return {w - len - 1, Detector::vwnn_WYQ, lower - (w - len - 1) + 1, w - shift};
      }
      throw WindowCapExceeded(cfg.window_cap);
    }
    std::int64_t y = w;
    while (u(y) < ak) {
      if (--y < floor) throw WindowCapExceeded(cfg.window_cap);
    }
    if (w - y - 1 >= shift + 1) {
      std::vector<double> block;
      for (std::int64_t j = y + 1; j < w; ++j) block.push_back(u(j));
      if (in_coalescence_set(partition, ks, block))
        return {y, Detector::vwnn_WYQ, lower - y + 1, w - shift};
    }
    if (y - 1 < floor) throw WindowCapExceeded(cfg.window_cap);
    std::tie(w, window) = grow(y, y, floor, cfg, need);
  }
}

std::int64_t ell_value(const Kernel& renewal, const UniformStream& u, std::int64_t i, std::int64_t cap) {
  const double a1 = 1.0 - renewal.p_sup_from(0);
  const double a0 = a1 + renewal.p_inf_from(0);
  const double x = u(i);
  if (x < a0) return 0;
  std::int64_t n_mark = -1;
  for (std::int64_t n = 1; n <= cap; ++n) {
    const double v = u(i - n);
    if (v >= a1 && v < a0) {
      n_mark = n;
      break;
    }
  }
  const std::int64_t limit = n_mark > 0 ? n_mark - 1 : cap;
  const std::size_t head = renewal.renewal_head_size();
  for (std::int64_t m = 1; m <= limit; ++m) {
    if (x < renewal_alpha(renewal, static_cast<std::size_t>(m))) return m;
    if (static_cast<std::size_t>(m) > head) break;  // alpha_m is constant from here on
  }
  return n_mark;
}

CoalescenceResult theta_ell(const CanonicalPartition& partition, const UniformStream& u,
                            const CftpConfig& cfg, std::int64_t lower) {
  const auto& kernel = partition.kernel();
  if (kernel.family() != Kernel::Family::renewal) throw InvalidKernel("ell detector needs a renewal kernel");
  const std::int64_t floor = lower - cfg.window_cap + 1;
  const auto [theta, window] = grow(0, lower, floor, cfg, [&](std::int64_t i) {
    const std::int64_t e = ell_value(kernel, u, i, cfg.window_cap);
    return e < 0 ? kNever : e;
  });
  return {theta, Detector::ell_based, window, theta};
}

Detector default_detector(const RangePartition& partition) {
  if (dynamic_cast<const RenewalPartition*>(&partition)) return Detector::renewal_last2;
  const auto& kernel = partition.kernel();
  if (kernel.family() == Kernel::Family::renewal) return Detector::ell_based;
  return kstar(kernel) == 0 ? Detector::theta_prime : Detector::vwnn_WYQ;
}

CoalescenceResult detect(const RangePartition& partition, const UniformStream& u, const CftpConfig& cfg,
                         std::int64_t lower) {
  switch (default_detector(partition)) {
    case Detector::renewal_last2:
    case Detector::theta_prime: return theta_prime(partition, u, cfg, lower);
    case Detector::ell_based:
      return theta_ell(dynamic_cast<const CanonicalPartition&>(partition), u, cfg, lower);
    case Detector::vwnn_WYQ:
      return theta_vwnn(dynamic_cast<const CanonicalPartition&>(partition), u, cfg, lower);
  }
  throw Error("no detector");
}

std::vector<Past> probe_pasts(int alphabet, std::uint64_t seed, int n_random) {
  const UniformStream s(seed, 7);
  std::vector<Past> out;
  std::int64_t idx = 0;
  auto draw = [&] { return static_cast<Symbol>(s(idx++) * alphabet) + 1; };
  for (int r = 0; r < n_random; ++r) {
    std::vector<Symbol> v(64);
    for (auto& x : v) x = draw();
    const Symbol fill = draw();
    out.push_back(Past::from_chronological(std::move(v), fill));
  }
  out.push_back(Past::constant(1));
  out.push_back(Past::constant(alphabet));
  return out;
}

Reconstruction reconstruct(const UpdateRule& rule, const UniformStream& u, std::int64_t theta0,
                           const std::vector<Past>& probes, std::int64_t end) {
  if (probes.empty()) throw Error("reconstruct needs at least one probe past");
  Reconstruction rec;
  rec.theta0 = theta0;
  rec.agree_from = theta0;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    Sample s = apply_update(rule, probes[p], u, theta0, end);
    if (p == 0) {
      rec.symbols = std::move(s.symbols);
      continue;
    }
    if (s.symbols.back() != rec.symbols.back())
      throw CoalescenceViolation("probe pasts disagree at time " + std::to_string(end) + " from theta " +
                                 std::to_string(theta0));
    for (std::size_t j = s.symbols.size(); j-- > 0;) {
      if (s.symbols[j] != rec.symbols[j]) {
        rec.agree_from = std::max(rec.agree_from, theta0 + static_cast<std::int64_t>(j) + 1);
        break;
      }
    }
  }
  return rec;
}

namespace {
Past start_past(const CoalescenceResult& c) {
  return c.method == Detector::vwnn_WYQ ? Past::constant(1) : Past();
}
}  // namespace

std::vector<Symbol> perfect_trajectory(const RangePartition& partition, std::uint64_t seed,
                                       std::size_t n_steps, const CftpConfig& cfg) {
  if (n_steps == 0) return {};
  const UniformStream u(seed);
  const std::int64_t lower = -static_cast<std::int64_t>(n_steps) + 1;
  const CoalescenceResult c = detect(partition, u, cfg, lower);
  Sample s;
  try {
    s = apply_update(partition, start_past(c), u, c.theta0, 0);
  } catch (const PastTooShort& e) {
    throw CoalescenceViolation(std::string("detector window too short: ") + e.what());
  }
  return {s.symbols.end() - static_cast<std::ptrdiff_t>(n_steps), s.symbols.end()};
}

std::size_t CouplingTrace::disagreements() const {
  std::size_t d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d += x[i] != xk[i];
  return d;
}

CouplingTrace coupled_sample(const RangePartition& partition, const TruncatedPartition& truncated,
                             std::uint64_t seed, std::size_t n_steps, const CftpConfig& cfg) {
  if (n_steps == 0) throw Error("coupled_sample needs n_steps >= 1");
  const UniformStream u(seed);
  CouplingTrace t;
  t.seed = seed;
  t.k = truncated.k();
  t.first_time = -static_cast<std::int64_t>(n_steps) + 1;
  t.coalescence = detect(partition, u, cfg, t.first_time);
  Past px = start_past(t.coalescence);
  Past pk = px;
  t.x.reserve(n_steps);
  t.xk.reserve(n_steps);
  t.range.reserve(n_steps);
  t.range_k.reserve(n_steps);
  for (std::int64_t i = t.coalescence.theta0; i <= 0; ++i) {
    const double ui = u(i);
    const Locate a = partition.try_locate(px, ui);
    const Locate b = truncated.try_locate(pk, ui);
    if (a.status != Locate::Status::found || b.status != Locate::Status::found)
      throw CoalescenceViolation("coupled run unresolved at time " + std::to_string(i));
    px.push(a.lookup.symbol);
    pk.push(b.lookup.symbol);
    if (i < t.first_time) {
      t.max_range_before = std::max(t.max_range_before, a.lookup.range);
      continue;
    }
    t.x.push_back(a.lookup.symbol);
    t.xk.push_back(b.lookup.symbol);
    t.range.push_back(a.lookup.range);
    t.range_k.push_back(b.lookup.range);
  }
  return t;
}

void write_trace_csv(const std::vector<CouplingTrace>& traces, std::ostream& out) {
  out << "seed,i,x,xk,range,disagree\n";
  for (const auto& t : traces) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      out << t.seed << ',' << t.first_time + static_cast<std::int64_t>(j) << ',' << t.x[j] << ',' << t.xk[j]
          << ',';
      if (t.range[j] == kInfiniteRange)
        out << "inf";
      else
        out << t.range[j];
      out << ',' << (t.x[j] != t.xk[j] ? 1 : 0) << '\n';
    }
  }
}

}  // namespace infinichain
