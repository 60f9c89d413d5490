#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace infinichain {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

Interval wilson(std::uint64_t successes, std::uint64_t trials, double z);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;    // sample standard deviation
  double se = 0.0;    // sd / sqrt(n)
  std::size_t n = 0;
};
MeanSd mean_sd(std::span<const double> xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

// Worker count: explicit value if positive, else INFINICHAIN_WORKERS, else hardware threads.
unsigned resolve_workers(int requested);

// Calls fn(i) for i in [0, n) on `workers` threads, static contiguous blocks.
// Results must go to per-index slots so the merge order never depends on scheduling.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

// Decimal text for CSV cells, stable across platforms for identical doubles.
std::string fmt(double v);
std::vector<double> parse_double_list(const std::string& s);
std::vector<long> parse_int_list(const std::string& s);

}  // namespace infinichain
