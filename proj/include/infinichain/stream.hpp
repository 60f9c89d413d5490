#pragma once

#include <array>
#include <cstdint>

namespace infinichain {

// Philox4x32-10 (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// U_i as a pure function of (seed, i). Re-reading an index never changes it,
// which is what lets a backward window grow without disturbing earlier draws.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed, std::uint32_t lane = 0)
      : seed_(seed), lane_(lane) {}

  double operator()(std::int64_t i) const {
    const auto u = static_cast<std::uint64_t>(i);
    const auto out = philox4x32({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(u >> 32),
                                 lane_, 0u},
                                {static_cast<std::uint32_t>(seed_),
                                 static_cast<std::uint32_t>(seed_ >> 32)});
    const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32 | out[1]) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  std::uint64_t seed() const { return seed_; }
  // Independent stream on the same seed, for auxiliary draws.
  UniformStream lane(std::uint32_t l) const { return UniformStream(seed_, l); }

 private:
  std::uint64_t seed_;
  std::uint32_t lane_;
};

// Derives the seed of replica r from a base seed (splitmix64 finalizer).
std::uint64_t replica_seed(std::uint64_t base, std::uint64_t r);

}  // namespace infinichain
