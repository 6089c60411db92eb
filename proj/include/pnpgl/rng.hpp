#pragma once

#include <cstdint>

namespace pnpgl {

// Counter-based generator: the k-th output is the SplitMix64 finaliser applied
// to seed + k * 0x9E3779B97F4A7C15, so a stream is fully determined by
// (seed, k) on every platform. Normals use Box-Muller, consuming two uniforms
// per pair and returning both values in order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1].
  double uniform_open_zero();
  double normal();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent stream seed, e.g. per Monte-Carlo draw.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace pnpgl
