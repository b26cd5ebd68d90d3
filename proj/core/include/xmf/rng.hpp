#pragma once

#include <cstdint>
#include <random>

namespace xmf {

// SplitMix64 finalizer over (run seed, item index). Used to derive per-item
// seeds so a batch produces the same records regardless of worker count.
std::uint64_t mix_seed(std::uint64_t run_seed, std::uint64_t item_index);

// Deterministic across standard libraries: std::mt19937_64 is fully
// specified, and the conversions below avoid the implementation-defined
// std::*_distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo == hi ? lo : lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace xmf
