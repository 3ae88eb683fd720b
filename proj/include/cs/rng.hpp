#pragma once

#include <cstdint>

#include "cs/normal.hpp"

// Counter-based random number generation: every (seed, sample, slot) triple
// names an independent stream, so ensembles are reproducible regardless of
// evaluation order and can be partitioned across workers without coupling.
// Slot convention used by the validators: slot 0 draws the initial state,
// slot 1 + k draws the step-k process noise.

namespace cs {

class CounterRng {
 public:
  explicit CounterRng(uint64_t key) : key_(key) {}

  static uint64_t mix(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static uint64_t derive_key(uint64_t seed, uint64_t sample, uint64_t slot) {
    return mix(mix(mix(seed) ^ sample) ^ (slot * 0xD1B54A32D192ED03ull));
  }

  // Uniform on the open interval (0, 1).
  double uniform() {
    uint64_t v = mix(key_ + (++ctr_) * 0x9E3779B97F4A7C15ull);
    return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return norm_quantile(uniform()); }

 private:
  uint64_t key_;
  uint64_t ctr_ = 0;
};

}  // namespace cs
