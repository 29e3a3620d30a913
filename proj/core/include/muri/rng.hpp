// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "muri/hash.hpp"

namespace muri {

/// Seeded generator with portable derived distributions.
///
/// std::uniform_int_distribution and friends are implementation-defined, so
/// two standard libraries can draw different values from the same engine
/// state. Everything that must be reproducible across toolchains draws
/// through this wrapper instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform real in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool coin() { return (next() >> 63) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Seed for an independent sub-stream keyed by a label.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  return hash_combine(mix64(base), hash64(label));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t label) {
  return hash_combine(mix64(base), mix64(label));
}

}  // namespace muri
