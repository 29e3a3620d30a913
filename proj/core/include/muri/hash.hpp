// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace muri {

/// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Stable 64-bit byte-string hash (FNV-1a core, splitmix finalizer).
/// Output is identical across platforms and runs, which std::hash is not.
std::uint64_t hash64(std::string_view bytes, std::uint64_t seed = 0) noexcept;

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

/// Fixed-width lowercase hex, 16 characters.
std::string to_hex(std::uint64_t value);

}  // namespace muri
