#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "riverweb/lattice_field.hpp"

namespace riverweb {

__extension__ typedef unsigned __int128 uint128;

/// Explicit random stream for the samplers. Only the raw 64-bit output of
/// std::mt19937_64 is used (its sequence is fixed by the standard); the
/// derived draws below are implemented here so results do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on {0, ..., n-1}, unbiased (Lemire's multiply-and-reject).
  std::uint64_t below(std::uint64_t n) {
    uint128 m = static_cast<uint128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<uint128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Fair +-1 steps drawn 64 at a time.
  int sign() {
    if (bits_left_ == 0) {
      bits_ = next();
      bits_left_ = 64;
    }
    const int s = (bits_ & 1U) ? 1 : -1;
    bits_ >>= 1;
    --bits_left_;
    return s;
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t bits_ = 0;
  int bits_left_ = 0;
};

/// FNV-1a of a stream label.
constexpr std::uint64_t label_hash(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of replica `index` of stream `label` under `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) noexcept {
  return mix64(mix64(master ^ label_hash(label)) + mix64(index + 0x2545f4914f6cdd1dULL));
}

}  // namespace riverweb
