#pragma once

#include <cstdint>
#include <string_view>

namespace bandset {

struct Hash128 {
  std::uint64_t high;  // first output word of the reference function
  std::uint64_t low;   // second output word

  friend auto operator<=>(const Hash128&, const Hash128&) = default;
};

// MurmurHash3_x64_128 with both lanes initialised from a 64-bit seed.
// For seeds below 2^32 the result equals the reference implementation.
Hash128 murmur3_x64_128(std::string_view key, std::uint64_t seed) noexcept;

// MurmurHash3's 64-bit finaliser.
constexpr std::uint64_t fmix64(std::uint64_t k) noexcept {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

}  // namespace bandset
