#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bandset/bitkit.hpp"
#include "bandset/murmur3.hpp"
#include "bandset/retrieval_common.hpp"

namespace bandset::detail {

struct NormalizedPair {
  std::string_view key;
  std::uint64_t value;
  Hash128 id;  // chunk-domain hash
};

struct BuildParams {
  double epsilon;
  std::size_t block_len;
  unsigned value_bits;
  unsigned max_retries;
  std::uint64_t base_seed;
  bool force_leading_one;
};

void validate(const BuildParams& p);

// Sorts by chunk hash (then key), drops exact duplicates and throws
// ConstructError(kDuplicateKey) on a key mapped to two values.
std::vector<NormalizedPair> normalize_pairs(std::span<const KeyValue> pairs,
                                            const BuildParams& p);

struct ChunkTable {
  std::uint64_t n = 1;
  std::uint16_t retry = 0;
  std::vector<bitkit::BitVec> planes;  // r planes of n+L-1 bits
  std::uint64_t additions = 0;
};

// Tries retry = 0, 1, ... until the band system of `keys` is solvable.
// Keys must already be in normalized order. nullopt when every retry fails.
std::optional<ChunkTable> build_table(std::span<const NormalizedPair> keys, const BuildParams& p);

}  // namespace bandset::detail
