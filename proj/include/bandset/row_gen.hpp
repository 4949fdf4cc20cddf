#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "bandset/bitkit.hpp"
#include "bandset/murmur3.hpp"

// Keys to band rows: a seeded 128-bit hash gives the start (high word)
// and the pattern (low word, plus extra hashes when L > 64).
namespace bandset {

struct HashSeed {
  std::uint64_t base_seed = 0;
  std::uint16_t retry = 0;

  friend bool operator==(const HashSeed&, const HashSeed&) = default;
};

struct RowParams {
  std::uint64_t n;
  std::size_t block_len;
};

struct KeyRow {
  std::uint64_t start;  // in [1, n]
  bitkit::Block pattern;
};

// floor(h * n / 2^64): monotone in h, result in [0, n).
constexpr std::uint64_t map_to_range(std::uint64_t h, std::uint64_t n) noexcept {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(h) * n) >> 64);
}

// Row-domain hash of a key.
Hash128 hash128(std::string_view key, HashSeed seed) noexcept;

// Chunk-domain hash; independent of every row-domain stream. Its high
// word selects the chunk, the full value orders keys inside a chunk.
Hash128 chunk_hash(std::string_view key, std::uint64_t base_seed) noexcept;

std::uint64_t chunk_for_key(std::string_view key, std::uint64_t base_seed,
                            std::uint64_t num_chunks);

// Writes the pattern into `pattern_words` (ceil(L/64) words) and returns
// the start. Allocation free; used on the query path.
std::uint64_t row_for_key_into(std::string_view key, HashSeed seed, RowParams p,
                               bool force_leading_one, std::span<bitkit::Word> pattern_words);

KeyRow row_for_key(std::string_view key, HashSeed seed, RowParams p,
                   bool force_leading_one = false);

}  // namespace bandset
