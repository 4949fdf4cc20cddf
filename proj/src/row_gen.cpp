#include "bandset/row_gen.hpp"

#include "bandset/errors.hpp"

namespace bandset {

namespace {

enum Domain : std::uint64_t {
  kRowDomain = 0,
  kChunkDomain = 1,
  // extra pattern words for L > 64 use kExtraDomain + k
  kExtraDomain = 2,
};

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint16_t retry,
                                    std::uint64_t domain) noexcept {
  return fmix64(base ^ fmix64(((domain << 16) | retry) + kGolden));
}

}  // namespace

Hash128 hash128(std::string_view key, HashSeed seed) noexcept {
  return murmur3_x64_128(key, derive_seed(seed.base_seed, seed.retry, kRowDomain));
}

Hash128 chunk_hash(std::string_view key, std::uint64_t base_seed) noexcept {
  return murmur3_x64_128(key, derive_seed(base_seed, 0, kChunkDomain));
}

std::uint64_t chunk_for_key(std::string_view key, std::uint64_t base_seed,
                            std::uint64_t num_chunks) {
  if (num_chunks == 0) throw ContractViolation("chunk_for_key: num_chunks must be >= 1");
  return map_to_range(chunk_hash(key, base_seed).high, num_chunks);
}

std::uint64_t row_for_key_into(std::string_view key, HashSeed seed, RowParams p,
                               bool force_leading_one, std::span<bitkit::Word> pattern_words) {
  const Hash128 h = hash128(key, seed);
  const std::size_t words = pattern_words.size();
  pattern_words[0] = h.low;
  for (std::size_t k = 1; k < words; k += 2) {
    const Hash128 extra =
        murmur3_x64_128(key, derive_seed(seed.base_seed, seed.retry, kExtraDomain + k / 2));
    pattern_words[k] = extra.high;
    if (k + 1 < words) pattern_words[k + 1] = extra.low;
  }
  pattern_words[words - 1] &= bitkit::low_mask(p.block_len - (words - 1) * bitkit::kWordBits);
  if (force_leading_one) pattern_words[0] |= 1;
  return 1 + map_to_range(h.high, p.n);
}

KeyRow row_for_key(std::string_view key, HashSeed seed, RowParams p, bool force_leading_one) {
  if (p.n == 0 || p.block_len == 0) {
    throw ContractViolation("row_for_key: n and L must be at least 1");
  }
  KeyRow row{0, bitkit::Block(p.block_len)};
  row.start = row_for_key_into(key, seed, p, force_leading_one, row.pattern.words());
  return row;
}

}  // namespace bandset
