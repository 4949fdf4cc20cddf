#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bandset/bitkit.hpp"
#include "bandset/retrieval_common.hpp"
#include "bandset/retrieval_flat.hpp"
#include "bandset/row_gen.hpp"

namespace bandset {

struct ChunkedParams {
  double epsilon = 0.05;
  std::size_t block_len = 64;
  unsigned value_bits = 1;
  std::uint64_t chunk_size = 10'000;
  unsigned max_retries = 64;
  std::uint64_t base_seed = 0;
  bool force_leading_one = false;
  // construction only; not part of the stored structure
  unsigned threads = 1;

  void validate() const;
};

// Per-chunk table offsets (in bits, into the concatenated planes) and
// winning retry values. In memory each entry packs offset << 16 | seed
// into one word, so a lookup reads entries k and k+1 and nothing else.
class ChunkDirectory {
 public:
  static constexpr std::uint64_t kMaxOffset = std::uint64_t{1} << 48;

  ChunkDirectory() = default;
  // offsets has one more entry than seeds; throws ContractViolation when
  // offsets are not strictly increasing from 0 or exceed kMaxOffset.
  ChunkDirectory(std::span<const std::uint64_t> offsets, std::span<const std::uint16_t> seeds);

  std::size_t num_chunks() const noexcept { return entries_.empty() ? 0 : entries_.size() - 1; }
  std::uint64_t offset(std::size_t k) const noexcept { return entries_[k] >> 16; }
  std::uint16_t seed(std::size_t k) const noexcept {
    return static_cast<std::uint16_t>(entries_[k] & 0xffff);
  }
  std::uint64_t chunk_bits(std::size_t k) const noexcept { return offset(k + 1) - offset(k); }
  std::uint64_t total_bits() const noexcept { return entries_.empty() ? 0 : offset(num_chunks()); }

  std::vector<std::uint64_t> offsets() const;
  std::vector<std::uint16_t> seeds() const;

  struct Entry {
    std::uint64_t offset;
    std::uint64_t bits;
    std::uint16_t seed;
  };
  template <class Probe>
  Entry lookup(std::size_t k, Probe&& probe) const noexcept {
    probe(k);
    const std::uint64_t here = entries_[k];
    probe(k + 1);
    const std::uint64_t next = entries_[k + 1];
    return {here >> 16, (next >> 16) - (here >> 16), static_cast<std::uint16_t>(here & 0xffff)};
  }

  friend bool operator==(const ChunkDirectory&, const ChunkDirectory&) = default;

 private:
  std::vector<std::uint64_t> entries_;
};

class ChunkedRetrieval {
 public:
  ChunkedRetrieval(ChunkedParams params, std::uint64_t m, ChunkDirectory directory,
                   std::vector<bitkit::BitVec> planes);

  const ChunkedParams& params() const noexcept { return params_; }
  std::uint64_t size() const noexcept { return m_; }
  const ChunkDirectory& directory() const noexcept { return directory_; }
  const std::vector<bitkit::BitVec>& planes() const noexcept { return planes_; }
  std::size_t num_chunks() const noexcept { return directory_.num_chunks(); }

  // Positions n_k of chunk k (its table holds n_k + L - 1 bits).
  std::uint64_t chunk_positions(std::size_t k) const noexcept {
    return directory_.chunk_bits(k) - (params_.block_len - 1);
  }

  // `directory_probe(entry)` sees each directory word read,
  // `plane_probe(plane, word)` each table word read.
  template <class DirProbe, class PlaneProbe>
  std::uint64_t query_probed(std::string_view key, DirProbe&& directory_probe,
                             PlaneProbe&& plane_probe) const {
    const std::size_t chunk = chunk_for_key(key, params_.base_seed, num_chunks());
    const auto entry = directory_.lookup(chunk, directory_probe);
    const std::uint64_t n = entry.bits - (params_.block_len - 1);
    std::array<bitkit::Word, bitkit::words_for(kMaxBlockLen)> buf{};
    const std::span<bitkit::Word> pattern(buf.data(), bitkit::words_for(params_.block_len));
    const std::uint64_t start =
        row_for_key_into(key, HashSeed{params_.base_seed, entry.seed}, {n, params_.block_len},
                         params_.force_leading_one, pattern);
    const bitkit::BlockView block(pattern, params_.block_len);
    std::uint64_t value = 0;
    for (unsigned t = 0; t < params_.value_bits; ++t) {
      const bool bit = bitkit::dot_window(planes_[t], entry.offset + start - 1, block,
                                          [&](std::size_t w) { plane_probe(t, w); });
      value |= std::uint64_t{bit} << t;
    }
    return value;
  }

  std::uint64_t query(std::string_view key) const {
    return query_probed(key, bitkit::NullProbe{}, [](unsigned, std::size_t) {});
  }

  // Number of chunks whose winning retry equals the index.
  std::vector<std::uint64_t> retry_histogram() const;

  friend bool operator==(const ChunkedRetrieval& a, const ChunkedRetrieval& b);

 private:
  ChunkedParams params_;
  std::uint64_t m_;
  ChunkDirectory directory_;
  std::vector<bitkit::BitVec> planes_;
};

ChunkedRetrieval construct_chunked(std::span<const KeyValue> pairs, const ChunkedParams& params);

inline std::uint64_t query_chunked(const ChunkedRetrieval& ds, std::string_view key) {
  return ds.query(key);
}

// A flat structure as a one-chunk directory (chunk size = max(m, 1)).
ChunkedRetrieval embed_flat(const FlatRetrieval& flat);

// Stored bits (all planes plus 16-bit seeds and 64-bit offsets, header
// excluded) / (m r) - 1. Requires m >= 1.
double overhead(const ChunkedRetrieval& ds);

// Little-endian layout:
//   "BSET" | version u16 = 1 | flags u16 (bit 0: force_leading_one)
//   | r u16 | L u16 | epsilon f64 | C u64 | m u64 | num_chunks u64
//   | base_seed u64 | seeds u16[num_chunks] | offsets u64[num_chunks + 1]
//   | r planes, each ceil(total_bits / 64) words, LSB-first.
inline constexpr std::size_t kHeaderBytes = 52;
inline constexpr std::uint16_t kFormatVersion = 1;

std::vector<std::uint8_t> serialize(const ChunkedRetrieval& ds);
// Throws FormatError on bad magic, version, truncation, trailing bytes or
// any violated structural invariant.
ChunkedRetrieval deserialize(std::span<const std::uint8_t> bytes);

}  // namespace bandset
