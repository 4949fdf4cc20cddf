#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "bandset/bitkit.hpp"

namespace bandset {

inline constexpr unsigned kMaxValueBits = 64;

struct BandRowView {
  std::uint64_t start;  // 1-based column of the block's first bit
  bitkit::BlockView pattern;
  std::uint64_t rhs;  // bit t is the right-hand side of bit-plane t
};

// m rows over columns [1, n+L-1]. Row i holds an L-bit pattern at columns
// [start_i, start_i+L-1] and r right-hand-side bits. Patterns are stored
// flat, ceil(L/64) words per row.
class BandSystem {
 public:
  BandSystem(std::uint64_t n, std::size_t block_len, unsigned value_bits);

  std::uint64_t n() const noexcept { return n_; }
  std::size_t block_len() const noexcept { return block_len_; }
  unsigned value_bits() const noexcept { return value_bits_; }
  std::size_t rows() const noexcept { return starts_.size(); }
  std::uint64_t columns() const noexcept { return n_ + block_len_ - 1; }
  std::size_t words_per_row() const noexcept { return words_per_row_; }

  void reserve(std::size_t m);
  void add_row(std::uint64_t start, bitkit::BlockView pattern, std::uint64_t rhs);

  BandRowView row(std::size_t i) const noexcept {
    return {starts_[i], pattern(i), rhs_[i]};
  }
  std::uint64_t start(std::size_t i) const noexcept { return starts_[i]; }
  std::uint64_t rhs(std::size_t i) const noexcept { return rhs_[i]; }
  bitkit::BlockView pattern(std::size_t i) const noexcept {
    return {std::span(patterns_).subspan(i * words_per_row_, words_per_row_), block_len_};
  }
  std::span<bitkit::Word> mutable_pattern(std::size_t i) noexcept {
    return std::span(patterns_).subspan(i * words_per_row_, words_per_row_);
  }
  std::uint64_t& mutable_rhs(std::size_t i) noexcept { return rhs_[i]; }

  // Copy of this system with rows taken in the order given.
  BandSystem permuted(std::span<const std::size_t> order) const;

 private:
  std::uint64_t n_;
  std::size_t block_len_;
  unsigned value_bits_;
  std::size_t words_per_row_;
  std::vector<std::uint64_t> starts_;
  std::vector<bitkit::Word> patterns_;
  std::vector<std::uint64_t> rhs_;
};

struct EliminationOutcome {
  // Rows after sorting and all row additions.
  BandSystem rows;
  // Pivot column (1-based) per sorted row; 0 for rows never pivoted.
  std::vector<std::uint64_t> pivots;
  std::uint64_t additions = 0;
  // Sorted index of the row that became zero, if elimination failed.
  std::optional<std::size_t> failed_row;
  // Per sorted row: bits at non-pivot window columns, left to right,
  // ending at the first 1. Filled only when requested.
  std::vector<std::vector<std::uint8_t>> coin_transcripts;

  bool success() const noexcept { return !failed_row.has_value(); }
};

struct SolutionTable {
  std::vector<bitkit::BitVec> planes;  // r planes of n+L-1 bits
  std::vector<std::uint64_t> pivots;
  std::uint16_t seed_hint = 0;
};

// Stable counting sort of rows by start over [1, n].
BandSystem sort_rows(const BandSystem& sys);
// Sorting permutation only: order[k] is the input index of sorted row k.
std::vector<std::size_t> sorted_order(const BandSystem& sys);

EliminationOutcome eliminate(const BandSystem& sys, bool record_coins = false);

// Throws ContractViolation on a failed outcome.
SolutionTable back_substitute(const EliminationOutcome& out);

// nullopt when the rows are linearly dependent.
std::optional<SolutionTable> solve(const BandSystem& sys);

bool verify(const BandSystem& original, const SolutionTable& table);

// GF(2) rank by dense elimination; requires n+L-1 <= 64.
std::size_t dense_rank(const BandSystem& sys);

// Random system with uniform starts in [1, n], uniform L-bit patterns and
// uniform r-bit right-hand sides.
template <class Rng>
BandSystem random_system(std::uint64_t n, std::size_t m, std::size_t block_len,
                         unsigned value_bits, Rng& rng, bool force_leading_one = false) {
  BandSystem sys(n, block_len, value_bits);
  sys.reserve(m);
  std::uniform_int_distribution<std::uint64_t> start_dist(1, n);
  std::uniform_int_distribution<bitkit::Word> word_dist;
  bitkit::Block pattern(block_len);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint64_t start = start_dist(rng);
    auto words = pattern.words();
    for (std::size_t w = 0; w < words.size(); ++w) {
      const std::size_t bits = std::min<std::size_t>(bitkit::kWordBits, block_len - w * 64);
      words[w] = word_dist(rng) & bitkit::low_mask(bits);
    }
    if (force_leading_one) pattern.set(0);
    const std::uint64_t rhs = word_dist(rng) & bitkit::low_mask(value_bits);
    sys.add_row(start, pattern, rhs);
  }
  return sys;
}

}  // namespace bandset
