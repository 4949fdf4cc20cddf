#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bandset/errors.hpp"

// Word-packed bit vectors. Bit j lives in bit (j mod 64) of word j / 64
// (LSB-first), and bits past the logical length are always zero.
namespace bandset::bitkit {

using Word = std::uint64_t;
inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for(std::size_t bits) noexcept {
  return (bits + kWordBits - 1) / kWordBits;
}

constexpr Word low_mask(std::size_t bits) noexcept {
  return bits >= kWordBits ? ~Word{0} : (Word{1} << bits) - 1;
}

inline bool parity(Word w) noexcept { return (std::popcount(w) & 1) != 0; }

// A probe is any callable taking the index of a storage word that an
// operation reads. The default one compiles away.
struct NullProbe {
  constexpr void operator()(std::size_t) const noexcept {}
};

// Records every word index handed to it; used to check the
// contiguous-window access contract.
class CountingProbe {
 public:
  void operator()(std::size_t word) { touched_.push_back(word); }

  std::size_t count() const noexcept { return touched_.size(); }
  // True when the touched indices form one run of consecutive words,
  // each touched once.
  bool contiguous() const noexcept;
  void reset() noexcept { touched_.clear(); }
  const std::vector<std::size_t>& touched() const noexcept { return touched_; }

 private:
  std::vector<std::size_t> touched_;
};

// Non-owning view of an L-bit block.
class BlockView {
 public:
  constexpr BlockView() = default;
  constexpr BlockView(std::span<const Word> words, std::size_t bits) noexcept
      : words_(words), bits_(bits) {}

  constexpr std::size_t size() const noexcept { return bits_; }
  constexpr std::span<const Word> words() const noexcept { return words_; }
  bool test(std::size_t i) const noexcept {
    return (words_[i / kWordBits] >> (i % kWordBits)) & 1;
  }
  bool none() const noexcept;

 private:
  std::span<const Word> words_;
  std::size_t bits_ = 0;
};

// Exactly L bits, canonical padding.
class Block {
 public:
  Block() = default;
  explicit Block(std::size_t bits) : words_(words_for(bits), 0), bits_(bits) {}

  static Block from_word(Word w, std::size_t bits);
  // Character i of `bits` ('0' or '1') becomes bit i.
  static Block from_string(std::string_view bits);

  std::size_t size() const noexcept { return bits_; }
  bool test(std::size_t i) const noexcept { return view().test(i); }
  void set(std::size_t i, bool value = true) noexcept;
  bool none() const noexcept { return view().none(); }

  std::span<const Word> words() const noexcept { return words_; }
  std::span<Word> words() noexcept { return words_; }
  BlockView view() const noexcept { return {words_, bits_}; }
  operator BlockView() const noexcept { return view(); }

  std::string to_string() const;
  friend bool operator==(const Block&, const Block&) = default;

 private:
  std::vector<Word> words_;
  std::size_t bits_ = 0;
};

class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t bits) : words_(words_for(bits), 0), bits_(bits) {}

  static BitVec from_string(std::string_view bits);

  std::size_t size() const noexcept { return bits_; }
  bool test(std::size_t i) const noexcept {
    return (words_[i / kWordBits] >> (i % kWordBits)) & 1;
  }
  void set(std::size_t i, bool value = true) noexcept {
    const Word bit = Word{1} << (i % kWordBits);
    if (value) {
      words_[i / kWordBits] |= bit;
    } else {
      words_[i / kWordBits] &= ~bit;
    }
  }
  void flip(std::size_t i) noexcept { words_[i / kWordBits] ^= Word{1} << (i % kWordBits); }

  std::span<const Word> words() const noexcept { return words_; }
  // Raw access for deserialization; caller must keep padding zero.
  std::span<Word> mutable_words() noexcept { return words_; }
  bool padding_is_zero() const noexcept;

  std::string to_string() const;
  friend bool operator==(const BitVec&, const BitVec&) = default;

 private:
  std::vector<Word> words_;
  std::size_t bits_ = 0;
};

namespace detail {

// Pattern bits aligned to storage word `first + k`, for a window whose
// first bit sits at bit `shift` of word `first`.
inline Word aligned_pattern_word(std::span<const Word> pattern, std::size_t k,
                                 unsigned shift) noexcept {
  Word w = k < pattern.size() ? pattern[k] << shift : 0;
  if (shift != 0 && k >= 1 && k - 1 < pattern.size()) {
    w |= pattern[k - 1] >> (kWordBits - shift);
  }
  return w;
}

void check_window(std::size_t offset, std::size_t len, std::size_t total, const char* op);

}  // namespace detail

// Parity of (storage window [offset, offset+L)) AND pattern. `storage`
// must hold at least `total_bits` bits. Each touched word is read once.
template <class Probe = NullProbe>
bool dot_window(std::span<const Word> storage, std::size_t total_bits, std::size_t offset,
                BlockView pattern, Probe&& probe = {}) {
  const std::size_t len = pattern.size();
  detail::check_window(offset, len, total_bits, "dot_window");
  if (len == 0) return false;
  const std::size_t first = offset / kWordBits;
  const std::size_t last = (offset + len - 1) / kWordBits;
  const auto shift = static_cast<unsigned>(offset % kWordBits);
  Word acc = 0;
  for (std::size_t k = 0; k <= last - first; ++k) {
    probe(first + k);
    acc ^= storage[first + k] & detail::aligned_pattern_word(pattern.words(), k, shift);
  }
  return parity(acc);
}

template <class Probe = NullProbe>
bool dot_window(const BitVec& z, std::size_t offset, BlockView pattern, Probe&& probe = {}) {
  return dot_window(z.words(), z.size(), offset, pattern, std::forward<Probe>(probe));
}

// dst[offset, offset+L) ^= src. Other bits are untouched.
template <class Probe = NullProbe>
void xor_window(std::span<Word> storage, std::size_t total_bits, std::size_t offset,
                BlockView src, Probe&& probe = {}) {
  const std::size_t len = src.size();
  detail::check_window(offset, len, total_bits, "xor_window");
  if (len == 0) return;
  const std::size_t first = offset / kWordBits;
  const std::size_t last = (offset + len - 1) / kWordBits;
  const auto shift = static_cast<unsigned>(offset % kWordBits);
  for (std::size_t k = 0; k <= last - first; ++k) {
    probe(first + k);
    storage[first + k] ^= detail::aligned_pattern_word(src.words(), k, shift);
  }
}

template <class Probe = NullProbe>
void xor_window(BitVec& dst, std::size_t offset, BlockView src, Probe&& probe = {}) {
  xor_window(dst.mutable_words(), dst.size(), offset, src, std::forward<Probe>(probe));
}

// Least index >= from holding a one, scanning a word at a time.
std::optional<std::size_t> first_one(BlockView b, std::size_t from = 0);

// dst ^= (src >> shift) over dst.size() words; bits shifted in from past
// the end of src are zero.
void xor_shifted_down(std::span<Word> dst, std::span<const Word> src, std::size_t shift) noexcept;

}  // namespace bandset::bitkit
