#include "bandset/bitkit.hpp"

#include <algorithm>
#include <string>

namespace bandset::bitkit {

bool CountingProbe::contiguous() const noexcept {
  for (std::size_t i = 1; i < touched_.size(); ++i) {
    if (touched_[i] != touched_[i - 1] + 1) return false;
  }
  return true;
}

bool BlockView::none() const noexcept {
  return std::all_of(words_.begin(), words_.end(), [](Word w) { return w == 0; });
}

Block Block::from_word(Word w, std::size_t bits) {
  if (bits == 0 || bits > kWordBits) {
    throw ContractViolation("Block::from_word: width must be in [1, 64]");
  }
  Block b(bits);
  b.words_[0] = w & low_mask(bits);
  return b;
}

Block Block::from_string(std::string_view bits) {
  Block b(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') {
      throw ContractViolation("Block::from_string: expected only '0' and '1'");
    }
    b.set(i, bits[i] == '1');
  }
  return b;
}

void Block::set(std::size_t i, bool value) noexcept {
  const Word bit = Word{1} << (i % kWordBits);
  if (value) {
    words_[i / kWordBits] |= bit;
  } else {
    words_[i / kWordBits] &= ~bit;
  }
}

std::string Block::to_string() const {
  std::string s(bits_, '0');
  for (std::size_t i = 0; i < bits_; ++i) {
    if (test(i)) s[i] = '1';
  }
  return s;
}

BitVec BitVec::from_string(std::string_view bits) {
  BitVec v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') {
      throw ContractViolation("BitVec::from_string: expected only '0' and '1'");
    }
    v.set(i, bits[i] == '1');
  }
  return v;
}

bool BitVec::padding_is_zero() const noexcept {
  if (words_.empty() || bits_ % kWordBits == 0) return true;
  return (words_.back() & ~low_mask(bits_ % kWordBits)) == 0;
}

std::string BitVec::to_string() const {
  std::string s(bits_, '0');
  for (std::size_t i = 0; i < bits_; ++i) {
    if (test(i)) s[i] = '1';
  }
  return s;
}

namespace detail {

void check_window(std::size_t offset, std::size_t len, std::size_t total, const char* op) {
  if (offset > total || len > total - offset) {
    throw ContractViolation(std::string(op) + ": window [" + std::to_string(offset) + ", " +
                            std::to_string(offset + len) + ") exceeds " +
                            std::to_string(total) + " bits");
  }
}

}  // namespace detail

std::optional<std::size_t> first_one(BlockView b, std::size_t from) {
  if (from > b.size()) {
    throw ContractViolation("first_one: start index past the block");
  }
  const auto words = b.words();
  std::size_t wi = from / kWordBits;
  if (wi >= words.size()) return std::nullopt;
  Word w = words[wi] & ~low_mask(from % kWordBits);
  while (true) {
    if (w != 0) {
      const std::size_t idx = wi * kWordBits + static_cast<std::size_t>(std::countr_zero(w));
      // padding is zero, so idx < size() always holds here
      return idx;
    }
    if (++wi == words.size()) return std::nullopt;
    w = words[wi];
  }
}

void xor_shifted_down(std::span<Word> dst, std::span<const Word> src, std::size_t shift) noexcept {
  const std::size_t ws = shift / kWordBits;
  const auto bs = static_cast<unsigned>(shift % kWordBits);
  for (std::size_t k = 0; k < dst.size(); ++k) {
    const std::size_t lo = k + ws;
    if (lo >= src.size()) break;
    Word v = src[lo] >> bs;
    if (bs != 0 && lo + 1 < src.size()) v |= src[lo + 1] << (kWordBits - bs);
    dst[k] ^= v;
  }
}

}  // namespace bandset::bitkit
