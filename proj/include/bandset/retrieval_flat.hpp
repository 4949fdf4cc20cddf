#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bandset/bitkit.hpp"
#include "bandset/retrieval_common.hpp"
#include "bandset/row_gen.hpp"

namespace bandset {

struct FlatParams {
  double epsilon = 0.05;
  std::size_t block_len = 64;
  unsigned value_bits = 1;
  unsigned max_retries = 64;
  std::uint64_t base_seed = 0;
  bool force_leading_one = false;

  void validate() const;
};

// One band system over the whole key set. The table is r planes of
// n + L - 1 bits with n = ceil(m / (1 - epsilon)).
class FlatRetrieval {
 public:
  FlatRetrieval(FlatParams params, std::size_t m, std::uint64_t n, HashSeed seed,
                std::vector<bitkit::BitVec> planes, std::uint64_t additions = 0);

  const FlatParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return m_; }
  std::uint64_t n() const noexcept { return n_; }
  HashSeed seed() const noexcept { return seed_; }
  const std::vector<bitkit::BitVec>& planes() const noexcept { return planes_; }
  std::uint64_t table_bits() const noexcept { return n_ + params_.block_len - 1; }
  std::uint64_t additions() const noexcept { return additions_; }

  // `probe(plane, word)` is called for every table word read.
  template <class Probe>
  std::uint64_t query_probed(std::string_view key, Probe&& probe) const {
    std::array<bitkit::Word, bitkit::words_for(kMaxBlockLen)> buf{};
    const std::span<bitkit::Word> pattern(buf.data(), bitkit::words_for(params_.block_len));
    const std::uint64_t start = row_for_key_into(key, seed_, {n_, params_.block_len},
                                                 params_.force_leading_one, pattern);
    const bitkit::BlockView block(pattern, params_.block_len);
    std::uint64_t value = 0;
    for (unsigned t = 0; t < params_.value_bits; ++t) {
      const bool bit = bitkit::dot_window(planes_[t], start - 1, block,
                                          [&](std::size_t w) { probe(t, w); });
      value |= std::uint64_t{bit} << t;
    }
    return value;
  }

  std::uint64_t query(std::string_view key) const {
    return query_probed(key, [](unsigned, std::size_t) {});
  }

 private:
  FlatParams params_;
  std::size_t m_;
  std::uint64_t n_;
  HashSeed seed_;
  std::vector<bitkit::BitVec> planes_;
  std::uint64_t additions_;
};

// Throws ConstructError (retries exhausted, duplicate key) and
// ContractViolation (bad parameters or a value wider than r bits).
FlatRetrieval construct_flat(std::span<const KeyValue> pairs, const FlatParams& params);

inline std::uint64_t query_flat(const FlatRetrieval& ds, std::string_view key) {
  return ds.query(key);
}

// table bits / (m r) - 1, no directory. Requires m >= 1.
double overhead(const FlatRetrieval& ds);

}  // namespace bandset
