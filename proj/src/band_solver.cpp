#include "bandset/band_solver.hpp"

#include <string>
#include <utility>

#include "bandset/errors.hpp"

namespace bandset {

using bitkit::Word;

BandSystem::BandSystem(std::uint64_t n, std::size_t block_len, unsigned value_bits)
    : n_(n),
      block_len_(block_len),
      value_bits_(value_bits),
      words_per_row_(bitkit::words_for(block_len)) {
  if (n == 0) throw ContractViolation("BandSystem: n must be at least 1");
  if (block_len == 0) throw ContractViolation("BandSystem: block length must be at least 1");
  if (value_bits == 0 || value_bits > kMaxValueBits) {
    throw ContractViolation("BandSystem: value width must be in [1, 64]");
  }
}

void BandSystem::reserve(std::size_t m) {
  starts_.reserve(m);
  patterns_.reserve(m * words_per_row_);
  rhs_.reserve(m);
}

void BandSystem::add_row(std::uint64_t start, bitkit::BlockView pattern, std::uint64_t rhs) {
  if (start < 1 || start > n_) {
    throw ContractViolation("BandSystem::add_row: start " + std::to_string(start) +
                            " outside [1, " + std::to_string(n_) + "]");
  }
  if (pattern.size() != block_len_) {
    throw ContractViolation("BandSystem::add_row: pattern length differs from L");
  }
  if ((rhs & ~bitkit::low_mask(value_bits_)) != 0) {
    throw ContractViolation("BandSystem::add_row: right-hand side wider than r bits");
  }
  starts_.push_back(start);
  patterns_.insert(patterns_.end(), pattern.words().begin(), pattern.words().end());
  rhs_.push_back(rhs);
}

BandSystem BandSystem::permuted(std::span<const std::size_t> order) const {
  BandSystem out(n_, block_len_, value_bits_);
  out.reserve(order.size());
  for (const std::size_t i : order) {
    out.starts_.push_back(starts_[i]);
    const auto src = std::span(patterns_).subspan(i * words_per_row_, words_per_row_);
    out.patterns_.insert(out.patterns_.end(), src.begin(), src.end());
    out.rhs_.push_back(rhs_[i]);
  }
  return out;
}

std::vector<std::size_t> sorted_order(const BandSystem& sys) {
  const std::size_t m = sys.rows();
  std::vector<std::size_t> bucket(sys.n() + 2, 0);
  for (std::size_t i = 0; i < m; ++i) ++bucket[sys.start(i) + 1];
  for (std::size_t s = 1; s < bucket.size(); ++s) bucket[s] += bucket[s - 1];
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[bucket[sys.start(i)]++] = i;
  return order;
}

BandSystem sort_rows(const BandSystem& sys) {
  const auto order = sorted_order(sys);
  return sys.permuted(order);
}

namespace {

std::vector<std::uint8_t> transcript_for(const BandSystem& rows, std::size_t i,
                                         const bitkit::BitVec& pivot_used) {
  std::vector<std::uint8_t> coins;
  const auto pattern = rows.pattern(i);
  const std::uint64_t start = rows.start(i);
  for (std::size_t off = 0; off < rows.block_len(); ++off) {
    if (pivot_used.test(start - 1 + off)) continue;
    const bool bit = pattern.test(off);
    coins.push_back(bit ? 1 : 0);
    if (bit) break;
  }
  return coins;
}

}  // namespace

EliminationOutcome eliminate(const BandSystem& sys, bool record_coins) {
  EliminationOutcome out{sort_rows(sys), {}, 0, std::nullopt, {}};
  BandSystem& rows = out.rows;
  const std::size_t m = rows.rows();
  const std::size_t words = rows.words_per_row();
  out.pivots.assign(m, 0);

  bitkit::BitVec pivot_used;
  if (record_coins) {
    pivot_used = bitkit::BitVec(rows.columns());
    out.coin_transcripts.resize(m);
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (record_coins) out.coin_transcripts[i] = transcript_for(rows, i, pivot_used);

    const auto lead = bitkit::first_one(rows.pattern(i));
    if (!lead) {
      out.failed_row = i;
      return out;
    }
    const std::uint64_t start = rows.start(i);
    const std::uint64_t piv = start + *lead;
    out.pivots[i] = piv;
    if (record_coins) pivot_used.set(piv - 1);

    const auto src = rows.pattern(i).words();
    const std::uint64_t src_rhs = rows.rhs(i);
    for (std::size_t j = i + 1; j < m && rows.start(j) <= piv; ++j) {
      const std::uint64_t delta = rows.start(j) - start;
      auto dst = rows.mutable_pattern(j);
      const std::size_t bit = *lead - delta;
      if (((dst[bit / bitkit::kWordBits] >> (bit % bitkit::kWordBits)) & 1) == 0) continue;
      if (words == 1) {
        dst[0] ^= src[0] >> delta;
      } else {
        bitkit::xor_shifted_down(dst, src, delta);
      }
      rows.mutable_rhs(j) ^= src_rhs;
      ++out.additions;
    }
  }
  return out;
}

SolutionTable back_substitute(const EliminationOutcome& out) {
  if (!out.success()) {
    throw ContractViolation("back_substitute: elimination failed, no solution to substitute");
  }
  const BandSystem& rows = out.rows;
  SolutionTable table;
  table.pivots = out.pivots;
  table.planes.assign(rows.value_bits(), bitkit::BitVec(rows.columns()));
  for (std::size_t i = rows.rows(); i-- > 0;) {
    const auto pattern = rows.pattern(i);
    const std::uint64_t offset = rows.start(i) - 1;
    const std::uint64_t pivot_bit = out.pivots[i] - 1;
    for (unsigned t = 0; t < rows.value_bits(); ++t) {
      const bool b = bitkit::dot_window(table.planes[t], offset, pattern) ^
                     (((rows.rhs(i) >> t) & 1) != 0);
      if (b) table.planes[t].set(pivot_bit);
    }
  }
  return table;
}

std::optional<SolutionTable> solve(const BandSystem& sys) {
  const EliminationOutcome out = eliminate(sys);
  if (!out.success()) return std::nullopt;
  return back_substitute(out);
}

bool verify(const BandSystem& original, const SolutionTable& table) {
  if (table.planes.size() != original.value_bits()) {
    throw ContractViolation("verify: table has " + std::to_string(table.planes.size()) +
                            " planes, system has r = " + std::to_string(original.value_bits()));
  }
  for (const auto& plane : table.planes) {
    if (plane.size() != original.columns()) {
      throw ContractViolation("verify: plane length differs from n+L-1");
    }
  }
  for (std::size_t i = 0; i < original.rows(); ++i) {
    const auto row = original.row(i);
    for (unsigned t = 0; t < original.value_bits(); ++t) {
      const bool lhs = bitkit::dot_window(table.planes[t], row.start - 1, row.pattern);
      if (lhs != (((row.rhs >> t) & 1) != 0)) return false;
    }
  }
  return true;
}

std::size_t dense_rank(const BandSystem& sys) {
  const std::uint64_t cols = sys.columns();
  if (cols > 64) {
    throw ContractViolation("dense_rank: n+L-1 = " + std::to_string(cols) +
                            " exceeds the 64-column oracle cap");
  }
  std::vector<std::uint64_t> dense(sys.rows());
  for (std::size_t i = 0; i < sys.rows(); ++i) {
    dense[i] = sys.pattern(i).words()[0] << (sys.start(i) - 1);
  }
  std::size_t rank = 0;
  for (std::uint64_t c = 0; c < cols && rank < dense.size(); ++c) {
    const std::uint64_t bit = std::uint64_t{1} << c;
    std::size_t p = rank;
    while (p < dense.size() && (dense[p] & bit) == 0) ++p;
    if (p == dense.size()) continue;
    std::swap(dense[rank], dense[p]);
    for (std::size_t i = 0; i < dense.size(); ++i) {
      if (i != rank && (dense[i] & bit) != 0) dense[i] ^= dense[rank];
    }
    ++rank;
  }
  return rank;
}

}  // namespace bandset
