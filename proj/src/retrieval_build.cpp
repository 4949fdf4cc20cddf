#include "retrieval_build.hpp"

#include <algorithm>
#include <string>

#include "bandset/band_solver.hpp"
#include "bandset/errors.hpp"
#include "bandset/row_gen.hpp"

namespace bandset::detail {

void validate(const BuildParams& p) {
  if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) {
    throw ContractViolation("epsilon must lie in (0, 1)");
  }
  if (p.block_len == 0 || p.block_len > kMaxBlockLen) {
    throw ContractViolation("block length must lie in [1, " + std::to_string(kMaxBlockLen) + "]");
  }
  if (p.value_bits == 0 || p.value_bits > kMaxValueBits) {
    throw ContractViolation("value width must lie in [1, 64]");
  }
  if (p.max_retries == 0 || p.max_retries > 65536) {
    throw ContractViolation("max_retries must lie in [1, 65536]");
  }
}

std::vector<NormalizedPair> normalize_pairs(std::span<const KeyValue> pairs,
                                            const BuildParams& p) {
  const std::uint64_t value_mask = bitkit::low_mask(p.value_bits);
  std::vector<NormalizedPair> out;
  out.reserve(pairs.size());
  for (const auto& kv : pairs) {
    if ((kv.value & ~value_mask) != 0) {
      throw ContractViolation("value " + std::to_string(kv.value) + " does not fit in " +
                              std::to_string(p.value_bits) + " bits");
    }
    out.push_back({kv.key, kv.value, chunk_hash(kv.key, p.base_seed)});
  }
  std::sort(out.begin(), out.end(), [](const NormalizedPair& a, const NormalizedPair& b) {
    if (a.id != b.id) return a.id < b.id;
    if (a.key != b.key) return a.key < b.key;
    return a.value < b.value;
  });
  std::size_t kept = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (kept > 0 && out[kept - 1].key == out[i].key) {
      if (out[kept - 1].value != out[i].value) {
        throw ConstructError(ConstructError::Kind::kDuplicateKey,
                             "key '" + std::string(out[i].key) + "' has two different values");
      }
      continue;
    }
    out[kept++] = out[i];
  }
  out.resize(kept);
  return out;
}

std::optional<ChunkTable> build_table(std::span<const NormalizedPair> keys, const BuildParams& p) {
  const std::uint64_t n = positions_for(keys.size(), p.epsilon);
  const RowParams row_params{n, p.block_len};
  std::vector<bitkit::Word> pattern(bitkit::words_for(p.block_len));

  for (unsigned attempt = 0; attempt < p.max_retries; ++attempt) {
    const HashSeed seed{p.base_seed, static_cast<std::uint16_t>(attempt)};
    BandSystem sys(n, p.block_len, p.value_bits);
    sys.reserve(keys.size());
    for (const auto& kv : keys) {
      const std::uint64_t start =
          row_for_key_into(kv.key, seed, row_params, p.force_leading_one, pattern);
      sys.add_row(start, bitkit::BlockView(pattern, p.block_len), kv.value);
    }
    EliminationOutcome elim = eliminate(sys);
    if (!elim.success()) continue;
    SolutionTable solved = back_substitute(elim);
    return ChunkTable{n, seed.retry, std::move(solved.planes), elim.additions};
  }
  return std::nullopt;
}

}  // namespace bandset::detail
