#include "bandset/retrieval_flat.hpp"

#include <string>
#include <utility>

#include "bandset/errors.hpp"
#include "retrieval_build.hpp"

namespace bandset {

namespace {

detail::BuildParams build_params(const FlatParams& p) {
  return {p.epsilon, p.block_len, p.value_bits, p.max_retries, p.base_seed, p.force_leading_one};
}

}  // namespace

void FlatParams::validate() const { detail::validate(build_params(*this)); }

FlatRetrieval::FlatRetrieval(FlatParams params, std::size_t m, std::uint64_t n, HashSeed seed,
                             std::vector<bitkit::BitVec> planes, std::uint64_t additions)
    : params_(params),
      m_(m),
      n_(n),
      seed_(seed),
      planes_(std::move(planes)),
      additions_(additions) {
  params_.validate();
  if (planes_.size() != params_.value_bits) {
    throw ContractViolation("FlatRetrieval: expected one plane per value bit");
  }
  for (const auto& plane : planes_) {
    if (plane.size() != table_bits()) {
      throw ContractViolation("FlatRetrieval: plane length must be n + L - 1");
    }
  }
}

FlatRetrieval construct_flat(std::span<const KeyValue> pairs, const FlatParams& params) {
  const detail::BuildParams bp = build_params(params);
  detail::validate(bp);
  const auto keys = detail::normalize_pairs(pairs, bp);
  auto table = detail::build_table(keys, bp);
  if (!table) {
    throw ConstructError(ConstructError::Kind::kRetriesExhausted,
                         "construction failed for all " + std::to_string(params.max_retries) +
                             " seeds");
  }
  return FlatRetrieval(params, keys.size(), table->n, HashSeed{params.base_seed, table->retry},
                       std::move(table->planes), table->additions);
}

double overhead(const FlatRetrieval& ds) {
  if (ds.size() == 0) throw ContractViolation("overhead: undefined for an empty key set");
  const double bits = static_cast<double>(ds.table_bits()) * ds.params().value_bits;
  return bits / (static_cast<double>(ds.size()) * ds.params().value_bits) - 1.0;
}

}  // namespace bandset
