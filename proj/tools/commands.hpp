#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bandset/retrieval_chunked.hpp"

namespace bandset::cli {

enum ExitCode : int {
  kOk = 0,
  kConstructFailed = 1,
  kInputError = 2,
  kFormatError = 3,
};

inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kCsvSchemaVersion = 1;

struct BuildSpec {
  std::string input;
  std::string output;
  ChunkedParams params;
  // records of u32 key length, key bytes, u64 value (all little-endian)
  bool binary_input = false;
};

struct BenchReport {
  std::uint64_t m = 0;
  ChunkedParams params;
  std::uint64_t num_chunks = 0;
  std::uint64_t stored_bits = 0;
  double overhead = 0;
  double construct_ns_per_key = 0;
  double query_ns_per_key = 0;
  std::uint64_t query_mismatches = 0;
  std::vector<std::uint64_t> retries_histogram;

  nlohmann::json to_json() const;
};

struct SyntheticKeys {
  std::string buffer;
  std::vector<std::string_view> keys;
};

// m distinct 80-byte URL-like keys, deterministic in seed.
SyntheticKeys synthetic_keys(std::uint64_t m, std::uint64_t seed);

// Builds from pairs, timing construction and one full query pass.
BenchReport measure(std::span<const KeyValue> pairs, const ChunkedParams& params,
                    std::optional<ChunkedRetrieval>* built = nullptr);

int cmd_build(const BuildSpec& spec, std::ostream& out, std::ostream& err);
int cmd_query(const std::string& file, std::istream& in, std::ostream& out, std::ostream& err);

struct BenchSpec {
  std::uint64_t m = 100'000;
  ChunkedParams params;
};
int cmd_bench(const BenchSpec& spec, std::ostream& out, std::ostream& err);

struct SimulateSpec {
  std::string kind;  // cfrh | queue | coupling | sweep
  std::uint64_t seed = 0;
  double rho = 0.9;
  std::uint64_t steps = 1'000'000;
  std::uint64_t trials = 100;
  std::uint64_t m = 1'000;
  std::uint64_t n = 10'000;
  double epsilon = 0.1;
  std::vector<double> epsilons{0.05, 0.1, 0.2};
  std::size_t block_len = 64;
};
int cmd_simulate(const SimulateSpec& spec, std::ostream& out, std::ostream& err);

// Full command line entry point.
int run(int argc, char** argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace bandset::cli
