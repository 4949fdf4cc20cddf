#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "bandset/band_solver.hpp"
#include "bandset/murmur3.hpp"

// Empirical side of the solver analysis: coin-flipping Robin Hood
// placement, cell heights, and the queue chains that bound them.
namespace bandset::sim {

// Counter-based generator. Draw i of stream s under seed k is
// fmix64(key(k, s) + i * golden), so any (seed, stream) pair can be
// replayed or split into child streams without shared state.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(fmix64(seed ^ fmix64(stream + kGolden))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return at(counter_++); }
  result_type at(std::uint64_t i) const noexcept { return fmix64(key_ + (i + 1) * kGolden); }

  // Independent child stream.
  CounterRng split(std::uint64_t stream) const noexcept { return CounterRng(key_, stream); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Exact Poisson draw by sequential inversion; intended for lambda < 30.
std::uint64_t sample_poisson(double lambda, CounterRng& rng);

class TranscriptExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Where CFRH's coin flips come from.
class CoinSource {
 public:
  // Coin of key `id` at cell j is a fixed function of (seed, id, j). With
  // no ids given, key index i (in sorted order) is its own id.
  static CoinSource keyed(std::uint64_t seed, std::vector<std::uint64_t> ids = {});
  // Key i consumes transcripts[i] in order, one bit per empty cell.
  static CoinSource transcripts(std::vector<std::vector<std::uint8_t>> per_key);

  bool flip(std::size_t key, std::uint64_t cell);

 private:
  struct Keyed {
    std::uint64_t seed;
    std::vector<std::uint64_t> ids;
  };
  struct Transcripts {
    std::vector<std::vector<std::uint8_t>> per_key;
    std::vector<std::size_t> used;
  };
  explicit CoinSource(std::variant<Keyed, Transcripts> s) : source_(std::move(s)) {}

  std::variant<Keyed, Transcripts> source_;
};

struct CFRHTrace {
  std::vector<std::uint64_t> hashes;     // sorted, 1-based
  std::vector<std::uint64_t> positions;  // pos_i >= h_i, injective
  // heights[j-1] = #{i : h_i <= j < pos_i}, for cells 1..size()
  std::vector<std::uint64_t> heights;
  bool failed = false;  // some pos_i - h_i >= L

  std::uint64_t height_sum() const noexcept;
  std::uint64_t max_height() const noexcept;
  double mean_height() const noexcept;
};

// Algorithm: insert keys in hash order; a key probing an empty cell takes
// it when its coin is 1, otherwise moves on. The table is unbounded;
// failure is decided afterwards. `hash_values` must be nondecreasing.
CFRHTrace run_cfrh(std::span<const std::uint64_t> hash_values, CoinSource coins,
                   std::size_t block_len);

// H_j for j in [1, table_len]. Requires start_i <= pivot_i <= table_len + 1.
std::vector<std::uint64_t> heights_from_pivots(std::span<const std::uint64_t> starts,
                                               std::span<const std::uint64_t> pivots,
                                               std::uint64_t table_len);

struct CoupledReplay {
  std::vector<std::uint64_t> pivots;
  std::uint64_t additions;
  CFRHTrace trace;

  bool positions_equal_pivots() const noexcept { return trace.positions == pivots; }
};

// Eliminates with coin recording, then replays CFRH on the sorted starts
// using the elimination's own coin transcripts. nullopt on failure.
std::optional<CoupledReplay> coupled_replay(const BandSystem& sys);

// ---------------------------------------------------------------------------
// queue chains

enum class ChainKind { kX, kZ };

struct QueueTrace {
  ChainKind kind;
  double rho;
  std::vector<std::uint32_t> arrivals;  // d_1..d_steps
  std::vector<std::uint64_t> states;    // states[0] = 0, states[j] after d_j

  std::size_t steps() const noexcept { return arrivals.size(); }
  // Mean of states[1..steps].
  double time_average() const noexcept;
  std::uint64_t max_state() const noexcept;
};

std::vector<std::uint32_t> draw_arrivals(double lambda, std::size_t steps, CounterRng& rng);

// X_j = max(0, X_{j-1} + d_j - 1)
QueueTrace x_chain(std::span<const std::uint32_t> arrivals, double rho);
// Z_j = d_j if Z_{j-1} = 0, else Z_{j-1} + d_j - 1
QueueTrace z_chain(std::span<const std::uint32_t> arrivals, double rho);

// X chain with d_j ~ Po(1 - epsilon_prime / 2).
QueueTrace simulate_x(double epsilon_prime, std::size_t steps, CounterRng& rng);
// Discretised M/D/1 queue, d_j ~ Po(rho) unless arrivals are shared.
QueueTrace simulate_z(double rho, std::size_t steps, CounterRng& rng,
                      std::optional<std::span<const std::uint32_t>> shared_arrivals = {});

// True iff X_j = max(0, Z_j - 1) for every j of two traces over the same
// arrivals.
bool satisfies_x_z_identity(const QueueTrace& x, const QueueTrace& z) noexcept;

// Stationary M/D/1 mean, rho + rho^2 / (2 (1 - rho)).
double mdone_mean(double rho);

// Fraction of states[1..steps] strictly greater than k.
double tail_estimate(const QueueTrace& trace, std::int64_t k);

struct TailFit {
  double slope = 0;      // d log Pr[Z > k] / dk
  double intercept = 0;
  std::size_t points = 0;
};
// Least squares of log tail_estimate(k) over k in [k_min, k_max],
// skipping k with an empty tail.
TailFit fit_tail(const QueueTrace& trace, std::int64_t k_min = 5, std::int64_t k_max = 50);

// ---------------------------------------------------------------------------
// Poissonised hashing

struct PoissonisedInput {
  std::vector<std::uint32_t> per_cell;  // k_j for cells 1..n
  std::uint64_t total = 0;              // m'
  double epsilon_prime = 0;
};

PoissonisedInput draw_poissonised(std::uint64_t n, double epsilon_prime, CounterRng& rng);

// CFRH over the hash multiset given by per-cell counts, keyed coins.
CFRHTrace poissonised_cfrh(const PoissonisedInput& input, std::size_t block_len,
                           std::uint64_t coin_seed);
// k_j ~ Po(1 - epsilon_prime) per cell, then CFRH.
CFRHTrace poissonised_cfrh(std::uint64_t n, double epsilon_prime, std::size_t block_len,
                           CounterRng& rng);

struct DominanceCheck {
  std::uint64_t m = 0;
  std::uint64_t m_prime = 0;
  std::size_t rejections = 0;  // draws of m' discarded for m' < m
  bool dominated = false;      // H'_j >= H_j for every cell
};

// Ordinary run with m = floor((1 - epsilon) n) uniform keys against a
// Poissonised run holding the same keys plus m' - m extra ones, where
// m' ~ Po((1 - epsilon/2) n) is resampled until m' >= m. Shared keys use
// the same coin at every cell in both runs.
DominanceCheck poissonisation_dominance(std::uint64_t n, double epsilon, std::size_t block_len,
                                        CounterRng& rng);

struct MajorisationTrial {
  std::uint64_t max_height = 0;  // max_j H'_j
  std::uint64_t max_queue = 0;   // max_j Z_j over n + L - 1 steps
  std::uint64_t shift = 0;       // ceil(log2(4 / epsilon_prime))
  bool holds() const noexcept { return max_height <= max_queue + shift; }
};

// Independent Poissonised CFRH and Z runs of matched length.
MajorisationTrial majorisation_trial(std::uint64_t n, double epsilon_prime, std::size_t block_len,
                                     CounterRng& rng);

}  // namespace bandset::sim
