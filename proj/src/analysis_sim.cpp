#include "bandset/analysis_sim.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>

#include "bandset/errors.hpp"
#include "bandset/row_gen.hpp"

namespace bandset::sim {

std::uint64_t sample_poisson(double lambda, CounterRng& rng) {
  if (!(lambda >= 0.0)) throw ContractViolation("sample_poisson: lambda must be >= 0");
  if (lambda == 0.0) return 0;
  const double u = rng.uniform();
  double p = std::exp(-lambda);
  double cdf = p;
  std::uint64_t k = 0;
  while (u >= cdf) {
    ++k;
    p *= lambda / static_cast<double>(k);
    // the remaining mass is below double resolution
    if (p == 0.0) break;
    cdf += p;
  }
  return k;
}

// ---------------------------------------------------------------------------
// CFRH

CoinSource CoinSource::keyed(std::uint64_t seed, std::vector<std::uint64_t> ids) {
  return CoinSource(Keyed{seed, std::move(ids)});
}

CoinSource CoinSource::transcripts(std::vector<std::vector<std::uint8_t>> per_key) {
  std::vector<std::size_t> used(per_key.size(), 0);
  return CoinSource(Transcripts{std::move(per_key), std::move(used)});
}

bool CoinSource::flip(std::size_t key, std::uint64_t cell) {
  if (auto* k = std::get_if<Keyed>(&source_)) {
    const std::uint64_t id = k->ids.empty() ? key : k->ids.at(key);
    const std::uint64_t h =
        fmix64(fmix64(k->seed + (id + 1) * 0x9e3779b97f4a7c15ULL) ^ (cell * 0xc2b2ae3d27d4eb4fULL));
    return (h & 1) != 0;
  }
  auto& t = std::get<Transcripts>(source_);
  if (key >= t.per_key.size() || t.used[key] >= t.per_key[key].size()) {
    throw TranscriptExhausted("coin transcript of key " + std::to_string(key) +
                              " ran out before placement");
  }
  return t.per_key[key][t.used[key]++] != 0;
}

std::uint64_t CFRHTrace::height_sum() const noexcept {
  return std::accumulate(heights.begin(), heights.end(), std::uint64_t{0});
}

std::uint64_t CFRHTrace::max_height() const noexcept {
  return heights.empty() ? 0 : *std::max_element(heights.begin(), heights.end());
}

double CFRHTrace::mean_height() const noexcept {
  return heights.empty() ? 0.0
                         : static_cast<double>(height_sum()) / static_cast<double>(heights.size());
}

CFRHTrace run_cfrh(std::span<const std::uint64_t> hash_values, CoinSource coins,
                   std::size_t block_len) {
  if (block_len == 0) throw ContractViolation("run_cfrh: L must be at least 1");
  for (std::size_t i = 0; i < hash_values.size(); ++i) {
    if (hash_values[i] == 0 || (i > 0 && hash_values[i] < hash_values[i - 1])) {
      throw ContractViolation("run_cfrh: hash values must be >= 1 and nondecreasing");
    }
  }
  CFRHTrace trace;
  trace.hashes.assign(hash_values.begin(), hash_values.end());
  trace.positions.resize(hash_values.size());

  std::vector<std::uint8_t> occupied;
  std::uint64_t table_len = 0;
  for (std::size_t i = 0; i < hash_values.size(); ++i) {
    for (std::uint64_t j = hash_values[i];; ++j) {
      if (occupied.size() <= j) occupied.resize(std::max<std::size_t>(2 * occupied.size(), j + 1));
      if (occupied[j] == 0 && coins.flip(i, j)) {
        occupied[j] = 1;
        trace.positions[i] = j;
        break;
      }
    }
    if (trace.positions[i] - hash_values[i] >= block_len) trace.failed = true;
    table_len = std::max({table_len, hash_values[i] + block_len - 1, trace.positions[i]});
  }
  trace.heights = heights_from_pivots(trace.hashes, trace.positions, table_len);
  return trace;
}

std::vector<std::uint64_t> heights_from_pivots(std::span<const std::uint64_t> starts,
                                               std::span<const std::uint64_t> pivots,
                                               std::uint64_t table_len) {
  if (starts.size() != pivots.size()) {
    throw ContractViolation("heights_from_pivots: starts and pivots differ in length");
  }
  std::vector<std::int64_t> diff(table_len + 2, 0);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (starts[i] == 0 || pivots[i] < starts[i] || pivots[i] > table_len + 1) {
      throw ContractViolation("heights_from_pivots: need 1 <= start <= pivot <= table_len + 1");
    }
    ++diff[starts[i]];
    --diff[pivots[i]];
  }
  std::vector<std::uint64_t> heights(table_len);
  std::int64_t run = 0;
  for (std::uint64_t j = 1; j <= table_len; ++j) {
    run += diff[j];
    heights[j - 1] = static_cast<std::uint64_t>(run);
  }
  return heights;
}

std::optional<CoupledReplay> coupled_replay(const BandSystem& sys) {
  EliminationOutcome elim = eliminate(sys, true);
  if (!elim.success()) return std::nullopt;
  std::vector<std::uint64_t> starts(elim.rows.rows());
  for (std::size_t i = 0; i < starts.size(); ++i) starts[i] = elim.rows.start(i);
  CFRHTrace trace = run_cfrh(starts, CoinSource::transcripts(std::move(elim.coin_transcripts)),
                             sys.block_len());
  return CoupledReplay{std::move(elim.pivots), elim.additions, std::move(trace)};
}

// ---------------------------------------------------------------------------
// queues

double QueueTrace::time_average() const noexcept {
  if (states.size() <= 1) return 0.0;
  const auto sum = std::accumulate(states.begin() + 1, states.end(), std::uint64_t{0});
  return static_cast<double>(sum) / static_cast<double>(states.size() - 1);
}

std::uint64_t QueueTrace::max_state() const noexcept {
  return states.empty() ? 0 : *std::max_element(states.begin(), states.end());
}

std::vector<std::uint32_t> draw_arrivals(double lambda, std::size_t steps, CounterRng& rng) {
  std::vector<std::uint32_t> d(steps);
  for (auto& v : d) v = static_cast<std::uint32_t>(sample_poisson(lambda, rng));
  return d;
}

QueueTrace x_chain(std::span<const std::uint32_t> arrivals, double rho) {
  QueueTrace t{ChainKind::kX, rho, {arrivals.begin(), arrivals.end()}, {}};
  t.states.resize(arrivals.size() + 1);
  t.states[0] = 0;
  for (std::size_t j = 1; j <= arrivals.size(); ++j) {
    const std::uint64_t prev = t.states[j - 1] + arrivals[j - 1];
    t.states[j] = prev == 0 ? 0 : prev - 1;
  }
  return t;
}

QueueTrace z_chain(std::span<const std::uint32_t> arrivals, double rho) {
  QueueTrace t{ChainKind::kZ, rho, {arrivals.begin(), arrivals.end()}, {}};
  t.states.resize(arrivals.size() + 1);
  t.states[0] = 0;
  for (std::size_t j = 1; j <= arrivals.size(); ++j) {
    const std::uint64_t prev = t.states[j - 1];
    t.states[j] = prev == 0 ? arrivals[j - 1] : prev + arrivals[j - 1] - 1;
  }
  return t;
}

QueueTrace simulate_x(double epsilon_prime, std::size_t steps, CounterRng& rng) {
  if (!(epsilon_prime > 0.0 && epsilon_prime < 1.0)) {
    throw ContractViolation("simulate_x: epsilon' must lie in (0, 1)");
  }
  const double rho = 1.0 - epsilon_prime / 2.0;
  const auto d = draw_arrivals(rho, steps, rng);
  return x_chain(d, rho);
}

QueueTrace simulate_z(double rho, std::size_t steps, CounterRng& rng,
                      std::optional<std::span<const std::uint32_t>> shared_arrivals) {
  if (!(rho > 0.0 && rho < 1.0)) throw ContractViolation("simulate_z: rho must lie in (0, 1)");
  if (shared_arrivals) return z_chain(*shared_arrivals, rho);
  const auto d = draw_arrivals(rho, steps, rng);
  return z_chain(d, rho);
}

bool satisfies_x_z_identity(const QueueTrace& x, const QueueTrace& z) noexcept {
  if (x.states.size() != z.states.size() || x.arrivals != z.arrivals) return false;
  for (std::size_t j = 0; j < x.states.size(); ++j) {
    const std::uint64_t expect = z.states[j] == 0 ? 0 : z.states[j] - 1;
    if (x.states[j] != expect) return false;
  }
  return true;
}

double mdone_mean(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw ContractViolation("mdone_mean: rho must lie in [0, 1)");
  return rho + 0.5 * (rho * rho / (1.0 - rho));
}

double tail_estimate(const QueueTrace& trace, std::int64_t k) {
  if (trace.states.size() <= 1) throw ContractViolation("tail_estimate: empty trace");
  std::size_t above = 0;
  for (std::size_t j = 1; j < trace.states.size(); ++j) {
    if (static_cast<std::int64_t>(trace.states[j]) > k) ++above;
  }
  return static_cast<double>(above) / static_cast<double>(trace.states.size() - 1);
}

TailFit fit_tail(const QueueTrace& trace, std::int64_t k_min, std::int64_t k_max) {
  std::vector<std::pair<double, double>> pts;
  for (std::int64_t k = k_min; k <= k_max; ++k) {
    const double t = tail_estimate(trace, k);
    if (t > 0.0) pts.emplace_back(static_cast<double>(k), std::log(t));
  }
  TailFit fit;
  fit.points = pts.size();
  if (pts.size() < 2) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double cnt = static_cast<double>(pts.size());
  fit.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / cnt;
  return fit;
}

// ---------------------------------------------------------------------------
// Poissonisation

PoissonisedInput draw_poissonised(std::uint64_t n, double epsilon_prime, CounterRng& rng) {
  if (!(epsilon_prime > 0.0 && epsilon_prime < 1.0)) {
    throw ContractViolation("draw_poissonised: epsilon' must lie in (0, 1)");
  }
  PoissonisedInput in;
  in.epsilon_prime = epsilon_prime;
  in.per_cell.resize(n);
  for (auto& k : in.per_cell) {
    k = static_cast<std::uint32_t>(sample_poisson(1.0 - epsilon_prime, rng));
    in.total += k;
  }
  return in;
}

CFRHTrace poissonised_cfrh(const PoissonisedInput& input, std::size_t block_len,
                           std::uint64_t coin_seed) {
  std::vector<std::uint64_t> hashes;
  hashes.reserve(input.total);
  for (std::size_t j = 0; j < input.per_cell.size(); ++j) {
    hashes.insert(hashes.end(), input.per_cell[j], j + 1);
  }
  return run_cfrh(hashes, CoinSource::keyed(coin_seed), block_len);
}

CFRHTrace poissonised_cfrh(std::uint64_t n, double epsilon_prime, std::size_t block_len,
                           CounterRng& rng) {
  const PoissonisedInput in = draw_poissonised(n, epsilon_prime, rng);
  return poissonised_cfrh(in, block_len, rng());
}

namespace {

struct KeyedHashes {
  std::vector<std::uint64_t> hashes;
  std::vector<std::uint64_t> ids;
};

KeyedHashes sort_keyed(std::vector<std::pair<std::uint64_t, std::uint64_t>> hash_id) {
  std::sort(hash_id.begin(), hash_id.end());
  KeyedHashes out;
  out.hashes.reserve(hash_id.size());
  out.ids.reserve(hash_id.size());
  for (const auto& [h, id] : hash_id) {
    out.hashes.push_back(h);
    out.ids.push_back(id);
  }
  return out;
}

}  // namespace

DominanceCheck poissonisation_dominance(std::uint64_t n, double epsilon, std::size_t block_len,
                                        CounterRng& rng) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ContractViolation("poissonisation_dominance: epsilon must lie in (0, 1)");
  }
  DominanceCheck check;
  check.m = static_cast<std::uint64_t>((1.0 - epsilon) * static_cast<double>(n));
  const double epsilon_prime = epsilon / 2.0;
  while (true) {
    check.m_prime = draw_poissonised(n, epsilon_prime, rng).total;
    if (check.m_prime >= check.m) break;
    ++check.rejections;
  }

  std::vector<std::pair<std::uint64_t, std::uint64_t>> all;
  all.reserve(check.m_prime);
  for (std::uint64_t id = 0; id < check.m_prime; ++id) {
    all.emplace_back(1 + map_to_range(rng(), n), id);
  }
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ordinary(all.begin(),
                                                                all.begin() + check.m);
  const std::uint64_t coin_seed = rng();
  KeyedHashes o = sort_keyed(std::move(ordinary));
  KeyedHashes p = sort_keyed(std::move(all));
  const CFRHTrace ord = run_cfrh(o.hashes, CoinSource::keyed(coin_seed, o.ids), block_len);
  const CFRHTrace poi = run_cfrh(p.hashes, CoinSource::keyed(coin_seed, p.ids), block_len);

  check.dominated = true;
  for (std::size_t j = 0; j < ord.heights.size(); ++j) {
    const std::uint64_t primed = j < poi.heights.size() ? poi.heights[j] : 0;
    if (primed < ord.heights[j]) {
      check.dominated = false;
      break;
    }
  }
  return check;
}

MajorisationTrial majorisation_trial(std::uint64_t n, double epsilon_prime, std::size_t block_len,
                                     CounterRng& rng) {
  const CFRHTrace trace = poissonised_cfrh(n, epsilon_prime, block_len, rng);
  const std::size_t cells = n + block_len - 1;
  MajorisationTrial trial;
  for (std::size_t j = 0; j < std::min(cells, trace.heights.size()); ++j) {
    trial.max_height = std::max(trial.max_height, trace.heights[j]);
  }
  const QueueTrace z = simulate_z(1.0 - epsilon_prime / 2.0, cells, rng);
  trial.max_queue = z.max_state();
  trial.shift = static_cast<std::uint64_t>(std::ceil(std::log2(4.0 / epsilon_prime)));
  return trial;
}

}  // namespace bandset::sim
