#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "bandset/analysis_sim.hpp"
#include "bandset/band_solver.hpp"
#include "bandset/errors.hpp"

namespace bandset::cli {

namespace {

using Clock = std::chrono::steady_clock;

double ns_since(Clock::time_point t0, std::uint64_t per) {
  const auto ns = std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
  return per == 0 ? 0.0 : ns / static_cast<double>(per);
}

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::optional<std::uint64_t> parse_hex(std::string_view s) {
  if (s.empty() || s.size() > 16) return std::nullopt;
  std::uint64_t v = 0;
  for (const char c : s) {
    int d;
    if (c >= '0' && c <= '9') {
      d = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      d = c - 'a' + 10;
    } else if (c >= 'A' && c <= 'F') {
      d = c - 'A' + 10;
    } else {
      return std::nullopt;
    }
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

std::string to_hex(std::uint64_t v, unsigned value_bits) {
  std::ostringstream os;
  os << std::hex << std::setw(static_cast<int>((value_bits + 3) / 4)) << std::setfill('0') << v;
  return os.str();
}

struct LoadedPairs {
  std::vector<std::string> keys;
  std::vector<KeyValue> pairs;
};

LoadedPairs read_tsv(std::istream& in, unsigned value_bits) {
  LoadedPairs out;
  std::vector<std::uint64_t> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InputError("line " + std::to_string(line_no) + ": expected key<TAB>value-hex");
    }
    const auto value = parse_hex(std::string_view(line).substr(tab + 1));
    if (!value) {
      throw InputError("line " + std::to_string(line_no) + ": malformed hex value '" +
                       line.substr(tab + 1) + "'");
    }
    if ((*value & ~bitkit::low_mask(value_bits)) != 0) {
      throw InputError("line " + std::to_string(line_no) + ": value wider than " +
                       std::to_string(value_bits) + " bits");
    }
    out.keys.push_back(line.substr(0, tab));
    values.push_back(*value);
  }
  out.pairs.reserve(out.keys.size());
  for (std::size_t i = 0; i < out.keys.size(); ++i) out.pairs.push_back({out.keys[i], values[i]});
  return out;
}

LoadedPairs read_binary(std::istream& in, unsigned value_bits) {
  LoadedPairs out;
  std::vector<std::uint64_t> values;
  auto read_le = [&](int width, std::uint64_t& v) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), width);
    if (in.gcount() != width) return false;
    v = 0;
    for (int i = width - 1; i >= 0; --i) v = (v << 8) | buf[i];
    return true;
  };
  std::size_t record = 0;
  std::uint64_t len = 0;
  while (read_le(4, len)) {
    ++record;
    std::string key(len, '\0');
    in.read(key.data(), static_cast<std::streamsize>(len));
    std::uint64_t value = 0;
    if (static_cast<std::uint64_t>(in.gcount()) != len || !read_le(8, value)) {
      throw InputError("record " + std::to_string(record) + ": truncated");
    }
    if ((value & ~bitkit::low_mask(value_bits)) != 0) {
      throw InputError("record " + std::to_string(record) + ": value wider than " +
                       std::to_string(value_bits) + " bits");
    }
    out.keys.push_back(std::move(key));
    values.push_back(value);
  }
  if (in.gcount() != 0) throw InputError("trailing partial record");
  for (std::size_t i = 0; i < out.keys.size(); ++i) out.pairs.push_back({out.keys[i], values[i]});
  return out;
}

int construct_error_code(const ConstructError& e) {
  return e.kind() == ConstructError::Kind::kDuplicateKey ? kInputError : kConstructFailed;
}

}  // namespace

nlohmann::json BenchReport::to_json() const {
  return {
      {"schema_version", kReportSchemaVersion},
      {"m", m},
      {"params",
       {{"epsilon", params.epsilon},
        {"block_len", params.block_len},
        {"value_bits", params.value_bits},
        {"chunk_size", params.chunk_size},
        {"max_retries", params.max_retries},
        {"base_seed", params.base_seed},
        {"force_leading_one", params.force_leading_one},
        {"threads", params.threads}}},
      {"num_chunks", num_chunks},
      {"stored_bits", stored_bits},
      {"overhead", overhead},
      {"construct_ns_per_key", construct_ns_per_key},
      {"query_ns_per_key", query_ns_per_key},
      {"query_mismatches", query_mismatches},
      {"retries_histogram", retries_histogram},
  };
}

SyntheticKeys synthetic_keys(std::uint64_t m, std::uint64_t seed) {
  constexpr std::size_t kKeyLen = 80;
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789-";
  sim::CounterRng rng(seed, 0x75726c);
  SyntheticKeys out;
  out.buffer.reserve(m * kKeyLen);
  for (std::uint64_t i = 0; i < m; ++i) {
    std::string key = "https://www.";
    const std::size_t host_len = 6 + rng() % 12;
    for (std::size_t c = 0; c < host_len; ++c) key += kAlphabet[rng() % 26];
    key += ".eu/";
    // the index makes keys distinct
    std::ostringstream idx;
    idx << std::hex << std::setw(12) << std::setfill('0') << i;
    key += idx.str();
    key += '/';
    while (key.size() < kKeyLen) key += kAlphabet[rng() % (sizeof(kAlphabet) - 1)];
    key.resize(kKeyLen);
    out.buffer += key;
  }
  out.keys.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    out.keys.emplace_back(out.buffer.data() + i * kKeyLen, kKeyLen);
  }
  return out;
}

BenchReport measure(std::span<const KeyValue> pairs, const ChunkedParams& params,
                    std::optional<ChunkedRetrieval>* built) {
  BenchReport report;
  report.params = params;

  const auto t0 = Clock::now();
  ChunkedRetrieval ds = construct_chunked(pairs, params);
  report.construct_ns_per_key = ns_since(t0, pairs.size());

  std::uint64_t mismatches = 0;
  const auto t1 = Clock::now();
  for (const auto& kv : pairs) mismatches += ds.query(kv.key) != kv.value ? 1 : 0;
  report.query_ns_per_key = ns_since(t1, pairs.size());

  report.m = ds.size();
  report.num_chunks = ds.num_chunks();
  report.stored_bits = ds.directory().total_bits() * params.value_bits + ds.num_chunks() * 16 +
                       (ds.num_chunks() + 1) * 64;
  report.overhead = ds.size() == 0 ? 0.0 : overhead(ds);
  report.query_mismatches = mismatches;
  report.retries_histogram = ds.retry_histogram();
  if (built) built->emplace(std::move(ds));
  return report;
}

int cmd_build(const BuildSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    spec.params.validate();
    std::ifstream in(spec.input, std::ios::binary);
    if (!in) throw InputError("cannot open input '" + spec.input + "'");
    const LoadedPairs loaded = spec.binary_input ? read_binary(in, spec.params.value_bits)
                                                 : read_tsv(in, spec.params.value_bits);
    std::optional<ChunkedRetrieval> ds;
    const BenchReport report = measure(loaded.pairs, spec.params, &ds);
    if (report.query_mismatches != 0) {
      err << "error: " << report.query_mismatches << " keys failed the self-check\n";
      return kConstructFailed;
    }
    const auto bytes = serialize(*ds);
    std::ofstream os(spec.output, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot open output '" + spec.output + "'");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw InputError("write to '" + spec.output + "' failed");
    out << report.to_json().dump(2) << '\n';
    return kOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ConstructError& e) {
    err << "error: " << e.what() << '\n';
    return construct_error_code(e);
  }
}

int cmd_query(const std::string& file, std::istream& in, std::ostream& out, std::ostream& err) {
  std::ifstream is(file, std::ios::binary);
  if (!is) {
    err << "error: cannot open '" << file << "'\n";
    return kInputError;
  }
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(is),
                                        std::istreambuf_iterator<char>()};
  try {
    const ChunkedRetrieval ds = deserialize(bytes);
    std::string key;
    while (std::getline(in, key)) {
      if (!key.empty() && key.back() == '\r') key.pop_back();
      out << to_hex(ds.query(key), ds.params().value_bits) << '\n';
    }
    return kOk;
  } catch (const FormatError& e) {
    err << "error: " << file << ": " << e.what() << '\n';
    return kFormatError;
  }
}

int cmd_bench(const BenchSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    spec.params.validate();
    const SyntheticKeys keys = synthetic_keys(spec.m, spec.params.base_seed);
    sim::CounterRng rng(spec.params.base_seed, 0x76616c);
    std::vector<KeyValue> pairs;
    pairs.reserve(keys.keys.size());
    for (const auto k : keys.keys) {
      pairs.push_back({k, rng() & bitkit::low_mask(spec.params.value_bits)});
    }
    const BenchReport report = measure(pairs, spec.params);
    out << report.to_json().dump(2) << '\n';
    return report.query_mismatches == 0 ? kOk : kConstructFailed;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ConstructError& e) {
    err << "error: " << e.what() << '\n';
    return construct_error_code(e);
  }
}

// ---------------------------------------------------------------------------
// simulate

namespace {

const char* tf(bool b) { return b ? "true" : "false"; }

void simulate_queue(const SimulateSpec& s, std::ostream& out) {
  sim::CounterRng rng(s.seed);
  const auto d = sim::draw_arrivals(s.rho, s.steps, rng);
  const auto z = sim::z_chain(d, s.rho);
  const auto x = sim::x_chain(d, s.rho);
  const double expect = sim::mdone_mean(s.rho);
  const auto fit = sim::fit_tail(z);
  out << "rho,steps,seed,mean_z,mdone_mean,rel_error,mean_x,max_z,eq2_holds,tail_slope,"
         "tail_points\n";
  out << std::setprecision(10) << s.rho << ',' << s.steps << ',' << s.seed << ','
      << z.time_average() << ',' << expect << ','
      << std::abs(z.time_average() - expect) / expect << ',' << x.time_average() << ','
      << z.max_state() << ',' << tf(sim::satisfies_x_z_identity(x, z)) << ',' << fit.slope << ','
      << fit.points << '\n';
}

void simulate_cfrh(const SimulateSpec& s, std::ostream& out) {
  const double eps_prime = s.epsilon / 2.0;
  out << "trial,n,epsilon,epsilon_prime,block_len,m_prime,mean_height,max_height,height_sum,"
         "failed\n";
  out << std::setprecision(10);
  for (std::uint64_t t = 0; t < s.trials; ++t) {
    sim::CounterRng rng(s.seed, t);
    const sim::PoissonisedInput in = sim::draw_poissonised(s.n, eps_prime, rng);
    const sim::CFRHTrace trace = sim::poissonised_cfrh(in, s.block_len, rng());
    out << t << ',' << s.n << ',' << s.epsilon << ',' << eps_prime << ',' << s.block_len << ','
        << in.total << ',' << trace.mean_height() << ',' << trace.max_height() << ','
        << trace.height_sum() << ',' << tf(trace.failed) << '\n';
  }
}

void simulate_coupling(const SimulateSpec& s, std::ostream& out) {
  const std::uint64_t n = positions_for(s.m, s.epsilon);
  out << "trial,m,n,block_len,success,pos_eq_piv,additions,height_sum,additions_le_height_sum\n";
  for (std::uint64_t t = 0; t < s.trials; ++t) {
    sim::CounterRng rng(s.seed, t);
    const BandSystem sys = random_system(n, s.m, s.block_len, 1, rng);
    const auto replay = sim::coupled_replay(sys);
    out << t << ',' << s.m << ',' << n << ',' << s.block_len << ',';
    if (!replay) {
      out << "false,na,na,na,na\n";
      continue;
    }
    const std::uint64_t hsum = replay->trace.height_sum();
    out << "true," << tf(replay->positions_equal_pivots()) << ',' << replay->additions << ','
        << hsum << ',' << tf(replay->additions <= hsum) << '\n';
  }
}

void simulate_sweep(const SimulateSpec& s, std::ostream& out) {
  out << "epsilon,epsilon_prime,n,block_len,trials,mean_height,max_height,"
         "mean_max_queue_plus_shift,majorised_fraction,dominance_fraction\n";
  out << std::setprecision(10);
  for (std::size_t e = 0; e < s.epsilons.size(); ++e) {
    const double eps = s.epsilons[e];
    const double eps_prime = eps / 2.0;
    double mean_height = 0;
    std::uint64_t max_height = 0;
    double queue_bound = 0;
    std::uint64_t majorised = 0;
    std::uint64_t dominated = 0;
    for (std::uint64_t t = 0; t < s.trials; ++t) {
      sim::CounterRng rng(s.seed, (e << 32) | t);
      const auto trace = sim::poissonised_cfrh(s.n, eps_prime, s.block_len, rng);
      mean_height += trace.mean_height();
      max_height = std::max(max_height, trace.max_height());
      const auto trial = sim::majorisation_trial(s.n, eps_prime, s.block_len, rng);
      queue_bound += static_cast<double>(trial.max_queue + trial.shift);
      majorised += trial.holds() ? 1 : 0;
      dominated += sim::poissonisation_dominance(s.n, eps, s.block_len, rng).dominated ? 1 : 0;
    }
    const double trials = static_cast<double>(std::max<std::uint64_t>(s.trials, 1));
    out << eps << ',' << eps_prime << ',' << s.n << ',' << s.block_len << ',' << s.trials << ','
        << mean_height / trials << ',' << max_height << ',' << queue_bound / trials << ','
        << static_cast<double>(majorised) / trials << ','
        << static_cast<double>(dominated) / trials << '\n';
  }
}

}  // namespace

int cmd_simulate(const SimulateSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    if (spec.kind == "queue") {
      simulate_queue(spec, out);
    } else if (spec.kind == "cfrh") {
      simulate_cfrh(spec, out);
    } else if (spec.kind == "coupling") {
      simulate_coupling(spec, out);
    } else if (spec.kind == "sweep") {
      simulate_sweep(spec, out);
    } else {
      err << "error: unknown simulation kind '" << spec.kind
          << "' (expected cfrh, queue, coupling or sweep)\n";
      return kInputError;
    }
    return kOk;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

// ---------------------------------------------------------------------------
// command line

namespace {

void add_params(CLI::App* cmd, ChunkedParams& p) {
  cmd->add_option("--eps", p.epsilon, "slack fraction epsilon in (0,1)")->capture_default_str();
  cmd->add_option("--block-len", p.block_len, "block length L in bits")->capture_default_str();
  cmd->add_option("--chunk-size", p.chunk_size, "target keys per chunk C")->capture_default_str();
  cmd->add_option("--value-bits", p.value_bits, "value width r in bits")->capture_default_str();
  cmd->add_option("--seed", p.base_seed, "base hash seed")
      ->envname("BANDSET_SEED")
      ->capture_default_str();
  cmd->add_option("--retries", p.max_retries, "seed retries per chunk")->capture_default_str();
  cmd->add_option("--threads", p.threads, "construction threads")->capture_default_str();
  cmd->add_flag("--force-leading-one", p.force_leading_one, "set bit 0 of every pattern");
}

}  // namespace

int run(int argc, char** argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Band-matrix retrieval structures and their simulation suite", "bandset"};
  app.require_subcommand(1);

  BuildSpec build;
  auto* build_cmd = app.add_subcommand("build", "build a structure from key<TAB>hex lines");
  build_cmd->add_option("--input,-i", build.input, "input file")->required();
  build_cmd->add_option("--output,-o", build.output, "output file")->required();
  build_cmd->add_flag("--binary-input", build.binary_input,
                      "read u32 length + key + u64 value records");
  add_params(build_cmd, build.params);

  std::string query_file;
  auto* query_cmd = app.add_subcommand("query", "answer keys from stdin, one hex value per line");
  query_cmd->add_option("--file,-f,file", query_file, "structure file")->required();

  BenchSpec bench;
  auto* bench_cmd = app.add_subcommand("bench", "build and time on synthetic 80-byte keys");
  bench_cmd->add_option("--m", bench.m, "number of keys")->capture_default_str();
  add_params(bench_cmd, bench.params);

  SimulateSpec simulate;
  auto* sim_cmd = app.add_subcommand("simulate", "emit simulation statistics as CSV");
  sim_cmd->add_option("kind", simulate.kind, "cfrh | queue | coupling | sweep")
      ->required()
      ->check(CLI::IsMember({"cfrh", "queue", "coupling", "sweep"}));
  sim_cmd->add_option("--seed", simulate.seed)->envname("BANDSET_SEED")->capture_default_str();
  sim_cmd->add_option("--rho", simulate.rho, "queue arrival rate")->capture_default_str();
  sim_cmd->add_option("--steps", simulate.steps, "queue steps")->capture_default_str();
  sim_cmd->add_option("--trials", simulate.trials)->capture_default_str();
  sim_cmd->add_option("--m", simulate.m, "rows per coupling instance")->capture_default_str();
  sim_cmd->add_option("--n", simulate.n, "cells for cfrh and sweep")->capture_default_str();
  sim_cmd->add_option("--eps", simulate.epsilon, "epsilon for cfrh and coupling")
      ->capture_default_str();
  sim_cmd->add_option("--eps-list", simulate.epsilons, "epsilons for sweep")->delimiter(',');
  sim_cmd->add_option("--block-len", simulate.block_len)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  if (*build_cmd) return cmd_build(build, out, err);
  if (*query_cmd) return cmd_query(query_file, in, out, err);
  if (*bench_cmd) return cmd_bench(bench, out, err);
  return cmd_simulate(simulate, out, err);
}

}  // namespace bandset::cli
