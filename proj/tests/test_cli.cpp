#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"

namespace fs = std::filesystem;
using namespace bandset;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args, const std::string& stdin_text = "") {
  args.insert(args.begin(), "bandset");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::istringstream in(stdin_text);
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("bandset-cli-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content = {}) const {
    const auto p = path / name;
    if (!content.empty()) std::ofstream(p, std::ios::binary) << content;
    return p.string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("build then query a three line file") {
  TempDir dir;
  const auto input = dir.file("in.tsv", "alpha\t1\nbeta\t0\r\ngamma\t1\n");
  const auto output = dir.file("out.bset");
  auto b = run_cli({"build", "--input", input, "--output", output, "--value-bits", "1"});
  REQUIRE(b.code == 0);
  const auto report = nlohmann::json::parse(b.out);
  CHECK(report["m"] == 3);
  CHECK(report["query_mismatches"] == 0);
  CHECK(report["schema_version"] == cli::kReportSchemaVersion);

  auto q = run_cli({"query", "--file", output}, "alpha\nbeta\ngamma\n");
  CHECK(q.code == 0);
  CHECK(q.out == "1\n0\n1\n");

  // overhead in the report is the stored structure's overhead
  const std::string bytes = slurp(output);
  const auto ds = deserialize(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  CHECK(report["overhead"].get<double>() == doctest::Approx(overhead(ds)).epsilon(1e-12));

  auto unknown = run_cli({"query", "--file", output}, "delta\n");
  CHECK(unknown.code == 0);
  CHECK((unknown.out == "0\n" || unknown.out == "1\n"));

  auto none = run_cli({"query", "--file", output}, "");
  CHECK(none.code == 0);
  CHECK(none.out.empty());
}

TEST_CASE("multi-bit values print at fixed width") {
  TempDir dir;
  const auto input = dir.file("in.tsv", "a\t00f\nb\t3A0\nc\t0\n");
  const auto output = dir.file("out.bset");
  REQUIRE(run_cli({"build", "-i", input, "-o", output, "--value-bits", "10"}).code == 0);
  CHECK(run_cli({"query", output}, "a\nb\nc\n").out == "00f\n3a0\n000\n");
}

TEST_CASE("input errors exit with status 2") {
  TempDir dir;
  const auto output = dir.file("out.bset");
  auto bad_hex = run_cli({"build", "-i", dir.file("a.tsv", "k1\t1\nk2\tzz\n"), "-o", output});
  CHECK(bad_hex.code == 2);
  CHECK(bad_hex.err.find("line 2") != std::string::npos);

  auto too_wide = run_cli({"build", "-i", dir.file("b.tsv", "k1\t2\n"), "-o", output});
  CHECK(too_wide.code == 2);
  CHECK(too_wide.err.find("line 1") != std::string::npos);

  auto no_tab = run_cli({"build", "-i", dir.file("c.tsv", "k1 1\n"), "-o", output});
  CHECK(no_tab.code == 2);

  auto dup = run_cli({"build", "-i", dir.file("d.tsv", "k\t1\nk\t0\n"), "-o", output});
  CHECK(dup.code == 2);

  CHECK(run_cli({"build", "-i", dir.file("e.tsv", "k\t1\n"), "-o", output, "--eps", "1.5"}).code == 2);
  CHECK(run_cli({"build", "-i", (dir.path / "missing").string(), "-o", output}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"simulate", "nonsense"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("construction failure exits with status 1") {
  TempDir dir;
  std::string tsv;
  for (int i = 0; i < 200; ++i) tsv += "key" + std::to_string(i) + "\t1\n";
  auto r = run_cli({"build", "-i", dir.file("in.tsv", tsv), "-o", dir.file("out.bset"),
                    "--block-len", "1", "--eps", "0.01", "--retries", "2"});
  CHECK(r.code == 1);
}

TEST_CASE("corrupt files exit with status 3") {
  TempDir dir;
  CHECK(run_cli({"query", dir.file("bad.bset", "XSET and then some")}, "k\n").code == 3);
}

TEST_CASE("binary input matches TSV input") {
  TempDir dir;
  std::string tsv;
  std::string bin;
  for (int i = 0; i < 500; ++i) {
    const std::string key = "bin/" + std::to_string(i);
    const std::uint64_t v = static_cast<std::uint64_t>(i * 37) & 0xff;
    std::ostringstream hex;
    hex << std::hex << v;
    tsv += key + "\t" + hex.str() + "\n";
    const auto len = static_cast<std::uint32_t>(key.size());
    for (int b = 0; b < 4; ++b) bin += static_cast<char>((len >> (8 * b)) & 0xff);
    bin += key;
    for (int b = 0; b < 8; ++b) bin += static_cast<char>((v >> (8 * b)) & 0xff);
  }
  const auto a = dir.file("a.bset");
  const auto b = dir.file("b.bset");
  REQUIRE(run_cli({"build", "-i", dir.file("in.tsv", tsv), "-o", a, "--value-bits", "8"}).code == 0);
  REQUIRE(run_cli({"build", "-i", dir.file("in.bin", bin), "-o", b, "--value-bits", "8",
                   "--binary-input"}).code == 0);
  CHECK(slurp(a) == slurp(b));
  bin.pop_back();
  CHECK(run_cli({"build", "-i", dir.file("cut.bin", bin), "-o", b, "--value-bits", "8",
                 "--binary-input"}).code == 2);
}

TEST_CASE("builds are deterministic and honour the seed") {
  TempDir dir;
  std::string tsv;
  for (int i = 0; i < 3000; ++i) tsv += "det/" + std::to_string(i) + "\t" + std::to_string(i % 2) + "\n";
  const auto input = dir.file("in.tsv", tsv);
  const auto a = dir.file("a.bset");
  const auto b = dir.file("b.bset");
  const auto c = dir.file("c.bset");
  REQUIRE(run_cli({"build", "-i", input, "-o", a, "--seed", "5", "--chunk-size", "700"}).code == 0);
  REQUIRE(run_cli({"build", "-i", input, "-o", b, "--seed", "5", "--chunk-size", "700",
                   "--threads", "3"}).code == 0);
  REQUIRE(run_cli({"build", "-i", input, "-o", c, "--seed", "6", "--chunk-size", "700"}).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) != slurp(c));

  ::setenv("BANDSET_SEED", "5", 1);
  const auto d = dir.file("d.bset");
  REQUIRE(run_cli({"build", "-i", input, "-o", d, "--chunk-size", "700"}).code == 0);
  ::unsetenv("BANDSET_SEED");
  CHECK(slurp(a) == slurp(d));
}

TEST_CASE("simulate output is deterministic") {
  const auto q1 = run_cli({"simulate", "queue", "--rho", "0.9", "--steps", "1000000", "--seed", "1"});
  const auto q2 = run_cli({"simulate", "queue", "--rho", "0.9", "--steps", "1000000", "--seed", "1"});
  REQUIRE(q1.code == 0);
  CHECK(q1.out == q2.out);
  CHECK(q1.out.rfind("rho,steps,seed,mean_z,", 0) == 0);
  CHECK(q1.out.find(",true,") != std::string::npos);
}

TEST_CASE("coupling reports pivots equal to positions") {
  const auto r = run_cli({"simulate", "coupling", "--m", "1000", "--trials", "100", "--seed", "3"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "trial,m,n,block_len,success,pos_eq_piv,additions,height_sum,additions_le_height_sum");
  int rows = 0;
  int successes = 0;
  while (std::getline(lines, line)) {
    ++rows;
    if (line.find(",false,na,") != std::string::npos) continue;
    ++successes;
    CHECK(line.find(",true,true,") != std::string::npos);
    CHECK(line.substr(line.rfind(',') + 1) == "true");
  }
  CHECK(rows == 100);
  CHECK(successes > 80);
}

TEST_CASE("sweep mean height decreases with epsilon") {
  const auto r = run_cli({"simulate", "sweep", "--n", "20000", "--trials", "5", "--seed", "4"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  std::vector<double> heights;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 10);
    heights.push_back(std::stod(cells[5]));
  }
  REQUIRE(heights.size() == 3);
  CHECK(heights[0] > heights[1]);
  CHECK(heights[1] > heights[2]);
}

TEST_CASE("cfrh simulation rows") {
  const auto r = run_cli({"simulate", "cfrh", "--n", "1000", "--trials", "4"});
  REQUIRE(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 5);
}

TEST_CASE("bench reports overhead close to the chunked accounting") {
  const auto r = run_cli({"bench", "--m", "100000", "--eps", "0.07", "--chunk-size", "10000"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["query_mismatches"] == 0);
  CHECK(std::abs(j["overhead"].get<double>() - 0.088) <= 0.007);
  CHECK(j["num_chunks"] == 10);
  CHECK(j["retries_histogram"].size() >= 1);

  const auto r3 = run_cli({"bench", "--m", "100000", "--eps", "0.03", "--chunk-size", "10000"});
  REQUIRE(r3.code == 0);
  CHECK(std::abs(nlohmann::json::parse(r3.out)["overhead"].get<double>() - 0.043) <= 0.007);
}

TEST_CASE("synthetic keys are 80 distinct bytes") {
  const auto keys = cli::synthetic_keys(5000, 1);
  REQUIRE(keys.keys.size() == 5000);
  std::set<std::string_view> uniq(keys.keys.begin(), keys.keys.end());
  CHECK(uniq.size() == 5000);
  for (const auto k : keys.keys) REQUIRE(k.size() == 80);
}

TEST_CASE("installed binary maps exit codes") {
  const std::string cmd = std::string(BANDSET_BINARY) + " simulate bogus 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
}
