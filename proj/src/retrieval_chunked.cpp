#include "bandset/retrieval_chunked.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstring>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>

#include "bandset/errors.hpp"
#include "retrieval_build.hpp"

namespace bandset {

namespace {

detail::BuildParams build_params(const ChunkedParams& p) {
  return {p.epsilon, p.block_len, p.value_bits, p.max_retries, p.base_seed, p.force_leading_one};
}

std::uint64_t chunk_count(std::uint64_t m, std::uint64_t chunk_size) {
  return std::max<std::uint64_t>(1, (m + chunk_size - 1) / chunk_size);
}

}  // namespace

void ChunkedParams::validate() const {
  detail::validate(build_params(*this));
  if (chunk_size == 0) throw ContractViolation("chunk size must be at least 1");
}

ChunkDirectory::ChunkDirectory(std::span<const std::uint64_t> offsets,
                               std::span<const std::uint16_t> seeds) {
  if (offsets.size() != seeds.size() + 1) {
    throw ContractViolation("ChunkDirectory: need exactly one offset more than seeds");
  }
  if (offsets.front() != 0) throw ContractViolation("ChunkDirectory: first offset must be 0");
  if (offsets.back() >= kMaxOffset) {
    throw ContractViolation("ChunkDirectory: offsets exceed the 48-bit limit");
  }
  entries_.reserve(offsets.size());
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    if (k > 0 && offsets[k] <= offsets[k - 1]) {
      throw ContractViolation("ChunkDirectory: offsets must be strictly increasing");
    }
    const std::uint16_t seed = k < seeds.size() ? seeds[k] : 0;
    entries_.push_back((offsets[k] << 16) | seed);
  }
}

std::vector<std::uint64_t> ChunkDirectory::offsets() const {
  std::vector<std::uint64_t> out;
  out.reserve(entries_.size());
  for (const auto e : entries_) out.push_back(e >> 16);
  return out;
}

std::vector<std::uint16_t> ChunkDirectory::seeds() const {
  std::vector<std::uint16_t> out;
  for (std::size_t k = 0; k < num_chunks(); ++k) out.push_back(seed(k));
  return out;
}

ChunkedRetrieval::ChunkedRetrieval(ChunkedParams params, std::uint64_t m,
                                   ChunkDirectory directory, std::vector<bitkit::BitVec> planes)
    : params_(params), m_(m), directory_(std::move(directory)), planes_(std::move(planes)) {
  params_.validate();
  if (directory_.num_chunks() != chunk_count(m_, params_.chunk_size)) {
    throw ContractViolation("ChunkedRetrieval: chunk count must be max(1, ceil(m / C))");
  }
  for (std::size_t k = 0; k < directory_.num_chunks(); ++k) {
    if (directory_.chunk_bits(k) < params_.block_len) {
      throw ContractViolation("ChunkedRetrieval: chunk table shorter than L bits");
    }
  }
  if (planes_.size() != params_.value_bits) {
    throw ContractViolation("ChunkedRetrieval: expected one plane per value bit");
  }
  for (const auto& plane : planes_) {
    if (plane.size() != directory_.total_bits()) {
      throw ContractViolation("ChunkedRetrieval: plane length differs from directory total");
    }
  }
}

std::vector<std::uint64_t> ChunkedRetrieval::retry_histogram() const {
  std::vector<std::uint64_t> hist;
  for (std::size_t k = 0; k < num_chunks(); ++k) {
    const std::uint16_t s = directory_.seed(k);
    if (hist.size() <= s) hist.resize(s + 1, 0);
    ++hist[s];
  }
  return hist;
}

bool operator==(const ChunkedRetrieval& a, const ChunkedRetrieval& b) {
  const auto& pa = a.params_;
  const auto& pb = b.params_;
  return pa.epsilon == pb.epsilon && pa.block_len == pb.block_len &&
         pa.value_bits == pb.value_bits && pa.chunk_size == pb.chunk_size &&
         pa.base_seed == pb.base_seed && pa.force_leading_one == pb.force_leading_one &&
         a.m_ == b.m_ && a.directory_ == b.directory_ && a.planes_ == b.planes_;
}

ChunkedRetrieval construct_chunked(std::span<const KeyValue> pairs, const ChunkedParams& params) {
  params.validate();
  const detail::BuildParams bp = build_params(params);
  const auto keys = detail::normalize_pairs(pairs, bp);
  const std::uint64_t m = keys.size();
  const std::uint64_t num_chunks = chunk_count(m, params.chunk_size);

  // keys are sorted by chunk hash, and the chunk index is monotone in it
  std::vector<std::size_t> begin(num_chunks + 1, 0);
  {
    std::size_t i = 0;
    for (std::uint64_t k = 0; k < num_chunks; ++k) {
      begin[k] = i;
      while (i < keys.size() && map_to_range(keys[i].id.high, num_chunks) == k) ++i;
    }
    begin[num_chunks] = i;
  }

  std::vector<std::uint64_t> offsets(num_chunks + 1, 0);
  for (std::uint64_t k = 0; k < num_chunks; ++k) {
    const std::uint64_t n_k = positions_for(begin[k + 1] - begin[k], params.epsilon);
    offsets[k + 1] = offsets[k] + n_k + params.block_len - 1;
  }

  std::vector<std::optional<detail::ChunkTable>> tables(num_chunks);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t k = next++; k < num_chunks; k = next++) {
      const auto slice = std::span(keys).subspan(begin[k], begin[k + 1] - begin[k]);
      if (slice.empty()) {
        detail::ChunkTable empty;
        empty.planes.assign(params.value_bits, bitkit::BitVec(params.block_len));
        tables[k] = std::move(empty);
      } else {
        tables[k] = detail::build_table(slice, bp);
      }
    }
  };
  const unsigned threads =
      static_cast<unsigned>(std::clamp<std::uint64_t>(params.threads, 1, num_chunks));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<std::uint16_t> seeds(num_chunks);
  std::vector<bitkit::BitVec> planes(params.value_bits, bitkit::BitVec(offsets.back()));
  for (std::uint64_t k = 0; k < num_chunks; ++k) {
    if (!tables[k]) {
      throw ConstructError(ConstructError::Kind::kRetriesExhausted,
                           "chunk " + std::to_string(k) + " failed for all " +
                               std::to_string(params.max_retries) + " seeds",
                           k);
    }
    seeds[k] = tables[k]->retry;
    for (unsigned t = 0; t < params.value_bits; ++t) {
      const auto& local = tables[k]->planes[t];
      bitkit::xor_window(planes[t], offsets[k], bitkit::BlockView(local.words(), local.size()));
    }
  }
  return ChunkedRetrieval(params, m, ChunkDirectory(offsets, seeds), std::move(planes));
}

ChunkedRetrieval embed_flat(const FlatRetrieval& flat) {
  const FlatParams& fp = flat.params();
  ChunkedParams cp;
  cp.epsilon = fp.epsilon;
  cp.block_len = fp.block_len;
  cp.value_bits = fp.value_bits;
  cp.chunk_size = std::max<std::uint64_t>(flat.size(), 1);
  cp.max_retries = fp.max_retries;
  cp.base_seed = fp.base_seed;
  cp.force_leading_one = fp.force_leading_one;
  const std::uint64_t offsets[] = {0, flat.table_bits()};
  const std::uint16_t seeds[] = {flat.seed().retry};
  return ChunkedRetrieval(cp, flat.size(), ChunkDirectory(offsets, seeds), flat.planes());
}

double overhead(const ChunkedRetrieval& ds) {
  if (ds.size() == 0) throw ContractViolation("overhead: undefined for an empty key set");
  const double r = ds.params().value_bits;
  const double k = static_cast<double>(ds.num_chunks());
  const double bits = static_cast<double>(ds.directory().total_bits()) * r + k * 16.0 +
                      (k + 1.0) * 64.0;
  return bits / (static_cast<double>(ds.size()) * r) - 1.0;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve) { bytes_.reserve(reserve); }

  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t get(int width, const char* what) {
    need(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = width - 1; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated input while reading ") + what);
    }
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::span<const std::uint8_t> peek(std::size_t n) const { return bytes_.subspan(pos_, n); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const ChunkedRetrieval& ds) {
  const auto& p = ds.params();
  const std::uint64_t k = ds.num_chunks();
  const std::size_t plane_words = bitkit::words_for(ds.directory().total_bits());
  ByteWriter w(kHeaderBytes + k * 2 + (k + 1) * 8 + p.value_bits * plane_words * 8);
  w.raw("BSET");
  w.put(kFormatVersion, 2);
  w.put(p.force_leading_one ? 1 : 0, 2);
  w.put(p.value_bits, 2);
  w.put(p.block_len, 2);
  w.put(std::bit_cast<std::uint64_t>(p.epsilon), 8);
  w.put(p.chunk_size, 8);
  w.put(ds.size(), 8);
  w.put(k, 8);
  w.put(p.base_seed, 8);
  for (std::uint64_t c = 0; c < k; ++c) w.put(ds.directory().seed(c), 2);
  for (std::uint64_t c = 0; c <= k; ++c) w.put(ds.directory().offset(c), 8);
  for (const auto& plane : ds.planes()) {
    for (const auto word : plane.words()) w.put(word, 8);
  }
  return w.take();
}

ChunkedRetrieval deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  in.need(kHeaderBytes, "header");
  if (std::memcmp(in.peek(4).data(), "BSET", 4) != 0) throw FormatError("bad magic");
  in.get(4, "magic");
  const auto version = in.get(2, "version");
  if (version != kFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version));
  }
  const auto flags = in.get(2, "flags");
  if ((flags & ~std::uint64_t{1}) != 0) throw FormatError("unknown flag bits set");

  ChunkedParams p;
  p.force_leading_one = (flags & 1) != 0;
  p.value_bits = static_cast<unsigned>(in.get(2, "r"));
  p.block_len = in.get(2, "L");
  p.epsilon = std::bit_cast<double>(in.get(8, "epsilon"));
  p.chunk_size = in.get(8, "chunk size");
  const std::uint64_t m = in.get(8, "m");
  const std::uint64_t k = in.get(8, "num_chunks");
  p.base_seed = in.get(8, "base seed");
  try {
    p.validate();
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("invalid parameters: ") + e.what());
  }
  if (k != chunk_count(m, p.chunk_size)) {
    throw FormatError("chunk count does not match max(1, ceil(m / C))");
  }
  // bound k by the remaining input before sizing anything from it
  if (k > in.remaining() / 10) throw FormatError("truncated directory");

  std::vector<std::uint16_t> seeds(k);
  for (auto& s : seeds) s = static_cast<std::uint16_t>(in.get(2, "seeds"));
  std::vector<std::uint64_t> offsets(k + 1);
  for (auto& o : offsets) o = in.get(8, "offsets");
  if (offsets.front() != 0) throw FormatError("first offset is not 0");
  std::uint64_t positions = 0;
  for (std::uint64_t c = 0; c < k; ++c) {
    if (offsets[c + 1] <= offsets[c] || offsets[c + 1] - offsets[c] < p.block_len) {
      throw FormatError("chunk " + std::to_string(c) + " has a table shorter than L bits");
    }
    positions += offsets[c + 1] - offsets[c] - (p.block_len - 1);
  }
  if (offsets.back() >= ChunkDirectory::kMaxOffset) throw FormatError("offsets too large");
  if (positions < m) throw FormatError("fewer table positions than keys");

  const std::uint64_t total = offsets.back();
  const std::size_t plane_words = bitkit::words_for(total);
  if (in.remaining() / 8 / p.value_bits < plane_words) throw FormatError("truncated bit planes");
  std::vector<bitkit::BitVec> planes(p.value_bits, bitkit::BitVec(total));
  for (auto& plane : planes) {
    for (auto& word : plane.mutable_words()) word = in.get(8, "bit planes");
    if (!plane.padding_is_zero()) throw FormatError("nonzero padding bits in a plane");
  }
  if (in.remaining() != 0) throw FormatError("trailing bytes after the last plane");

  return ChunkedRetrieval(p, m, ChunkDirectory(offsets, seeds), std::move(planes));
}

}  // namespace bandset
