#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bandset/bitkit.hpp"

using namespace bandset;
using namespace bandset::bitkit;

namespace {

bool naive_dot(const BitVec& z, std::size_t offset, const Block& p) {
  bool acc = false;
  for (std::size_t i = 0; i < p.size(); ++i) acc ^= z.test(offset + i) && p.test(i);
  return acc;
}

BitVec random_bits(std::size_t n, std::mt19937_64& rng) {
  BitVec v(n);
  for (std::size_t i = 0; i < n; ++i) v.set(i, rng() & 1);
  return v;
}

Block random_block(std::size_t n, std::mt19937_64& rng) {
  Block b(n);
  for (std::size_t i = 0; i < n; ++i) b.set(i, rng() & 1);
  return b;
}

}  // namespace

TEST_CASE("xor_window examples") {
  BitVec dst(6);
  xor_window(dst, 2, Block::from_string("111"));
  CHECK(dst.to_string() == "001110");

  BitVec x = BitVec::from_string("101101");
  const BitVec before = x;
  xor_window(x, 1, Block(4));
  CHECK(x == before);
}

TEST_CASE("dot_window examples") {
  CHECK(dot_window(BitVec::from_string("101"), 0, Block::from_string("110")));
  CHECK(dot_window(BitVec::from_string("111"), 0, Block::from_string("111")));
  CHECK_FALSE(dot_window(BitVec::from_string("111111"), 2, Block(3)));
  // window 110 in the middle of the vector
  CHECK(dot_window(BitVec::from_string("0011000"), 2, Block::from_string("101")));
  CHECK_FALSE(dot_window(BitVec::from_string("0011000"), 2, Block::from_string("001")));
}

TEST_CASE("first_one examples") {
  const Block b = Block::from_string("00100");
  CHECK(first_one(b, 0) == 2);
  CHECK_FALSE(first_one(b, 3).has_value());
  CHECK_FALSE(first_one(Block(5), 0).has_value());
  CHECK_FALSE(first_one(b, 5).has_value());
  CHECK_THROWS_AS(first_one(b, 6), ContractViolation);

  Block wide(200);
  wide.set(130);
  CHECK(first_one(wide, 0) == 130);
  CHECK(first_one(wide, 130) == 130);
  CHECK_FALSE(first_one(wide, 131).has_value());
}

TEST_CASE("windows past the end are rejected") {
  BitVec z(10);
  CHECK_THROWS_AS(dot_window(z, 8, Block(3)), ContractViolation);
  CHECK_THROWS_AS(xor_window(z, 8, Block(3)), ContractViolation);
  CHECK_NOTHROW(xor_window(z, 7, Block(3)));
}

TEST_CASE("dot_window matches a per-bit loop") {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 4000; ++iter) {
    const std::size_t len = 1 + rng() % (3 * kWordBits);
    const std::size_t total = len + rng() % 200;
    const std::size_t offset = rng() % (total - len + 1);
    const BitVec z = random_bits(total, rng);
    const Block p = random_block(len, rng);
    REQUIRE(dot_window(z, offset, p) == naive_dot(z, offset, p));
  }
}

TEST_CASE("xor_window matches a per-bit loop and is an involution") {
  std::mt19937_64 rng(12);
  for (int iter = 0; iter < 4000; ++iter) {
    const std::size_t len = 1 + rng() % (3 * kWordBits);
    const std::size_t total = len + rng() % 200;
    const std::size_t offset = rng() % (total - len + 1);
    const BitVec orig = random_bits(total, rng);
    const Block p = random_block(len, rng);

    BitVec expect = orig;
    for (std::size_t i = 0; i < len; ++i) {
      if (p.test(i)) expect.flip(offset + i);
    }
    BitVec got = orig;
    xor_window(got, offset, p);
    REQUIRE(got == expect);
    REQUIRE(got.padding_is_zero());
    xor_window(got, offset, p);
    REQUIRE(got == orig);
  }
}

TEST_CASE("window operations touch at most ceil(L/w)+1 consecutive words") {
  std::mt19937_64 rng(13);
  for (int iter = 0; iter < 2000; ++iter) {
    const std::size_t len = 1 + rng() % (3 * kWordBits);
    const std::size_t total = len + rng() % 300;
    const std::size_t offset = rng() % (total - len + 1);
    BitVec z = random_bits(total, rng);
    const Block p = random_block(len, rng);
    const std::size_t bound = words_for(len) + 1;

    CountingProbe probe;
    (void)dot_window(z, offset, p, probe);
    REQUIRE(probe.count() <= bound);
    REQUIRE(probe.contiguous());
    REQUIRE(probe.touched().front() == offset / kWordBits);

    probe.reset();
    xor_window(z, offset, p, probe);
    REQUIRE(probe.count() <= bound);
    REQUIRE(probe.contiguous());
  }
}

TEST_CASE("first_one matches a per-bit scan") {
  std::mt19937_64 rng(14);
  for (int iter = 0; iter < 2000; ++iter) {
    const std::size_t len = 1 + rng() % 200;
    Block b(len);
    for (std::size_t i = 0; i < len; ++i) b.set(i, rng() % 23 == 0);
    const std::size_t from = rng() % (len + 1);
    std::optional<std::size_t> expect;
    for (std::size_t i = from; i < len; ++i) {
      if (b.test(i)) {
        expect = i;
        break;
      }
    }
    REQUIRE(first_one(b, from) == expect);
  }
}

TEST_CASE("xor_shifted_down") {
  std::mt19937_64 rng(15);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t words = 1 + rng() % 4;
    const std::size_t shift = rng() % (words * kWordBits);
    std::vector<Word> src(words), dst(words), expect(words);
    for (auto& w : src) w = rng();
    for (std::size_t i = 0; i < words; ++i) expect[i] = dst[i] = rng();
    for (std::size_t i = shift; i < words * kWordBits; ++i) {
      const std::size_t j = i - shift;
      if ((src[i / 64] >> (i % 64)) & 1) expect[j / 64] ^= Word{1} << (j % 64);
    }
    xor_shifted_down(dst, src, shift);
    REQUIRE(dst == expect);
  }
}

TEST_CASE("string round trips and padding") {
  const Block b = Block::from_string("0110");
  CHECK(b.test(1));
  CHECK_FALSE(b.test(0));
  CHECK(b.to_string() == "0110");
  CHECK(Block::from_word(~Word{0}, 5).words()[0] == 0x1f);
  CHECK_THROWS_AS(Block::from_string("012"), ContractViolation);
  const BitVec v = BitVec::from_string(std::string(70, '1'));
  CHECK(v.padding_is_zero());
  CHECK(v.words()[1] == 0x3f);
}
