#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "context_models.hpp"
#include "entropy_codec.hpp"
#include "error.hpp"

namespace genjscc {
namespace {

std::vector<std::uint32_t> skewed_sequence(std::mt19937_64& rng, std::size_t n, std::uint32_t A) {
  std::geometric_distribution<std::uint32_t> g(0.3);
  std::vector<std::uint32_t> s(n);
  for (auto& x : s) x = std::min(g(rng), A - 1);
  return s;
}

CausalContextModel trained(std::uint32_t A, std::uint32_t order, double alpha,
                           std::span<const std::uint32_t> data, std::size_t row) {
  CausalContextModel m(A, order, alpha);
  m.observe_sequence(data, row);
  m.freeze();
  return m;
}

TEST(Bitstream, HeaderLayout) {
  Bitstream b;
  b.alphabet = 300;
  b.count = 5;
  b.model_hash = 0x0102030405060708ull;
  b.payload = {9, 8};
  const auto bytes = b.serialize();
  ASSERT_EQ(bytes.size(), 21u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "GJS1");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 300 & 0xFF);
  EXPECT_EQ(bytes[6], 300 >> 8);
  EXPECT_EQ(bytes[7], 5);
  EXPECT_EQ(bytes[11], 0x08);
  EXPECT_EQ(bytes[18], 0x01);
  const auto p = Bitstream::parse(bytes);
  EXPECT_EQ(p.alphabet, 300);
  EXPECT_EQ(p.count, 5u);
  EXPECT_EQ(p.model_hash, b.model_hash);
  EXPECT_EQ(p.payload, b.payload);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(Bitstream::parse(bad), Error);
  bad = bytes;
  bad[4] = 2;
  EXPECT_THROW(Bitstream::parse(bad), Error);
  EXPECT_THROW(Bitstream::parse(std::span<const std::uint8_t>(bytes.data(), 10)), Error);
}

TEST(RangeCoder, RoundTripFuzz) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 300; ++t) {
    const std::uint32_t A = 2 + rng() % 300;
    const std::uint32_t order = rng() % 3;
    const bool adaptive = rng() % 2;
    const std::size_t row = rng() % 2 ? 0 : 1 + rng() % 40;
    const auto train = skewed_sequence(rng, rng() % 500, A);
    const auto m = trained(A, order, 0.05 + (rng() % 100) / 50.0, train, row);
    std::vector<std::uint32_t> seq(rng() % 2000);
    for (auto& s : seq) s = rng() % 4 ? std::min<std::uint32_t>(rng() % 5, A - 1) : rng() % A;
    const auto stream = ac_encode(seq, m, adaptive, row);
    ASSERT_EQ(stream.count, seq.size());
    const auto parsed = Bitstream::parse(stream.serialize());
    ASSERT_EQ(ac_decode(parsed, m, adaptive, row), seq) << "trial " << t;
  }
}

TEST(RangeCoder, ExtremeProbabilities) {
  // one symbol carries almost all the mass, others sit at weight 1
  CausalContextModel m(32768, 0, 1e-4);
  std::vector<std::uint32_t> train(200000, 7);
  m.observe_sequence(train, 0);
  m.freeze();
  std::vector<std::uint32_t> seq(5000, 7);
  seq[10] = 32767;
  seq[4000] = 0;
  for (bool adaptive : {false, true}) {
    const auto s = ac_encode(seq, m, adaptive);
    EXPECT_EQ(ac_decode(s, m, adaptive), seq);
  }
}

TEST(RangeCoder, EmptySequence) {
  CausalContextModel m(4, 1);
  const auto s = ac_encode({}, m, true);
  EXPECT_EQ(s.count, 0u);
  EXPECT_TRUE(s.payload.empty());
  EXPECT_TRUE(ac_decode(s, m, true).empty());
}

TEST(RangeCoder, PayloadTracksIdealCodeLength) {
  std::mt19937_64 rng(2);
  for (std::uint32_t order : {0u, 1u, 2u}) {
    const auto train = skewed_sequence(rng, 20000, 64);
    const auto m = trained(64, order, 0.5, train, 0);
    const auto seq = skewed_sequence(rng, 10000, 64);
    for (bool adaptive : {false, true}) {
      const auto s = ac_encode(seq, m, adaptive);
      const double ideal = ideal_code_length_bits(seq, m, adaptive);
      const double bits = 8.0 * s.payload.size();
      EXPECT_LE(bits - ideal, 32.0) << "order " << order << " adaptive " << adaptive;
      EXPECT_GE(bits - ideal, -1e-6);
    }
  }
}

TEST(RangeCoder, IdealLengthMatchesDirectSum) {
  std::mt19937_64 rng(3);
  const auto train = skewed_sequence(rng, 3000, 10);
  const auto m = trained(10, 1, 1.0, train, 0);
  const auto seq = skewed_sequence(rng, 500, 10);
  double want = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    std::vector<std::uint32_t> ctx{i == 0 ? kAbsent : seq[i - 1]};
    want -= std::log2(m.pmf(ctx).probability(seq[i]));
  }
  EXPECT_NEAR(ideal_code_length_bits(seq, m, false), want, 1e-9);
  // adaptive: replay the updates on a copy
  CausalContextModel live = m;
  double adaptive_want = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    std::vector<std::uint32_t> ctx{i == 0 ? kAbsent : seq[i - 1]};
    adaptive_want -= std::log2(live.pmf(ctx).probability(seq[i]));
    live.update(ctx, seq[i]);
  }
  EXPECT_NEAR(ideal_code_length_bits(seq, m, true), adaptive_want, 1e-9);
}

TEST(RangeCoder, ModelIsNotModifiedByAdaptiveCoding) {
  std::mt19937_64 rng(4);
  const auto train = skewed_sequence(rng, 1000, 8);
  const auto m = trained(8, 1, 1.0, train, 0);
  const auto h = m.descriptor_hash();
  const auto seq = skewed_sequence(rng, 1000, 8);
  const auto s = ac_encode(seq, m, true);
  EXPECT_EQ(m.descriptor_hash(), h);
  EXPECT_EQ(s.model_hash, h);
}

TEST(RangeCoder, MismatchedModelIsRejected) {
  std::mt19937_64 rng(5);
  const auto train = skewed_sequence(rng, 1000, 8);
  const auto m = trained(8, 1, 1.0, train, 0);
  const auto seq = skewed_sequence(rng, 100, 8);
  const auto s = ac_encode(seq, m, false);
  const CausalContextModel other(8, 1, 1.0);
  const CausalContextModel wider(9, 1, 1.0);
  for (const auto* bad : {&other, &wider}) {
    try {
      ac_decode(s, *bad, false);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kModelMismatch);
    }
  }
}

TEST(RangeCoder, TruncationAndBitFlipsAreDetected) {
  std::mt19937_64 rng(6);
  const auto train = skewed_sequence(rng, 5000, 32);
  const auto m = trained(32, 1, 1.0, train, 0);
  const auto seq = skewed_sequence(rng, 2000, 32);
  const auto s = ac_encode(seq, m, true);
  ASSERT_GT(s.payload.size(), 10u);
  for (std::size_t cut = 1; cut < 8; ++cut) {
    auto t = s;
    t.payload.resize(t.payload.size() - cut);
    try {
      ac_decode(t, m, true);
      FAIL() << "truncated by " << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kCorrupt);
    }
  }
  auto extra = s;
  extra.payload.push_back(0);
  EXPECT_THROW(ac_decode(extra, m, true), Error);
  int detected = 0;
  for (int t = 0; t < 200; ++t) {
    auto f = s;
    f.payload[rng() % f.payload.size()] ^= std::uint8_t(1u << (rng() % 8));
    try {
      // a flip can only survive if it is itself a valid encoding of other symbols
      EXPECT_NE(ac_decode(f, m, true), seq);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kCorrupt);
      ++detected;
    }
  }
  EXPECT_GT(detected, 190);
}

TEST(RangeCoder, OutOfAlphabetSymbol) {
  CausalContextModel m(4, 0);
  std::vector<std::uint32_t> seq{1, 2, 4};
  try {
    ac_encode(seq, m, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kRange);
  }
}

TEST(RangeCoder, UniformBytesCostEightBits) {
  std::mt19937_64 rng(7);
  std::vector<std::uint32_t> seq(20000);
  for (auto& s : seq) s = rng() % 256;
  CausalContextModel m(256, 0, 1.0);
  const auto s = ac_encode(seq, m, true);
  const double bps = 8.0 * s.size_bytes() / seq.size();
  EXPECT_GE(bps, 7.9);
  EXPECT_LE(bps, 8.2);
}

}  // namespace
}  // namespace genjscc
