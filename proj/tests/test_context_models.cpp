#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "context_models.hpp"
#include "error.hpp"
#include "test_util.hpp"

namespace genjscc {
namespace {

// Dense reference for the fixed-point PMF: every symbol computed
// explicitly, leftover to the first symbol of maximal count.
std::vector<std::uint32_t> oracle_weights(const std::vector<std::uint64_t>& counts,
                                          std::uint32_t alpha_q) {
  const std::uint64_t A = counts.size();
  const std::uint64_t N = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  const unsigned __int128 D = ((unsigned __int128)N << 16) + (unsigned __int128)A * alpha_q;
  std::vector<std::uint32_t> w(A);
  std::uint64_t sum = 0;
  for (std::size_t s = 0; s < A; ++s) {
    const unsigned __int128 n = ((unsigned __int128)counts[s] << 16) + alpha_q;
    w[s] = 1 + std::uint32_t(n * (65536 - A) / D);
    sum += w[s];
  }
  std::size_t arg = std::max_element(counts.begin(), counts.end()) - counts.begin();
  w[arg] += std::uint32_t(65536 - sum);
  return w;
}

std::vector<CountEntry> to_row(const std::vector<std::uint64_t>& counts) {
  std::vector<CountEntry> row;
  for (std::uint32_t s = 0; s < counts.size(); ++s)
    if (counts[s]) row.push_back({s, std::uint32_t(counts[s])});
  return row;
}

TEST(QuantizedPmf, MatchesOracleOnFuzzedTables) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const std::uint32_t A = 2 + rng() % (t % 10 == 0 ? 4000 : 300);
    std::vector<std::uint64_t> counts(A, 0);
    const int distinct = rng() % std::min<std::uint32_t>(A, 50);
    for (int i = 0; i < distinct; ++i) counts[rng() % A] += 1 + rng() % (i % 3 ? 10 : 100000);
    const std::uint32_t alpha_q = 1 + rng() % 200000;
    QuantizedPmf q;
    q.assign(to_row(counts), A, alpha_q);
    const auto want = oracle_weights(counts, alpha_q);
    const auto dense = q.dense();
    ASSERT_EQ(dense.weights, want);
    std::uint64_t sum = 0;
    for (std::uint32_t s = 0; s < A; ++s) {
      ASSERT_GE(dense.weights[s], 1u);
      ASSERT_EQ(q.cumulative(s), sum);
      ASSERT_EQ(q.weight(s), dense.weights[s]);
      sum += dense.weights[s];
    }
    ASSERT_EQ(sum, kPmfTotal);
  }
}

TEST(QuantizedPmf, FindInvertsCumulative) {
  std::vector<std::uint64_t> counts{0, 5, 0, 0, 100, 3, 0, 0, 0, 1};
  QuantizedPmf q;
  q.assign(to_row(counts), 10, alpha_to_fixed(0.5));
  for (std::uint32_t target = 0; target < kPmfTotal; target += 7) {
    std::uint32_t cum = 0, freq = 0;
    const auto s = q.find(target, cum, freq);
    ASSERT_EQ(cum, q.cumulative(s));
    ASSERT_EQ(freq, q.weight(s));
    ASSERT_TRUE(cum <= target && target < cum + freq);
  }
  std::uint32_t w = 0;
  EXPECT_EQ(q.mode(w), 4u);
  EXPECT_EQ(w, q.weight(4));
}

TEST(QuantizedPmf, UniformWhenEmpty) {
  QuantizedPmf q;
  q.assign({}, 256, alpha_to_fixed(1.0));
  for (std::uint32_t s = 0; s < 256; ++s) EXPECT_EQ(q.weight(s), 256u);
  QuantizedPmf r;
  r.assign({}, 3, alpha_to_fixed(1.0));
  EXPECT_EQ(r.weight(0), 21846u);  // remainder to the lowest index
  EXPECT_EQ(r.weight(1), 21845u);
  EXPECT_EQ(r.weight(2), 21845u);
}

TEST(QuantizedPmf, CloseToSmoothedFrequencies) {
  std::vector<std::uint64_t> counts{40, 0, 7, 1000, 2};
  QuantizedPmf q;
  q.assign(to_row(counts), 5, alpha_to_fixed(1.0));
  for (std::uint32_t s = 0; s < 5; ++s) {
    const double exact = (counts[s] + 1.0) / (1049.0 + 5.0);
    EXPECT_NEAR(double(q.weight(s)) / kPmfTotal, exact, 6.0 / kPmfTotal);
  }
}

TEST(Alpha, FixedPoint) {
  EXPECT_EQ(alpha_to_fixed(1.0), 65536u);
  EXPECT_EQ(alpha_to_fixed(0.1), 6554u);
  EXPECT_THROW(alpha_to_fixed(0.0), Error);
  EXPECT_THROW(alpha_to_fixed(-1.0), Error);
  EXPECT_THROW(alpha_to_fixed(1e-7), Error);
}

TEST(Causal, Order0CountsAreHistogram) {
  std::mt19937_64 rng(2);
  TokenGrid g(20, 30);
  std::map<std::uint32_t, std::uint64_t> hist;
  for (auto& t : g.tokens) {
    t = rng() % 17;
    ++hist[t];
  }
  CausalContextModel m(17, 0);
  std::vector<TokenGrid> corpus{g};
  m.train(corpus);
  for (std::uint32_t s = 0; s < 17; ++s) EXPECT_EQ(m.count({}, s), hist[s]);
}

TEST(Causal, Order2ContextsResetAtRowStart) {
  // one row [0 1 2 | 1 2 ...] of length 3, then second row
  TokenGrid g(2, 3, std::vector<std::uint32_t>{0, 1, 2, 1, 2, 0});
  CausalContextModel m(3, 2);
  std::vector<TokenGrid> corpus{g};
  m.train(corpus);
  const std::uint32_t X = kAbsent;
  std::vector<std::uint32_t> c;
  c = {X, X};
  EXPECT_EQ(m.count(c, 0), 1u);
  EXPECT_EQ(m.count(c, 1), 1u);
  c = {0, X};
  EXPECT_EQ(m.count(c, 1), 1u);
  c = {1, 0};
  EXPECT_EQ(m.count(c, 2), 1u);
  c = {1, X};
  EXPECT_EQ(m.count(c, 2), 1u);
  c = {2, 1};
  EXPECT_EQ(m.count(c, 0), 1u);
  c = {2, 0};  // the row boundary breaks 0 1 2 | 1 ...
  EXPECT_EQ(m.count(c, 1), 0u);
}

TEST(Causal, PmfSumsAndUnseenContextIsUniform) {
  CausalContextModel m(5, 1, 1.0);
  std::vector<std::uint32_t> ctx{3};
  const auto p = m.pmf(ctx);
  EXPECT_EQ(std::accumulate(p.weights.begin(), p.weights.end(), 0u), kPmfTotal);
  for (std::uint32_t s = 1; s < 5; ++s) EXPECT_EQ(p.weights[s], 13107u);
  m.update(ctx, 2);
  EXPECT_GT(m.pmf(ctx).weights[2], p.weights[2]);
}

TEST(Causal, UpdatesDoNotLeakIntoCopiesAndFreeze) {
  CausalContextModel m(4, 1);
  std::vector<std::uint32_t> ctx{1};
  m.update(ctx, 3);
  m.freeze();
  CausalContextModel copy = m;
  copy.update(ctx, 3);
  EXPECT_EQ(m.count(ctx, 3), 1u);
  EXPECT_EQ(copy.count(ctx, 3), 2u);
  const auto h = copy.descriptor_hash();
  copy.freeze();
  EXPECT_EQ(copy.descriptor_hash(), h);  // hash depends on counts, not storage split
  EXPECT_NE(m.descriptor_hash(), h);
}

TEST(Causal, CrossEntropyOracle) {
  TokenGrid g(1, 8, std::vector<std::uint32_t>{0, 0, 0, 1, 0, 0, 1, 0});
  CausalContextModel m(2, 0, 1.0);
  std::vector<TokenGrid> corpus{g};
  m.train(corpus);
  const auto p = m.pmf({});
  const double want = -(6 * std::log2(p.probability(0)) + 2 * std::log2(p.probability(1))) / 8;
  EXPECT_NEAR(m.cross_entropy(g), want, 1e-12);
  EXPECT_NEAR(p.probability(0), 7.0 / 10, 2.0 / kPmfTotal);
}

TEST(Causal, Errors) {
  EXPECT_THROW(CausalContextModel(1, 0), Error);
  EXPECT_THROW(CausalContextModel(32769, 0), Error);
  EXPECT_THROW(CausalContextModel(256, 8), Error);
  CausalContextModel m(4, 1);
  std::vector<std::uint32_t> bad{4};
  try {
    m.update(bad, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kRange);
  }
  std::vector<std::uint32_t> wrong_len{1, 1};
  EXPECT_THROW(m.pmf(wrong_len), Error);
}

TEST(Causal, SerializeRoundTrip) {
  std::mt19937_64 rng(3);
  TokenGrid g(16, 16);
  for (auto& t : g.tokens) t = rng() % 9;
  CausalContextModel m(9, 2, 0.25);
  std::vector<TokenGrid> corpus{g};
  m.train(corpus);
  const auto bytes = m.serialize();
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "GJCM");
  EXPECT_EQ(peek_model_kind(bytes), ModelKind::kCausal);
  const auto back = CausalContextModel::deserialize(bytes);
  EXPECT_EQ(back.serialize(), bytes);
  EXPECT_EQ(back.descriptor_hash(), m.descriptor_hash());
  EXPECT_EQ(back.order(), 2u);
  EXPECT_EQ(back.alpha_q(), m.alpha_q());
  EXPECT_DOUBLE_EQ(back.cross_entropy(g), m.cross_entropy(g));
  const auto dir = test::scratch_dir("causal");
  m.save((dir / "m.gjcm").string());
  EXPECT_EQ(CausalContextModel::load((dir / "m.gjcm").string()).serialize(), bytes);
  auto trunc = bytes;
  trunc.resize(trunc.size() - 3);
  EXPECT_THROW(CausalContextModel::deserialize(trunc), Error);
  EXPECT_THROW(NeighborhoodModel::deserialize(bytes), Error);
}

TEST(Neighborhood, CountsEverySubsetOfPresentNeighbors) {
  // 1x3 grid: center cell has left and right neighbors only
  TokenGrid g(1, 3, std::vector<std::uint32_t>{1, 2, 3});
  NeighborhoodModel m(4);
  std::vector<TokenGrid> corpus{g};
  m.train(corpus);
  using N = NeighborhoodModel::Neighbors;
  EXPECT_EQ(m.marginal_total(), 3u);
  EXPECT_EQ(m.count(N{kAbsent, 1, 3, kAbsent}, 2), 1u);
  EXPECT_EQ(m.count(N{kAbsent, 1, kAbsent, kAbsent}, 2), 1u);
  EXPECT_EQ(m.count(N{kAbsent, kAbsent, 3, kAbsent}, 2), 1u);
  EXPECT_EQ(m.count(N{}, 2), 1u);
  EXPECT_EQ(m.count(N{kAbsent, kAbsent, 2, kAbsent}, 1), 1u);
  // {}, {R=2}, {L=1,R=3}, {L=1}, {R=3}, {L=2}
  EXPECT_EQ(m.context_count(), 6u);
}

TEST(Neighborhood, BacksOffToTrainedConfiguration) {
  TokenGrid g(2, 2, std::vector<std::uint32_t>{0, 1, 1, 0});
  NeighborhoodModel m(3);
  std::vector<TokenGrid> corpus{g};
  m.train(corpus);
  using N = NeighborhoodModel::Neighbors;
  // never seen with up = 2, falls back to a subset that drops it
  const N n{2, 0, kAbsent, kAbsent};
  const auto k = m.resolve(n);
  EXPECT_EQ(k, m.key(N{kAbsent, 0, kAbsent, kAbsent}));
  EXPECT_EQ(m.pmf(n).weights, m.pmf(N{kAbsent, 0, kAbsent, kAbsent}).weights);
  // marginal matches a direct histogram
  const auto p = m.pmf(N{});
  EXPECT_NEAR(p.probability(0), 3.0 / 7, 2.0 / kPmfTotal);
  EXPECT_NEAR(p.probability(2), 1.0 / 7, 2.0 / kPmfTotal);
}

TEST(Neighborhood, NeighborsOfRespectsMask) {
  TokenGrid g(3, 3, std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5, 6, 7, 8});
  g.missing[g.index(0, 1)] = 1;
  const auto n = NeighborhoodModel::neighbors_of(g, 1, 1);
  EXPECT_EQ(n.up, kAbsent);
  EXPECT_EQ(n.left, 3u);
  EXPECT_EQ(n.right, 5u);
  EXPECT_EQ(n.down, 7u);
  const auto corner = NeighborhoodModel::neighbors_of(g, 2, 2);
  EXPECT_EQ(corner.right, kAbsent);
  EXPECT_EQ(corner.down, kAbsent);
}

TEST(Neighborhood, SerializeRoundTripAndErrors) {
  const auto img_tokens = [] {
    std::mt19937_64 rng(4);
    TokenGrid g(10, 10);
    for (auto& t : g.tokens) t = rng() % 6;
    return g;
  }();
  NeighborhoodModel m(6, 0.5);
  std::vector<TokenGrid> corpus{img_tokens};
  m.train(corpus);
  const auto bytes = m.serialize();
  EXPECT_EQ(peek_model_kind(bytes), ModelKind::kNeighborhood);
  EXPECT_EQ(NeighborhoodModel::deserialize(bytes).serialize(), bytes);
  EXPECT_THROW(CausalContextModel::deserialize(bytes), Error);
  using N = NeighborhoodModel::Neighbors;
  EXPECT_THROW(m.pmf(N{6, kAbsent, kAbsent, kAbsent}), Error);
  TokenGrid bad(1, 2, std::vector<std::uint32_t>{0, 7});
  std::vector<TokenGrid> bad_corpus{bad};
  EXPECT_THROW(m.train(bad_corpus), Error);
}

}  // namespace
}  // namespace genjscc
