#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <limits>
#include <set>

#include "error.hpp"
#include "test_util.hpp"
#include "transform_quant.hpp"

namespace genjscc {
namespace {

// Direct double-sum DCT-II with orthonormal scaling, written independently
// of the library's separable implementation.
CoeffBlock naive_dct(const PixelBlock& x) {
  CoeffBlock out{};
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(1.0 / 8) : std::sqrt(2.0 / 8);
      const double cv = v == 0 ? std::sqrt(1.0 / 8) : std::sqrt(2.0 / 8);
      double acc = 0.0;
      for (int y = 0; y < 8; ++y)
        for (int xx = 0; xx < 8; ++xx)
          acc += x[y * 8 + xx] * std::cos((2 * xx + 1) * u * std::numbers::pi / 16) *
                 std::cos((2 * y + 1) * v * std::numbers::pi / 16);
      out[v * 8 + u] = cu * cv * acc;
    }
  return out;
}

PixelBlock random_block(std::mt19937_64& rng, double lo = 0, double hi = 255) {
  std::uniform_real_distribution<double> d(lo, hi);
  PixelBlock b;
  for (auto& x : b) x = d(rng);
  return b;
}

TEST(Dct, ConstantBlock) {
  PixelBlock b;
  b.fill(100.0);
  const auto c = dct2_forward(b);
  EXPECT_NEAR(c[0], 800.0, 1e-9);
  for (int i = 1; i < kBlockArea; ++i) EXPECT_NEAR(c[i], 0.0, 1e-9);
}

TEST(Dct, MatchesNaiveFormula) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto b = random_block(rng);
    const auto a = dct2_forward(b);
    const auto o = naive_dct(b);
    for (int i = 0; i < kBlockArea; ++i) EXPECT_NEAR(a[i], o[i], 1e-9);
  }
}

TEST(Dct, RoundTripAndParsevalFuzz) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 1000; ++t) {
    const auto b = random_block(rng, -1000, 1000);
    const auto c = dct2_forward(b);
    const auto back = dct2_inverse(c);
    double e_pix = 0, e_coef = 0, worst = 0;
    for (int i = 0; i < kBlockArea; ++i) {
      worst = std::max(worst, std::fabs(back[i] - b[i]));
      e_pix += b[i] * b[i];
      e_coef += c[i] * c[i];
    }
    ASSERT_LT(worst, 1e-9);
    ASSERT_LE(std::fabs(e_coef - e_pix) / e_pix, 1e-6);
  }
}

TEST(Dct, RejectsNonFinite) {
  PixelBlock b{};
  b[5] = std::nan("");
  EXPECT_THROW(dct2_forward(b), Error);
}

TEST(Zigzag, IsPermutationStartingWithDcAndLowFrequencies) {
  std::set<int> seen(kZigzag.begin(), kZigzag.end());
  EXPECT_EQ(seen.size(), 64u);
  EXPECT_EQ(kZigzag[0], 0);
  EXPECT_EQ(kZigzag[1], 1);   // (v=0, u=1)
  EXPECT_EQ(kZigzag[2], 8);   // (v=1, u=0)
  EXPECT_EQ(kZigzag[3], 16);
  EXPECT_EQ(kZigzag[63], 63);
  // Anti-diagonal index u+v never decreases along the scan.
  for (int r = 1; r < 64; ++r) EXPECT_GE(kZigzag[r] / 8 + kZigzag[r] % 8, kZigzag[r - 1] / 8 + kZigzag[r - 1] % 8);
}

TEST(Blocks, SplitAndReassemble) {
  const auto img = test::random_image(21, 13, 4);
  const auto blocks = image_blocks(img);
  EXPECT_EQ(blocks.size(), 3u * 2u);
  EXPECT_EQ(blocks_to_image(blocks, 21, 13), img);
  // Edge padding replicates the last column.
  EXPECT_EQ(blocks[2][7], img.at(20, 0));
}

TEST(Sq, Examples) {
  EXPECT_EQ(sq_quantize(2.4, 1.0), 2);
  EXPECT_EQ(sq_quantize(-2.5, 1.0), -3);
  EXPECT_EQ(sq_quantize(2.5, 1.0), 3);
  EXPECT_EQ(sq_quantize(3.6, 0.5), 7);
  EXPECT_DOUBLE_EQ(sq_dequantize(7, 0.5), 3.5);
  EXPECT_LE(std::fabs(sq_dequantize(sq_quantize(3.6, 0.5), 0.5) - 3.6), 0.25);
}

TEST(Sq, ErrorBoundFuzz) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> x(-5000, 5000), s(0.01, 100);
  for (int i = 0; i < 100000; ++i) {
    const double v = x(rng), step = s(rng);
    ASSERT_LE(std::fabs(sq_dequantize(sq_quantize(v, step), step) - v), step / 2 * (1 + 1e-12));
  }
}

TEST(Sq, Errors) {
  EXPECT_THROW(sq_quantize(std::nan(""), 1.0), Error);
  EXPECT_THROW(sq_quantize(std::numeric_limits<double>::infinity(), 1.0), Error);
  EXPECT_THROW(sq_quantize(1.0, 0.0), Error);
  EXPECT_THROW(sq_quantize(1.0, -1.0), Error);
}

Codebook two_point() { return Codebook(2, {0.f, 0.f, 1.f, 1.f}, 0); }

TEST(Vq, NearestAndTies) {
  const auto cb = two_point();
  const std::vector<double> a{0.2, 0.1};
  EXPECT_EQ(vq_encode(a, cb), 0u);
  const std::vector<double> tie{0.5, 0.5};
  EXPECT_EQ(vq_encode(tie, cb), 0u);
  const std::vector<double> b{0.9, 0.7};
  EXPECT_EQ(vq_encode(b, cb), 1u);
}

TEST(Vq, CodewordsAreFixedPoints) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> data(500 * 3);
  for (auto& v : data) v = n(rng);
  const auto cb = vq_train(data, 3, 32, 5, 1).codebook;
  for (std::uint32_t t = 0; t < cb.size(); ++t) {
    const auto d = vq_decode(t, cb);
    EXPECT_EQ(vq_encode(d, cb), t);
    for (std::uint32_t j = 0; j < 3; ++j) EXPECT_EQ(d[j], double(cb.codeword(t)[j]));
  }
}

TEST(Vq, EncodeIsExhaustiveArgmin) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> data(600 * 4);
  for (auto& v : data) v = n(rng);
  const auto cb = vq_train(data, 4, 64, 4, 2).codebook;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(4);
    for (auto& x : v) x = 2 * n(rng);
    const auto t = vq_encode(v, cb);
    auto dist = [&](std::uint32_t j) {
      double d = 0;
      for (int i = 0; i < 4; ++i) d += (v[i] - cb.codeword(j)[i]) * (v[i] - cb.codeword(j)[i]);
      return d;
    };
    for (std::uint32_t j = 0; j < cb.size(); ++j) ASSERT_LE(dist(t), dist(j));
  }
}

TEST(Vq, DecodeRangeError) {
  try {
    vq_decode(2, two_point());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kRange);
  }
}

TEST(VqTrain, ExactlyKPoints) {
  const std::vector<double> pts{0, 0, 5, 1, -3, 2, 7, 7};
  const auto r = vq_train(pts, 2, 4, 10, 3);
  std::multiset<std::pair<float, float>> want{{0, 0}, {5, 1}, {-3, 2}, {7, 7}}, got;
  for (std::uint32_t t = 0; t < 4; ++t) got.insert({r.codebook.codeword(t)[0], r.codebook.codeword(t)[1]});
  EXPECT_EQ(got, want);
  EXPECT_EQ(r.distortion.back(), 0.0);
}

TEST(VqTrain, TwoSeparatedClusters) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> pts;
  double mean[2][2] = {};
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 1000; ++i) {
      const double x = c * 20 + n(rng), y = c * -15 + n(rng);
      pts.push_back(x);
      pts.push_back(y);
      mean[c][0] += x / 1000;
      mean[c][1] += y / 1000;
    }
  const auto cb = vq_train(pts, 2, 2, 20, 4).codebook;
  for (int c = 0; c < 2; ++c) {
    const std::vector<double> m{mean[c][0], mean[c][1]};
    const auto t = vq_encode(m, cb);
    EXPECT_NEAR(cb.codeword(t)[0], mean[c][0], 0.1);
    EXPECT_NEAR(cb.codeword(t)[1], mean[c][1], 0.1);
  }
}

TEST(VqTrain, DistortionMonotone) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> pts(800 * 3);
    for (auto& v : pts) v = u(rng);
    const auto r = vq_train(pts, 3, 40, 15, trial);
    ASSERT_EQ(r.distortion.size(), 16u);
    for (std::size_t i = 1; i < r.distortion.size(); ++i) EXPECT_LE(r.distortion[i], r.distortion[i - 1] + 1e-12);
  }
}

TEST(VqTrain, InsampleErrorBounded) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> pts(400 * 2);
  for (auto& v : pts) v = u(rng);
  const auto cb = vq_train(pts, 2, 16, 10, 1).codebook;
  double worst = 0;
  for (std::size_t i = 0; i < 400; ++i) {
    const std::span<const double> v(pts.data() + 2 * i, 2);
    const auto d = vq_decode(vq_encode(v, cb), cb);
    worst = std::max(worst, std::hypot(d[0] - v[0], d[1] - v[1]));
  }
  EXPECT_LT(worst, 1.0);
}

TEST(VqTrain, Errors) {
  const std::vector<double> dup{1, 1, 1, 1, 2, 2};
  EXPECT_THROW(vq_train(dup, 2, 3, 5, 1), Error);  // only two distinct points
  std::vector<double> many(2000 * 2);
  for (std::size_t i = 0; i < many.size(); ++i) many[i] = double(i);
  try {
    vq_train(many, 2, 1025, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfiguration);
  }
}

TEST(Codebook, Validation) {
  EXPECT_THROW(Codebook(2, {0.f, 0.f}, 0), Error);                       // K = 1
  EXPECT_THROW(Codebook(2, {0.f, 0.f, 0.f, 0.f}, 0), Error);             // duplicate
  EXPECT_THROW(Codebook(2, {0.f, NAN, 1.f, 1.f}, 0), Error);             // non-finite
}

TEST(Codebook, FileRoundTripAndLayout) {
  const Codebook cb(2, {0.f, 1.5f, -2.f, 3.25f, 9.f, 9.f}, 77);
  const auto bytes = cb.serialize();
  ASSERT_EQ(bytes.size(), 4u + 1 + 4 + 4 + 8 + 6 * 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "GJCB");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 3);  // K, little-endian
  EXPECT_EQ(bytes[9], 2);  // dim
  EXPECT_EQ(bytes[13], 77);
  EXPECT_EQ(Codebook::deserialize(bytes), cb);
  const auto dir = test::scratch_dir("codebook");
  cb.save((dir / "c.gjcb").string());
  EXPECT_EQ(Codebook::load((dir / "c.gjcb").string()), cb);
  auto bad = bytes;
  bad.pop_back();
  EXPECT_THROW(Codebook::deserialize(bad), Error);
}

TEST(Patches, LayoutAndPadding) {
  const auto img = test::random_image(6, 5, 11);
  const auto p = image_patches(img);
  EXPECT_EQ(patches_across(6), 2);
  EXPECT_EQ(patches_down(5), 2);
  ASSERT_EQ(p.size(), 4u * kPatchDim);
  EXPECT_EQ(p[0], img.at(0, 0));
  EXPECT_EQ(p[kPatchDim + 1], img.at(5, 0));  // padded from the last column
  EXPECT_EQ(p[3 * kPatchDim + 15], img.at(5, 4));
}

}  // namespace
}  // namespace genjscc
