#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "binary_io.hpp"
#include "error.hpp"
#include "sources_metrics.hpp"
#include "test_util.hpp"

namespace genjscc {
namespace {

double sample_mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double sample_var(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / v.size();
}

TEST(GenAr1, WhiteNoiseMoments) {
  const auto s = gen_ar1(1'000'000, 0.0, 1.0, 11);
  EXPECT_NEAR(sample_mean(s.values), 0.0, 0.01);
  EXPECT_NEAR(sample_var(s.values), 1.0, 0.02);
}

TEST(GenAr1, LagOneAutocorrelation) {
  const auto s = gen_ar1(1'000'000, 0.9, 1.0, 12);
  const double m = sample_mean(s.values);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t + 1 < s.values.size(); ++t) num += (s.values[t] - m) * (s.values[t + 1] - m);
  for (double x : s.values) den += (x - m) * (x - m);
  EXPECT_NEAR(num / den, 0.9, 0.01);
}

TEST(GenAr1, MarginalVarianceConverges) {
  for (double rho : {0.0, 0.5, 0.9}) {
    const auto s = gen_ar1(1'000'000, rho, 3.0, 13);
    EXPECT_NEAR(sample_var(s.values) / 9.0, 1.0, 0.02) << "rho " << rho;
  }
}

TEST(GenAr1, Deterministic) {
  EXPECT_EQ(gen_ar1(1000, 0.7, 2.0, 5).values, gen_ar1(1000, 0.7, 2.0, 5).values);
  EXPECT_NE(gen_ar1(1000, 0.7, 2.0, 5).values, gen_ar1(1000, 0.7, 2.0, 6).values);
}

TEST(GenAr1, RejectsBadParameters) {
  for (double rho : {-0.1, 1.0, 1.5}) {
    try {
      gen_ar1(10, rho, 1.0, 1);
      FAIL() << "rho " << rho;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kParameter);
    }
  }
  EXPECT_THROW(gen_ar1(10, 0.5, 0.0, 1), Error);
  EXPECT_THROW(gen_ar1(10, 0.5, -1.0, 1), Error);
  EXPECT_THROW(gen_ar1(0, 0.5, 1.0, 1), Error);
}

TEST(Ar1Image, DeterministicAndCorrelated) {
  const auto a = gen_ar1_image(64, 48, 0.9, 30.0, 128.0, 3);
  EXPECT_EQ(a, gen_ar1_image(64, 48, 0.9, 30.0, 128.0, 3));
  EXPECT_EQ(a.width, 64);
  EXPECT_EQ(a.height, 48);
  // Horizontal and vertical neighbors are both strongly correlated.
  double h = 0, v = 0, var = 0, mean = 0;
  for (auto s : a.samples) mean += s;
  mean /= a.samples.size();
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      const double d = a.at(x, y) - mean;
      var += d * d;
      if (x + 1 < a.width) h += d * (a.at(x + 1, y) - mean);
      if (y + 1 < a.height) v += d * (a.at(x, y + 1) - mean);
    }
  EXPECT_GT(h / var, 0.7);
  EXPECT_GT(v / var, 0.7);
}

TEST(Pgm, ParsesCraftedFile) {
  const std::string text = "P5\n2 2\n255\n";
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  for (int b : {0, 128, 255, 7}) bytes.push_back(static_cast<std::uint8_t>(b));
  const auto img = parse_pgm(bytes);
  ASSERT_EQ(img.width, 2);
  ASSERT_EQ(img.height, 2);
  EXPECT_EQ(img.at(0, 0), 0);
  EXPECT_EQ(img.at(1, 0), 128);
  EXPECT_EQ(img.at(0, 1), 255);
  EXPECT_EQ(img.at(1, 1), 7);
}

TEST(Pgm, HeaderComments) {
  const std::string text = "P5 # comment\n# another\n1 1\n255\nx";
  const auto img = parse_pgm(std::vector<std::uint8_t>(text.begin(), text.end()));
  EXPECT_EQ(img.samples, std::vector<std::uint8_t>{'x'});
}

std::string format_error(const std::string& text) {
  try {
    parse_pgm(std::vector<std::uint8_t>(text.begin(), text.end()));
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
    return e.what();
  }
  ADD_FAILURE() << "no error for " << text;
  return {};
}

TEST(Pgm, ErrorsNameTheField) {
  EXPECT_NE(format_error("P6\n2 2\n255\n............").find("magic"), std::string::npos);
  EXPECT_NE(format_error("P5\n2 2\n65535\n....").find("maxval"), std::string::npos);
  EXPECT_NE(format_error("P5\n2 2\n255\nabc").find("payload"), std::string::npos);
  EXPECT_NE(format_error("P5\n2\n").find("height"), std::string::npos);
}

TEST(Pgm, SaveLoadRoundTrip) {
  const auto dir = test::scratch_dir("pgm");
  const auto img = test::random_image(64, 64, 99);
  const auto path = (dir / "r.pgm").string();
  save_pgm(img, path);
  EXPECT_EQ(load_pgm(path), img);
}

TEST(Pgm, MissingFileIsIoError) {
  try {
    load_pgm("/nonexistent/dir/x.pgm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(Metrics, IdenticalImages) {
  const auto img = test::random_image(16, 16, 1);
  const auto m = compute_metrics(img, img, 0, 0);
  EXPECT_EQ(m.mse, 0.0);
  EXPECT_TRUE(std::isinf(m.psnr));
  EXPECT_FALSE(m.decode_failed);
  EXPECT_EQ(m.bpp, 0.0);
  EXPECT_EQ(m.bandwidth_ratio, 0.0);
}

TEST(Metrics, BandwidthRatioOfLargeImage) {
  const ImageGrid img(512, 768, 10);
  const auto m = compute_metrics(img, img, 0, 7864);
  EXPECT_DOUBLE_EQ(m.bandwidth_ratio, 7864.0 / 393216.0);
  EXPECT_LE(m.bandwidth_ratio, 0.02);
}

TEST(Metrics, MaximalError) {
  const auto m = compute_metrics(ImageGrid(8, 8, 0), ImageGrid(8, 8, 255), 64, 0);
  EXPECT_EQ(m.mse, 65025.0);
  EXPECT_EQ(m.psnr, 0.0);
  EXPECT_EQ(m.bpp, 1.0);
}

TEST(Metrics, PsnrFormula) {
  for (double mse_v : {0.5, 1.0, 37.0, 1000.0}) EXPECT_DOUBLE_EQ(psnr_from_mse(mse_v), 10.0 * std::log10(65025.0 / mse_v));
}

TEST(Metrics, LinearInNumerators) {
  const ImageGrid img(10, 10, 3);
  EXPECT_DOUBLE_EQ(compute_metrics(img, img, 300, 50).bpp, 3 * compute_metrics(img, img, 100, 50).bpp);
  EXPECT_DOUBLE_EQ(compute_metrics(img, img, 0, 60).bandwidth_ratio, 3 * compute_metrics(img, img, 0, 20).bandwidth_ratio);
}

TEST(Metrics, DimensionMismatch) { EXPECT_THROW(compute_metrics(ImageGrid(4, 4), ImageGrid(4, 5), 0, 0), Error); }

TEST(DetectCliff, Examples) {
  const std::vector<std::pair<double, double>> flat{{6, 30}, {4, 30}, {2, 30}};
  EXPECT_EQ(detect_cliff(flat), 0.0);
  const std::vector<std::pair<double, double>> cliff{{6, 30}, {4, 29}, {2, 8}};
  EXPECT_EQ(detect_cliff(cliff), 21.0);
  const std::vector<std::pair<double, double>> gentle{{6, 30}, {4, 28.6}, {2, 27.2}, {0, 26.0}};
  EXPECT_LE(detect_cliff(gentle), 1.5);
}

TEST(DetectCliff, InvariantToOffset) {
  const std::vector<std::pair<double, double>> a{{0.05, 30}, {0.1, 27.5}, {0.2, 21}, {0.3, 22}};
  auto b = a;
  for (auto& p : b) p.second += 13.25;
  EXPECT_DOUBLE_EQ(detect_cliff(a), detect_cliff(b));
  EXPECT_DOUBLE_EQ(detect_cliff(a), 6.5);
}

TEST(DetectCliff, Errors) {
  const std::vector<std::pair<double, double>> one{{1, 2}};
  EXPECT_THROW(detect_cliff(one), Error);
  const std::vector<std::pair<double, double>> unordered{{6, 30}, {4, 30}, {5, 30}};
  EXPECT_THROW(detect_cliff(unordered), Error);
}

TEST(MeanGray, RoundedMean) {
  ImageGrid img(2, 1);
  img.samples = {10, 13};
  EXPECT_EQ(mean_gray(img).samples, (std::vector<std::uint8_t>{12, 12}));
}

}  // namespace
}  // namespace genjscc
