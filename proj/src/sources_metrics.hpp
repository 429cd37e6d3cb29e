#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace genjscc {

struct SampleSequence {
  std::vector<double> values;
  double rho = 0.0;
  double sigma = 1.0;
};

// 8-bit grayscale raster, row-major.
struct ImageGrid {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> samples;

  ImageGrid() = default;
  ImageGrid(int w, int h, std::uint8_t fill = 0);
  ImageGrid(int w, int h, std::vector<std::uint8_t> data);

  std::size_t pixel_count() const { return samples.size(); }
  std::uint8_t at(int x, int y) const { return samples[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return samples[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;
};

struct MetricsRow {
  double bpp = 0.0;
  double bandwidth_ratio = 0.0;
  double mse = 0.0;
  double psnr = 0.0;  // +inf when mse == 0
  bool decode_failed = false;
};

/// Stationary Gaussian AR(1): x_t = rho x_{t-1} + w_t, marginal variance sigma^2.
SampleSequence gen_ar1(std::size_t n, double rho, double sigma, std::uint64_t seed);

/// Separable 2-D AR(1) texture around `mean`, clamped and rounded to 8 bits.
/// The underlying Gaussian field has correlation rho^|dx| * rho^|dy|.
ImageGrid gen_ar1_image(int width, int height, double rho, double sigma,
                        double mean, std::uint64_t seed);

ImageGrid load_pgm(const std::string& path);
ImageGrid parse_pgm(std::span<const std::uint8_t> bytes);
void save_pgm(const ImageGrid& image, const std::string& path);
std::vector<std::uint8_t> encode_pgm(const ImageGrid& image);

double mse(const ImageGrid& a, const ImageGrid& b);
double psnr_from_mse(double mse);

MetricsRow compute_metrics(const ImageGrid& original, const ImageGrid& reconstruction,
                           std::uint64_t total_bits, std::uint64_t channel_symbols);

/// Largest PSNR drop between adjacent points of a sweep ordered from the
/// best to the worst channel condition. Rises count as zero drop.
double detect_cliff(std::span<const std::pair<double, double>> sweep);

/// Mean-gray image with the rounded mean intensity of `image`.
ImageGrid mean_gray(const ImageGrid& image);

}  // namespace genjscc
