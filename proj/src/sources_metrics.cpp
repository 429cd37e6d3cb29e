#include "sources_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "binary_io.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace genjscc {

ImageGrid::ImageGrid(int w, int h, std::uint8_t fill)
    : width(w), height(h), samples(static_cast<std::size_t>(w) * h, fill) {
  require(w > 0 && h > 0, ErrorKind::kParameter, "image dimensions must be positive");
}

ImageGrid::ImageGrid(int w, int h, std::vector<std::uint8_t> data)
    : width(w), height(h), samples(std::move(data)) {
  require(w > 0 && h > 0, ErrorKind::kParameter, "image dimensions must be positive");
  require(samples.size() == static_cast<std::size_t>(w) * h, ErrorKind::kParameter,
          "sample count does not match width*height");
}

SampleSequence gen_ar1(std::size_t n, double rho, double sigma, std::uint64_t seed) {
  require(rho >= 0.0 && rho < 1.0, ErrorKind::kParameter, "gen_ar1: rho must lie in [0,1)");
  require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::kParameter, "gen_ar1: sigma must be > 0");
  require(n >= 1, ErrorKind::kParameter, "gen_ar1: n must be >= 1");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innovation = sigma * std::sqrt(1.0 - rho * rho);

  SampleSequence out{std::vector<double>(n), rho, sigma};
  double x = sigma * normal(rng);  // start in the stationary law
  out.values[0] = x;
  for (std::size_t t = 1; t < n; ++t) {
    x = rho * x + innovation * normal(rng);
    out.values[t] = x;
  }
  return out;
}

ImageGrid gen_ar1_image(int width, int height, double rho, double sigma,
                        double mean, std::uint64_t seed) {
  require(width > 0 && height > 0, ErrorKind::kParameter, "gen_ar1_image: bad dimensions");
  require(rho >= 0.0 && rho < 1.0, ErrorKind::kParameter, "gen_ar1_image: rho must lie in [0,1)");
  require(sigma > 0.0, ErrorKind::kParameter, "gen_ar1_image: sigma must be > 0");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s1 = std::sqrt(1.0 - rho * rho);

  // Row-wise AR(1) fields combined by an AR(1) recursion across rows keeps
  // the separable covariance and stationarity at every pixel.
  std::vector<double> prev(static_cast<std::size_t>(width));
  std::vector<double> row(static_cast<std::size_t>(width));
  auto fresh_row = [&](std::vector<double>& r) {
    r[0] = normal(rng);
    for (int x = 1; x < width; ++x) r[x] = rho * r[x - 1] + s1 * normal(rng);
  };

  ImageGrid img(width, height);
  std::vector<double> innov(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    if (y == 0) {
      fresh_row(row);
    } else {
      fresh_row(innov);
      for (int x = 0; x < width; ++x) row[x] = rho * prev[x] + s1 * innov[x];
    }
    for (int x = 0; x < width; ++x) {
      double v = std::round(mean + sigma * row[x]);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
    prev = row;
  }
  return img;
}

ImageGrid parse_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* field) {
    skip_space();
    long v = 0;
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000) fail(ErrorKind::kFormat, std::string("pgm: ") + field + " too large");
      ++pos;
    }
    if (pos == start) fail(ErrorKind::kFormat, std::string("pgm: missing or malformed ") + field);
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    fail(ErrorKind::kFormat, "pgm: magic is not P5 (binary grayscale)");
  pos = 2;
  long w = read_int("width");
  long h = read_int("height");
  long maxval = read_int("maxval");
  if (w <= 0 || h <= 0) fail(ErrorKind::kFormat, "pgm: width/height must be positive");
  if (maxval != 255) fail(ErrorKind::kFormat, "pgm: maxval must be 255, got " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    fail(ErrorKind::kFormat, "pgm: missing whitespace after maxval");
  ++pos;
  std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - pos < need)
    fail(ErrorKind::kFormat, "pgm: payload truncated (" + std::to_string(bytes.size() - pos) +
                                 " of " + std::to_string(need) + " bytes)");
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return ImageGrid(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

ImageGrid load_pgm(const std::string& path) { return parse_pgm(read_file(path)); }

std::vector<std::uint8_t> encode_pgm(const ImageGrid& image) {
  std::string header = "P5\n" + std::to_string(image.width) + " " +
                       std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.samples.begin(), image.samples.end());
  return out;
}

void save_pgm(const ImageGrid& image, const std::string& path) {
  write_file(path, encode_pgm(image));
}

double mse(const ImageGrid& a, const ImageGrid& b) {
  require(a.width == b.width && a.height == b.height, ErrorKind::kParameter,
          "image dimensions differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    double d = double(a.samples[i]) - double(b.samples[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.samples.size());
}

double psnr_from_mse(double m) {
  if (m <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

MetricsRow compute_metrics(const ImageGrid& original, const ImageGrid& reconstruction,
                           std::uint64_t total_bits, std::uint64_t channel_symbols) {
  MetricsRow row;
  row.mse = mse(original, reconstruction);
  row.psnr = psnr_from_mse(row.mse);
  const double pixels = static_cast<double>(original.pixel_count());
  row.bpp = static_cast<double>(total_bits) / pixels;
  row.bandwidth_ratio = static_cast<double>(channel_symbols) / pixels;
  return row;
}

double detect_cliff(std::span<const std::pair<double, double>> sweep) {
  require(sweep.size() >= 2, ErrorKind::kParameter, "detect_cliff needs at least two points");
  const bool ascending = sweep[1].first > sweep[0].first;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    bool ok = ascending ? sweep[i].first > sweep[i - 1].first
                        : sweep[i].first < sweep[i - 1].first;
    require(ok, ErrorKind::kParameter, "detect_cliff: conditions must be strictly ordered");
  }
  double worst = 0.0;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    double a = sweep[i - 1].second;
    double b = sweep[i].second;
    double drop;
    if (std::isinf(a) && std::isinf(b)) drop = 0.0;
    else drop = a - b;
    worst = std::max(worst, drop);
  }
  return worst;
}

ImageGrid mean_gray(const ImageGrid& image) {
  double sum = 0.0;
  for (auto s : image.samples) sum += s;
  auto level = static_cast<std::uint8_t>(std::lround(sum / static_cast<double>(image.pixel_count())));
  return ImageGrid(image.width, image.height, level);
}

}  // namespace genjscc
