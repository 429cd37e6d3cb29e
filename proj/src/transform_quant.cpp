#include "transform_quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "binary_io.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace genjscc {

const std::array<int, kBlockArea> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

namespace {

// basis[k][n] = a(k) cos(pi (2n+1) k / 16)
const std::array<std::array<double, kBlockSize>, kBlockSize>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, kBlockSize>, kBlockSize> b{};
    const double pi = std::acos(-1.0);
    for (int k = 0; k < kBlockSize; ++k) {
      double a = k == 0 ? std::sqrt(1.0 / kBlockSize) : std::sqrt(2.0 / kBlockSize);
      for (int n = 0; n < kBlockSize; ++n)
        b[k][n] = a * std::cos(pi * (2 * n + 1) * k / (2.0 * kBlockSize));
    }
    return b;
  }();
  return basis;
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) fail(ErrorKind::kParameter, std::string(what) + ": non-finite input");
}

}  // namespace

CoeffBlock dct2_forward(const PixelBlock& block) {
  check_finite(block, "dct2_forward");
  const auto& c = dct_basis();
  std::array<double, kBlockArea> tmp{};
  // rows: tmp[y][u] = sum_x c[u][x] block[y][x]
  for (int y = 0; y < kBlockSize; ++y)
    for (int u = 0; u < kBlockSize; ++u) {
      double s = 0.0;
      for (int x = 0; x < kBlockSize; ++x) s += c[u][x] * block[y * kBlockSize + x];
      tmp[y * kBlockSize + u] = s;
    }
  CoeffBlock out{};
  for (int v = 0; v < kBlockSize; ++v)
    for (int u = 0; u < kBlockSize; ++u) {
      double s = 0.0;
      for (int y = 0; y < kBlockSize; ++y) s += c[v][y] * tmp[y * kBlockSize + u];
      out[v * kBlockSize + u] = s;
    }
  return out;
}

PixelBlock dct2_inverse(const CoeffBlock& coeffs) {
  check_finite(coeffs, "dct2_inverse");
  const auto& c = dct_basis();
  std::array<double, kBlockArea> tmp{};
  for (int y = 0; y < kBlockSize; ++y)
    for (int u = 0; u < kBlockSize; ++u) {
      double s = 0.0;
      for (int v = 0; v < kBlockSize; ++v) s += c[v][y] * coeffs[v * kBlockSize + u];
      tmp[y * kBlockSize + u] = s;
    }
  PixelBlock out{};
  for (int y = 0; y < kBlockSize; ++y)
    for (int x = 0; x < kBlockSize; ++x) {
      double s = 0.0;
      for (int u = 0; u < kBlockSize; ++u) s += c[u][x] * tmp[y * kBlockSize + u];
      out[y * kBlockSize + x] = s;
    }
  return out;
}

int blocks_across(int width) { return (width + kBlockSize - 1) / kBlockSize; }
int blocks_down(int height) { return (height + kBlockSize - 1) / kBlockSize; }

std::vector<PixelBlock> image_blocks(const ImageGrid& image) {
  const int bx = blocks_across(image.width);
  const int by = blocks_down(image.height);
  std::vector<PixelBlock> blocks(static_cast<std::size_t>(bx) * by);
  for (int j = 0; j < by; ++j)
    for (int i = 0; i < bx; ++i) {
      auto& b = blocks[static_cast<std::size_t>(j) * bx + i];
      for (int y = 0; y < kBlockSize; ++y)
        for (int x = 0; x < kBlockSize; ++x) {
          int sx = std::min(i * kBlockSize + x, image.width - 1);
          int sy = std::min(j * kBlockSize + y, image.height - 1);
          b[y * kBlockSize + x] = image.at(sx, sy);
        }
    }
  return blocks;
}

ImageGrid blocks_to_image(std::span<const PixelBlock> blocks, int width, int height) {
  const int bx = blocks_across(width);
  require(blocks.size() == static_cast<std::size_t>(bx) * blocks_down(height),
          ErrorKind::kParameter, "block count does not match image size");
  ImageGrid img(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const auto& b = blocks[static_cast<std::size_t>(y / kBlockSize) * bx + x / kBlockSize];
      double v = std::round(b[(y % kBlockSize) * kBlockSize + x % kBlockSize]);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  return img;
}

std::int32_t sq_quantize(double x, double step) {
  require(step > 0.0 && std::isfinite(step), ErrorKind::kParameter, "sq_quantize: step must be > 0");
  require(std::isfinite(x), ErrorKind::kParameter, "sq_quantize: non-finite input");
  double q = std::round(x / step);  // half away from zero
  require(std::fabs(q) < 2147483647.0, ErrorKind::kRange, "sq_quantize: symbol overflows int32");
  return static_cast<std::int32_t>(q);
}

double sq_dequantize(std::int32_t symbol, double step) {
  require(step > 0.0 && std::isfinite(step), ErrorKind::kParameter, "sq_dequantize: step must be > 0");
  return symbol * step;
}

// ---------------------------------------------------------------------------

Codebook::Codebook(std::uint32_t dim, std::vector<float> codewords, std::uint64_t train_seed)
    : dim_(dim), words_(std::move(codewords)), train_seed_(train_seed) {
  require(dim_ >= 1, ErrorKind::kParameter, "codebook dimension must be >= 1");
  require(words_.size() % dim_ == 0, ErrorKind::kParameter, "codebook size is not a multiple of dim");
  k_ = static_cast<std::uint32_t>(words_.size() / dim_);
  require(k_ >= 2, ErrorKind::kParameter, "codebook needs at least 2 codewords");
  require(k_ <= kMaxCodebookSize, ErrorKind::kConfiguration,
          "codebook size " + std::to_string(k_) + " exceeds " + std::to_string(kMaxCodebookSize) +
              " (large codebooks go underused)");
  for (float f : words_) require(std::isfinite(f), ErrorKind::kParameter, "codeword is not finite");

  std::vector<std::uint32_t> order(k_);
  std::iota(order.begin(), order.end(), 0u);
  auto row = [&](std::uint32_t t) { return words_.begin() + static_cast<std::ptrdiff_t>(t) * dim_; };
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return std::lexicographical_compare(row(a), row(a) + dim_, row(b), row(b) + dim_);
  });
  for (std::uint32_t i = 1; i < k_; ++i)
    require(!std::equal(row(order[i - 1]), row(order[i - 1]) + dim_, row(order[i])),
            ErrorKind::kParameter, "codebook contains duplicate codewords");
}

std::span<const float> Codebook::codeword(std::uint32_t token) const {
  require(token < k_, ErrorKind::kRange,
          "token " + std::to_string(token) + " out of range for codebook of size " + std::to_string(k_));
  return std::span<const float>(words_).subspan(static_cast<std::size_t>(token) * dim_, dim_);
}

std::vector<std::uint8_t> Codebook::serialize() const {
  ByteWriter w;
  w.bytes("GJCB");
  w.u8(1);
  w.u32(k_);
  w.u32(dim_);
  w.u64(train_seed_);
  for (float f : words_) w.f32(f);
  return w.take();
}

Codebook Codebook::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "codebook");
  r.magic("GJCB");
  auto version = r.u8("version");
  require(version == 1, ErrorKind::kFormat, "codebook: unsupported version " + std::to_string(version));
  auto k = r.u32("K");
  auto dim = r.u32("dim");
  auto seed = r.u64("train_seed");
  require(dim >= 1 && k >= 2 && k <= kMaxCodebookSize, ErrorKind::kFormat, "codebook: bad K or dim");
  std::vector<float> words(static_cast<std::size_t>(k) * dim);
  for (auto& f : words) f = r.f32("codewords");
  require(r.remaining() == 0, ErrorKind::kFormat, "codebook: trailing bytes");
  return Codebook(dim, std::move(words), seed);
}

void Codebook::save(const std::string& path) const { write_file(path, serialize()); }
Codebook Codebook::load(const std::string& path) { return deserialize(read_file(path)); }

namespace {

double sq_dist(const double* a, const double* b, std::uint32_t dim) {
  double s = 0.0;
  for (std::uint32_t d = 0; d < dim; ++d) {
    double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

}  // namespace

VqTrainResult vq_train(std::span<const double> vectors, std::uint32_t dim, std::uint32_t k,
                       int iters, std::uint64_t seed) {
  require(dim >= 1 && vectors.size() % dim == 0, ErrorKind::kParameter,
          "vq_train: training data is not a whole number of vectors");
  require(k >= 2, ErrorKind::kParameter, "vq_train: K must be >= 2");
  require(k <= kMaxCodebookSize, ErrorKind::kConfiguration,
          "vq_train: K=" + std::to_string(k) + " exceeds " + std::to_string(kMaxCodebookSize) +
              "; large codebooks leave most codewords unused");
  require(iters >= 0, ErrorKind::kParameter, "vq_train: iters must be >= 0");
  for (double v : vectors)
    require(std::isfinite(v), ErrorKind::kParameter, "vq_train: non-finite training value");

  const std::size_t n = vectors.size() / dim;
  auto vec = [&](std::size_t i) { return vectors.data() + i * dim; };

  // Distinct training points, in a canonical order.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return std::lexicographical_compare(vec(a), vec(a) + dim, vec(b), vec(b) + dim) ||
           (std::equal(vec(a), vec(a) + dim, vec(b)) && a < b);
  });
  idx.erase(std::unique(idx.begin(), idx.end(),
                        [&](auto a, auto b) { return std::equal(vec(a), vec(a) + dim, vec(b)); }),
            idx.end());
  require(idx.size() >= k, ErrorKind::kParameter,
          "vq_train: need at least K=" + std::to_string(k) + " distinct vectors, have " +
              std::to_string(idx.size()));

  Rng rng(seed);
  for (std::uint32_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<double> centroids(static_cast<std::size_t>(k) * dim);
  for (std::uint32_t c = 0; c < k; ++c)
    std::copy(vec(idx[c]), vec(idx[c]) + dim, centroids.begin() + static_cast<std::ptrdiff_t>(c) * dim);

  std::vector<std::uint32_t> assign(n);
  std::vector<double> dist(n);
  std::vector<double> history;

  auto assign_pass = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t arg = 0;
      for (std::uint32_t c = 0; c < k; ++c) {
        double d = sq_dist(vec(i), centroids.data() + static_cast<std::size_t>(c) * dim, dim);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      assign[i] = arg;
      dist[i] = best;
      total += best;
    }
    history.push_back(total / static_cast<double>(n));
  };

  // An empty cluster owns no points, so moving it never raises distortion.
  auto reseed_empty = [&](const std::vector<std::size_t>& counts) {
    for (std::uint32_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = static_cast<std::size_t>(
          std::max_element(dist.begin(), dist.end()) - dist.begin());
      double* cent = centroids.data() + static_cast<std::size_t>(c) * dim;
      std::copy(vec(far), vec(far) + dim, cent);
      for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], sq_dist(vec(i), cent, dim));
    }
  };

  std::vector<std::size_t> counts(k);
  for (int it = 0; it < iters; ++it) {
    assign_pass();
    std::fill(centroids.begin(), centroids.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      double* cent = centroids.data() + static_cast<std::size_t>(assign[i]) * dim;
      for (std::uint32_t d = 0; d < dim; ++d) cent[d] += vec(i)[d];
      ++counts[assign[i]];
    }
    for (std::uint32_t c = 0; c < k; ++c)
      if (counts[c])
        for (std::uint32_t d = 0; d < dim; ++d)
          centroids[static_cast<std::size_t>(c) * dim + d] /= static_cast<double>(counts[c]);
    reseed_empty(counts);
  }
  assign_pass();
  std::fill(counts.begin(), counts.end(), 0);
  for (auto a : assign) ++counts[a];
  reseed_empty(counts);

  std::vector<float> words(centroids.begin(), centroids.end());
  return {Codebook(dim, std::move(words), seed), std::move(history)};
}

std::uint32_t vq_encode(std::span<const double> vector, const Codebook& codebook) {
  require(vector.size() == codebook.dim(), ErrorKind::kParameter,
          "vq_encode: vector dimension does not match codebook");
  const auto words = codebook.flat();
  const std::uint32_t dim = codebook.dim();
  double best = std::numeric_limits<double>::infinity();
  std::uint32_t arg = 0;
  for (std::uint32_t c = 0; c < codebook.size(); ++c) {
    double s = 0.0;
    const float* w = words.data() + static_cast<std::size_t>(c) * dim;
    for (std::uint32_t d = 0; d < dim; ++d) {
      double t = vector[d] - double(w[d]);
      s += t * t;
    }
    if (s < best) {
      best = s;
      arg = c;
    }
  }
  return arg;
}

std::vector<double> vq_decode(std::uint32_t token, const Codebook& codebook) {
  auto w = codebook.codeword(token);
  return std::vector<double>(w.begin(), w.end());
}

int patches_across(int width) { return (width + kPatchSize - 1) / kPatchSize; }
int patches_down(int height) { return (height + kPatchSize - 1) / kPatchSize; }

std::vector<double> image_patches(const ImageGrid& image) {
  const int px = patches_across(image.width);
  const int py = patches_down(image.height);
  std::vector<double> out(static_cast<std::size_t>(px) * py * kPatchDim);
  std::size_t o = 0;
  for (int j = 0; j < py; ++j)
    for (int i = 0; i < px; ++i)
      for (int y = 0; y < kPatchSize; ++y)
        for (int x = 0; x < kPatchSize; ++x) {
          int sx = std::min(i * kPatchSize + x, image.width - 1);
          int sy = std::min(j * kPatchSize + y, image.height - 1);
          out[o++] = image.at(sx, sy);
        }
  return out;
}

}  // namespace genjscc
