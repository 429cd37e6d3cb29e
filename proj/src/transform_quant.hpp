#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sources_metrics.hpp"

namespace genjscc {

inline constexpr int kBlockSize = 8;
inline constexpr int kBlockArea = kBlockSize * kBlockSize;

// 8x8 coefficients stored row-major (frequency v, u); use kZigzag to walk
// them in zigzag rank order.
using CoeffBlock = std::array<double, kBlockArea>;
using PixelBlock = std::array<double, kBlockArea>;

// kZigzag[rank] = row-major index of the coefficient with that zigzag rank.
extern const std::array<int, kBlockArea> kZigzag;

CoeffBlock dct2_forward(const PixelBlock& block);
PixelBlock dct2_inverse(const CoeffBlock& coeffs);

/// Splits an image into 8x8 blocks in raster order. Edges are padded by
/// replicating the last row/column.
std::vector<PixelBlock> image_blocks(const ImageGrid& image);
int blocks_across(int width);
int blocks_down(int height);
/// Reassembles blocks, cropping padding and rounding/clamping to 8 bits.
ImageGrid blocks_to_image(std::span<const PixelBlock> blocks, int width, int height);

std::int32_t sq_quantize(double x, double step);
double sq_dequantize(std::int32_t symbol, double step);

// ---------------------------------------------------------------------------
// Vector quantization

class Codebook {
 public:
  Codebook() = default;
  /// Validates K >= 2, finite entries and pairwise-distinct codewords.
  Codebook(std::uint32_t dim, std::vector<float> codewords, std::uint64_t train_seed);

  std::uint32_t size() const { return k_; }
  std::uint32_t dim() const { return dim_; }
  std::uint64_t train_seed() const { return train_seed_; }
  std::span<const float> codeword(std::uint32_t token) const;
  std::span<const float> flat() const { return words_; }

  std::vector<std::uint8_t> serialize() const;
  static Codebook deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::string& path) const;
  static Codebook load(const std::string& path);

  friend bool operator==(const Codebook&, const Codebook&) = default;

 private:
  std::uint32_t k_ = 0;
  std::uint32_t dim_ = 0;
  std::vector<float> words_;
  std::uint64_t train_seed_ = 0;
};

inline constexpr std::uint32_t kMaxCodebookSize = 1024;

struct VqTrainResult {
  Codebook codebook;
  std::vector<double> distortion;  // mean squared error after each assignment pass
};

/// Lloyd k-means over `vectors` (n x dim, row-major).
VqTrainResult vq_train(std::span<const double> vectors, std::uint32_t dim, std::uint32_t k,
                       int iters, std::uint64_t seed);

std::uint32_t vq_encode(std::span<const double> vector, const Codebook& codebook);
std::vector<double> vq_decode(std::uint32_t token, const Codebook& codebook);

// 4x4 pixel patches for the token path.
inline constexpr int kPatchSize = 4;
inline constexpr int kPatchDim = kPatchSize * kPatchSize;

/// Row-major list of 4x4 patches (edge-replicated), each as 16 doubles.
std::vector<double> image_patches(const ImageGrid& image);
int patches_across(int width);
int patches_down(int height);

}  // namespace genjscc
