#include "analog_jscc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"

namespace genjscc {

JsccStatistics jscc_fit(std::span<const ImageGrid> images) {
  require(!images.empty(), ErrorKind::kParameter, "jscc_fit: no training images");
  std::array<double, kBlockArea> sum{}, sum_sq{};
  std::size_t n = 0;
  for (const auto& img : images) {
    for (const auto& block : image_blocks(img)) {
      const auto coeffs = dct2_forward(block);
      for (int rank = 0; rank < kBlockArea; ++rank) {
        const double c = coeffs[kZigzag[rank]];
        sum[rank] += c;
        sum_sq[rank] += c * c;
      }
      ++n;
    }
  }
  JsccStatistics stats;
  for (int rank = 0; rank < kBlockArea; ++rank) {
    stats.mean[rank] = sum[rank] / double(n);
    stats.variance[rank] = std::max(0.0, sum_sq[rank] / double(n) - stats.mean[rank] * stats.mean[rank]);
  }
  return stats;
}

std::size_t analog_budget(const ImageGrid& image, double bandwidth_ratio) {
  require(bandwidth_ratio > 0.0 && bandwidth_ratio <= 1.0, ErrorKind::kParameter,
          "bandwidth ratio must lie in (0, 1]");
  return static_cast<std::size_t>(std::floor(bandwidth_ratio * double(image.pixel_count())));
}

std::vector<int> select_positions(const JsccStatistics& stats, int per_block) {
  require(per_block >= 1 && per_block <= kBlockArea, ErrorKind::kParameter,
          "select_positions: per-block count must lie in [1, 64]");
  std::vector<int> ac(kBlockArea - 1);
  std::iota(ac.begin(), ac.end(), 1);
  std::stable_sort(ac.begin(), ac.end(),
                   [&](int a, int b) { return stats.variance[a] > stats.variance[b]; });
  std::vector<int> out{0};
  out.insert(out.end(), ac.begin(), ac.begin() + (per_block - 1));
  return out;
}

AnalogCode jscc_encode(const ImageGrid& image, const JsccStatistics& stats, double bandwidth_ratio) {
  const std::size_t budget = analog_budget(image, bandwidth_ratio);
  const auto blocks = image_blocks(image);
  if (budget < blocks.size())
    fail(ErrorKind::kParameter, "jscc_encode: budget of " + std::to_string(budget) +
                                    " symbols cannot carry a DC value for each of " +
                                    std::to_string(blocks.size()) + " blocks");
  const int per_block = static_cast<int>(std::min<std::size_t>(kBlockArea, budget / blocks.size()));

  AnalogCode code;
  code.width = image.width;
  code.height = image.height;
  code.budget = budget;
  code.positions = select_positions(stats, per_block);
  code.symbols.reserve(blocks.size() * code.positions.size());
  for (const auto& block : blocks) {
    const auto coeffs = dct2_forward(block);
    for (int rank : code.positions) code.symbols.push_back(coeffs[kZigzag[rank]] - stats.mean[rank]);
  }
  double power = 0.0;
  for (double s : code.symbols) power += s * s;
  power /= double(code.symbols.size());
  // A flat image matching the training means has nothing to send.
  code.scale = power > 0.0 ? 1.0 / std::sqrt(power) : 1.0;
  for (auto& s : code.symbols) s *= code.scale;
  return code;
}

std::vector<CoeffBlock> jscc_estimate_coefficients(const AnalogCode& received, double snr_db,
                                                   const JsccStatistics& stats) {
  const std::size_t nblocks =
      static_cast<std::size_t>(blocks_across(received.width)) * blocks_down(received.height);
  require(received.symbols.size() == nblocks * received.positions.size(), ErrorKind::kParameter,
          "jscc_decode: symbol count does not match metadata");
  const double noise = std::pow(10.0, -snr_db / 10.0) / (received.scale * received.scale);

  CoeffBlock prior{};
  for (int rank = 0; rank < kBlockArea; ++rank) prior[kZigzag[rank]] = stats.mean[rank];
  std::vector<CoeffBlock> out(nblocks, prior);
  std::size_t i = 0;
  for (std::size_t b = 0; b < nblocks; ++b)
    for (int rank : received.positions) {
      const double y = received.symbols[i++] / received.scale;
      const double var = stats.variance[rank];
      const double gain = var > 0.0 ? var / (var + noise) : 0.0;
      out[b][kZigzag[rank]] = stats.mean[rank] + gain * y;
    }
  return out;
}

ImageGrid jscc_decode(const AnalogCode& received, double snr_db, const JsccStatistics& stats) {
  const auto coeffs = jscc_estimate_coefficients(received, snr_db, stats);
  std::vector<PixelBlock> blocks;
  blocks.reserve(coeffs.size());
  for (const auto& c : coeffs) blocks.push_back(dct2_inverse(c));
  return blocks_to_image(blocks, received.width, received.height);
}

}  // namespace genjscc
