#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sources_metrics.hpp"
#include "transform_quant.hpp"

namespace genjscc {

// Per-zigzag-rank coefficient statistics over all 8x8 blocks of a training set.
struct JsccStatistics {
  std::array<double, kBlockArea> mean{};
  std::array<double, kBlockArea> variance{};
};

JsccStatistics jscc_fit(std::span<const ImageGrid> images);

// Linear analog code. Positions and scale are side information assumed to
// arrive intact; only `symbols` cross the noisy channel.
struct AnalogCode {
  int width = 0;
  int height = 0;
  std::size_t budget = 0;       // channel uses allotted by the bandwidth ratio
  std::vector<int> positions;   // zigzag ranks sent in every block
  double scale = 1.0;           // symbols = (coefficient - mean) * scale
  std::vector<double> symbols;  // block-major, positions-minor
};

/// Number of channel uses allotted: floor(ratio * pixels).
std::size_t analog_budget(const ImageGrid& image, double bandwidth_ratio);

/// DC first, then AC ranks by decreasing training variance (lower rank on ties).
std::vector<int> select_positions(const JsccStatistics& stats, int per_block);

AnalogCode jscc_encode(const ImageGrid& image, const JsccStatistics& stats, double bandwidth_ratio);

/// Per-coefficient linear MMSE estimate mean + var / (var + noise) * y, with
/// the noise variance implied by snr_db; unsent coefficients take their mean.
ImageGrid jscc_decode(const AnalogCode& received, double snr_db, const JsccStatistics& stats);

/// Coefficients the receiver reconstructs before the inverse transform.
std::vector<CoeffBlock> jscc_estimate_coefficients(const AnalogCode& received, double snr_db,
                                                   const JsccStatistics& stats);

}  // namespace genjscc
