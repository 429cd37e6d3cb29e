#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "context_models.hpp"
#include "token_grid.hpp"

namespace genjscc {

enum class FillSchedule {
  kConfidence,  // most confident missing cell first, raster order on ties
  kRaster,      // plain raster order (ablation)
};

/// Fills every missing cell with the argmax token of the neighborhood
/// model given the neighbors available at that moment. `steps`, when
/// given, receives the number of fill steps taken.
TokenGrid conceal(const TokenGrid& grid, const NeighborhoodModel& model,
                  FillSchedule schedule = FillSchedule::kConfidence, std::size_t* steps = nullptr);

/// Baseline: every missing cell gets the marginal argmax token.
TokenGrid marginal_fill(const TokenGrid& grid, const NeighborhoodModel& model);

// Maps each grid cell to the packet that carries it.
struct PacketAssignment {
  int rows = 0;
  int cols = 0;
  std::uint32_t packets = 0;
  std::vector<std::uint32_t> owner;  // row-major, one entry per cell

  /// Cells of packet p in raster order.
  std::vector<std::size_t> cells_of(std::uint32_t p) const;
};

/// Diagonal stride: cell (r, c) -> (r * s + c) mod P with s = max(1, floor(sqrt(P))).
/// Horizontal neighbors differ by 1 and vertical ones by s (mod P), so the
/// cells of one packet are never 4-adjacent.
PacketAssignment strided_assignment(int rows, int cols, std::uint32_t packets);

/// Marks cells owned by lost packets as missing.
TokenGrid apply_loss_mask(const TokenGrid& grid, std::span<const std::uint32_t> lost_packets,
                          const PacketAssignment& assignment);

/// Fraction of cells whose tokens agree.
double token_accuracy(const TokenGrid& truth, const TokenGrid& estimate,
                      std::span<const std::uint8_t> only_where = {});

}  // namespace genjscc
