#include "concealment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "error.hpp"

namespace genjscc {

namespace {

void check_alphabet(const TokenGrid& grid, const NeighborhoodModel& model) {
  require(grid.missing.size() == grid.tokens.size(), ErrorKind::kParameter,
          "conceal: mask and tokens differ in size");
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!grid.missing[i] && grid.tokens[i] >= model.alphabet())
      fail(ErrorKind::kParameter, "conceal: grid token " + std::to_string(grid.tokens[i]) +
                                      " does not fit the model alphabet of " +
                                      std::to_string(model.alphabet()));
}

}  // namespace

TokenGrid conceal(const TokenGrid& grid, const NeighborhoodModel& model, FillSchedule schedule,
                  std::size_t* steps) {
  check_alphabet(grid, model);
  TokenGrid out = grid;
  std::size_t taken = 0;
  QuantizedPmf pmf;

  auto predict = [&](std::size_t cell, std::uint32_t& weight) {
    const int r = static_cast<int>(cell / static_cast<std::size_t>(out.cols));
    const int c = static_cast<int>(cell % static_cast<std::size_t>(out.cols));
    model.pmf_into(NeighborhoodModel::neighbors_of(out, r, c), pmf);
    return pmf.mode(weight);
  };

  if (schedule == FillSchedule::kRaster) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!out.missing[i]) continue;
      std::uint32_t w = 0;
      out.tokens[i] = predict(i, w);
      out.missing[i] = 0;
      ++taken;
    }
  } else {
    // (-confidence, cell); begin() is the next cell to fill
    std::set<std::pair<std::int64_t, std::size_t>> queue;
    std::vector<std::int64_t> key(out.size(), 0);
    std::vector<std::uint32_t> guess(out.size(), 0);
    auto refresh = [&](std::size_t cell) {
      std::uint32_t w = 0;
      guess[cell] = predict(cell, w);
      key[cell] = -static_cast<std::int64_t>(w);
      queue.emplace(key[cell], cell);
    };
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out.missing[i]) refresh(i);

    while (!queue.empty()) {
      const std::size_t cell = queue.begin()->second;
      queue.erase(queue.begin());
      out.tokens[cell] = guess[cell];
      out.missing[cell] = 0;
      ++taken;
      const int r = static_cast<int>(cell / static_cast<std::size_t>(out.cols));
      const int c = static_cast<int>(cell % static_cast<std::size_t>(out.cols));
      const int dr[4] = {-1, 0, 0, 1};
      const int dc[4] = {0, -1, 1, 0};
      for (int d = 0; d < 4; ++d) {
        const int rr = r + dr[d], cc = c + dc[d];
        if (rr < 0 || cc < 0 || rr >= out.rows || cc >= out.cols) continue;
        const std::size_t n = out.index(rr, cc);
        if (!out.missing[n]) continue;
        queue.erase({key[n], n});
        refresh(n);
      }
    }
  }
  if (steps) *steps = taken;
  return out;
}

TokenGrid marginal_fill(const TokenGrid& grid, const NeighborhoodModel& model) {
  check_alphabet(grid, model);
  QuantizedPmf pmf;
  model.pmf_into(NeighborhoodModel::Neighbors{}, pmf);
  std::uint32_t w = 0;
  const std::uint32_t mode = pmf.mode(w);
  TokenGrid out = grid;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out.missing[i]) {
      out.tokens[i] = mode;
      out.missing[i] = 0;
    }
  return out;
}

std::vector<std::size_t> PacketAssignment::cells_of(std::uint32_t p) const {
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < owner.size(); ++i)
    if (owner[i] == p) cells.push_back(i);
  return cells;
}

PacketAssignment strided_assignment(int rows, int cols, std::uint32_t packets) {
  require(rows > 0 && cols > 0, ErrorKind::kParameter, "strided_assignment: empty grid");
  require(packets >= 1, ErrorKind::kParameter, "strided_assignment: need at least one packet");
  PacketAssignment a{rows, cols, packets, {}};
  a.owner.resize(static_cast<std::size_t>(rows) * cols);
  const auto stride = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::sqrt(double(packets))));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      a.owner[static_cast<std::size_t>(r) * cols + c] =
          static_cast<std::uint32_t>((static_cast<std::uint64_t>(r) * stride + c) % packets);
  return a;
}

TokenGrid apply_loss_mask(const TokenGrid& grid, std::span<const std::uint32_t> lost_packets,
                          const PacketAssignment& assignment) {
  require(assignment.rows == grid.rows && assignment.cols == grid.cols &&
              assignment.owner.size() == grid.size(),
          ErrorKind::kParameter, "apply_loss_mask: assignment does not cover the grid");
  for (auto o : assignment.owner)
    require(o < assignment.packets, ErrorKind::kParameter,
            "apply_loss_mask: assignment is not a partition into the declared packets");
  std::vector<std::uint8_t> lost(assignment.packets, 0);
  for (auto p : lost_packets) {
    require(p < assignment.packets, ErrorKind::kRange, "apply_loss_mask: unknown packet id");
    lost[p] = 1;
  }
  TokenGrid out = grid;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (lost[assignment.owner[i]]) out.missing[i] = 1;
  return out;
}

double token_accuracy(const TokenGrid& truth, const TokenGrid& estimate,
                      std::span<const std::uint8_t> only_where) {
  require(truth.size() == estimate.size(), ErrorKind::kParameter, "token_accuracy: size mismatch");
  std::size_t hit = 0, n = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!only_where.empty() && !only_where[i]) continue;
    ++n;
    hit += truth.tokens[i] == estimate.tokens[i];
  }
  return n ? double(hit) / double(n) : 1.0;
}

}  // namespace genjscc
