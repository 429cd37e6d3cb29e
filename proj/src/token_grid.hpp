#pragma once

#include <cstdint>
#include <vector>

#include "error.hpp"

namespace genjscc {

// Lattice of token indices with a missing-mask, row-major.
struct TokenGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint32_t> tokens;
  std::vector<std::uint8_t> missing;

  TokenGrid() = default;
  TokenGrid(int r, int c, std::uint32_t fill = 0)
      : rows(r), cols(c),
        tokens(static_cast<std::size_t>(r) * c, fill),
        missing(static_cast<std::size_t>(r) * c, 0) {
    require(r > 0 && c > 0, ErrorKind::kParameter, "token grid dimensions must be positive");
  }
  TokenGrid(int r, int c, std::vector<std::uint32_t> t)
      : rows(r), cols(c), tokens(std::move(t)), missing(tokens.size(), 0) {
    require(r > 0 && c > 0, ErrorKind::kParameter, "token grid dimensions must be positive");
    require(tokens.size() == static_cast<std::size_t>(r) * c, ErrorKind::kParameter,
            "token count does not match rows*cols");
  }

  std::size_t size() const { return tokens.size(); }
  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * cols + c; }
  std::uint32_t at(int r, int c) const { return tokens[index(r, c)]; }
  bool is_missing(int r, int c) const { return missing[index(r, c)] != 0; }
  std::size_t missing_count() const {
    std::size_t n = 0;
    for (auto m : missing) n += m != 0;
    return n;
  }

  friend bool operator==(const TokenGrid&, const TokenGrid&) = default;
};

}  // namespace genjscc
