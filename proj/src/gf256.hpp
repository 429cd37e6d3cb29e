#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace genjscc::gf256 {

// GF(2^8) with reduction polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11D),
// generator 2. Table-driven.
inline constexpr unsigned kPolynomial = 0x11D;

std::uint8_t add(std::uint8_t a, std::uint8_t b);
std::uint8_t mul(std::uint8_t a, std::uint8_t b);
std::uint8_t div(std::uint8_t a, std::uint8_t b);
std::uint8_t inv(std::uint8_t a);
std::uint8_t exp(unsigned e);  // generator^e
unsigned log(std::uint8_t a);  // a != 0

/// dst[i] ^= c * src[i]
void mul_add(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src, std::uint8_t c);

// Dense row-major matrix over GF(256).
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> cells;

  Matrix(int r, int c) : rows(r), cols(c), cells(static_cast<std::size_t>(r) * c, 0) {}
  std::uint8_t& at(int r, int c) { return cells[static_cast<std::size_t>(r) * cols + c]; }
  std::uint8_t at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c]; }
};

Matrix multiply(const Matrix& a, const Matrix& b);
/// Gauss-Jordan inverse; returns false when singular.
bool invert(Matrix& m);

}  // namespace genjscc::gf256
