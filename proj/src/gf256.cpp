#include "gf256.hpp"

#include <array>
#include <utility>

#include "error.hpp"

namespace genjscc::gf256 {

namespace {

struct Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<unsigned, 256> log{};
  Tables() {
    unsigned x = 1;
    for (unsigned i = 0; i < 255; ++i) {
      exp[i] = static_cast<std::uint8_t>(x);
      log[x] = i;
      x <<= 1;
      if (x & 0x100) x ^= kPolynomial;
    }
    for (unsigned i = 255; i < 512; ++i) exp[i] = exp[i - 255];
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

}  // namespace

std::uint8_t add(std::uint8_t a, std::uint8_t b) { return a ^ b; }

std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
  if (a == 0 || b == 0) return 0;
  const auto& t = tables();
  return t.exp[t.log[a] + t.log[b]];
}

std::uint8_t div(std::uint8_t a, std::uint8_t b) {
  require(b != 0, ErrorKind::kParameter, "gf256: division by zero");
  if (a == 0) return 0;
  const auto& t = tables();
  return t.exp[t.log[a] + 255 - t.log[b]];
}

std::uint8_t inv(std::uint8_t a) { return div(1, a); }

std::uint8_t exp(unsigned e) { return tables().exp[e % 255]; }

unsigned log(std::uint8_t a) {
  require(a != 0, ErrorKind::kParameter, "gf256: log of zero");
  return tables().log[a];
}

void mul_add(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src, std::uint8_t c) {
  if (c == 0) return;
  const auto& t = tables();
  const unsigned lc = t.log[c];
  for (std::size_t i = 0; i < dst.size(); ++i)
    if (src[i]) dst[i] ^= t.exp[t.log[src[i]] + lc];
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, ErrorKind::kParameter, "gf256: matrix shape mismatch");
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      std::uint8_t s = 0;
      for (int k = 0; k < a.cols; ++k) s ^= mul(a.at(i, k), b.at(k, j));
      out.at(i, j) = s;
    }
  return out;
}

bool invert(Matrix& m) {
  require(m.rows == m.cols, ErrorKind::kParameter, "gf256: only square matrices invert");
  const int n = m.rows;
  Matrix aug(n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) aug.at(i, j) = m.at(i, j);
    aug.at(i, n + i) = 1;
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    while (pivot < n && aug.at(pivot, col) == 0) ++pivot;
    if (pivot == n) return false;
    if (pivot != col)
      for (int j = 0; j < 2 * n; ++j) std::swap(aug.at(pivot, j), aug.at(col, j));
    const std::uint8_t scale = inv(aug.at(col, col));
    for (int j = 0; j < 2 * n; ++j) aug.at(col, j) = mul(aug.at(col, j), scale);
    for (int i = 0; i < n; ++i) {
      if (i == col || aug.at(i, col) == 0) continue;
      const std::uint8_t f = aug.at(i, col);
      for (int j = 0; j < 2 * n; ++j) aug.at(i, j) ^= mul(f, aug.at(col, j));
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.at(i, j) = aug.at(i, n + j);
  return true;
}

}  // namespace genjscc::gf256
