#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "context_models.hpp"
#include "entropy_codec.hpp"
#include "sources_metrics.hpp"
#include "token_grid.hpp"
#include "transform_quant.hpp"

namespace genjscc {

// ---------------------------------------------------------------------------
// Scalar-quantized DCT codec
//
// Each 8x8 block becomes: the DC residual against a prediction from already
// coded DC levels, the AC levels in zigzag order up to the last nonzero one,
// then an end-of-block symbol. Symbol 0 is end-of-block; level v maps to
// 1 + (v >= 0 ? 2v : -2v - 1).

inline constexpr std::uint32_t kEndOfBlock = 0;

/// Alphabet large enough for every level of any 8-bit image at this step.
std::uint32_t sq_alphabet(double step);

std::uint32_t sq_level_to_symbol(std::int32_t level);
std::int32_t sq_symbol_to_level(std::uint32_t symbol);

std::vector<std::uint32_t> sq_symbols(const ImageGrid& image, double step);
/// Inverse of sq_symbols; kCorrupt when the sequence does not describe
/// exactly the blocks of a width x height image.
ImageGrid sq_reconstruct(std::span<const std::uint32_t> symbols, int width, int height, double step);

CausalContextModel sq_default_model(double step, std::uint32_t order, double alpha);

struct SqEncoding {
  double step = 0.0;
  Bitstream stream;
  ImageGrid reconstruction;  // what a decoder of `stream` produces
};

SqEncoding sq_encode_image(const ImageGrid& image, double step, const CausalContextModel& model,
                           bool adaptive);
ImageGrid sq_decode_image(const Bitstream& stream, int width, int height, double step,
                          const CausalContextModel& model, bool adaptive);

/// Quantizer steps tried by rate control, finest first: 2^(i/4), i = 0..48.
std::vector<double> sq_step_ladder();

/// Finest ladder step whose full stream (header included) fits in
/// `max_bits`, coded with a fresh adaptive model of the given order.
std::optional<SqEncoding> sq_encode_to_budget(const ImageGrid& image, std::uint64_t max_bits,
                                              std::uint32_t order, double alpha);

// ---------------------------------------------------------------------------
// 4x4 VQ tokens

TokenGrid vq_tokenize(const ImageGrid& image, const Codebook& codebook);
/// Pastes codewords back, crops to width x height, rounds and clamps.
/// Every cell must be present.
ImageGrid vq_reconstruct(const TokenGrid& grid, const Codebook& codebook, int width, int height);

// ---------------------------------------------------------------------------
// Compressed image container
// "GJIM" | u8 version | u8 mode | u32 width | u32 height | f64 step |
// u8 fresh model | u8 order | u32 alpha_q | u32 stream count | { u32 length | GJS1 stream }*
// A fresh model is an untrained adaptive model the decoder can rebuild from
// (alphabet, order, alpha_q); otherwise the decoder must supply the model file.

enum class CodecMode : std::uint8_t { kSq = 0, kVq = 1 };

struct CompressedImage {
  CodecMode mode = CodecMode::kSq;
  int width = 0;
  int height = 0;
  double step = 0.0;  // kSq only
  bool fresh_model = true;
  std::uint8_t order = 0;
  std::uint32_t alpha_q = 0;
  std::vector<Bitstream> streams;

  std::uint64_t stream_bits() const;
  std::vector<std::uint8_t> serialize() const;
  static CompressedImage parse(std::span<const std::uint8_t> bytes);
};

struct CompressOptions {
  CodecMode mode = CodecMode::kSq;
  double step = 1.0;
  std::uint32_t order = 0;  // fresh model only
  double alpha = 1.0;       // fresh model only
};

struct CompressStats {
  std::uint64_t bits = 0;     // whole container
  std::uint64_t symbols = 0;
  double bpp = 0.0;
  double cross_entropy = 0.0; // ideal bits per symbol under the coding model
};

/// Codes an image with a trained causal `model` or, when null, a fresh
/// adaptive one. VQ mode requires a codebook.
CompressedImage compress_image(const ImageGrid& image, const CompressOptions& options,
                               const Codebook* codebook, const CausalContextModel* model,
                               CompressStats* stats = nullptr);
ImageGrid decompress_image(const CompressedImage& compressed, const Codebook* codebook,
                           const CausalContextModel* model);

/// Symbol sequences a causal model for this mode is trained on.
std::vector<std::uint32_t> image_symbols(const ImageGrid& image, CodecMode mode, double step,
                                         const Codebook* codebook, std::size_t* row_length);

}  // namespace genjscc
