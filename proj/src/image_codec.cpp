#include "image_codec.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "error.hpp"

namespace genjscc {

namespace {

// Mid-gray DC level; the prediction for the first block.
std::int32_t gray_dc_level(double step) { return sq_quantize(128.0 * kBlockSize, step); }

std::int32_t predict_dc(const std::vector<std::int32_t>& dc, int bx, int by, int across,
                        double step) {
  const bool has_left = bx > 0, has_up = by > 0;
  const std::size_t i = static_cast<std::size_t>(by) * across + bx;
  if (has_left && has_up) {
    const std::int64_t sum = std::int64_t{dc[i - 1]} + dc[i - across];
    return static_cast<std::int32_t>(sum >= 0 ? sum / 2 : -((-sum + 1) / 2));
  }
  if (has_left) return dc[i - 1];
  if (has_up) return dc[i - across];
  return gray_dc_level(step);
}

void check_step(double step) {
  require(std::isfinite(step) && step > 0.0, ErrorKind::kParameter, "quantizer step must be positive");
  require(sq_alphabet(step) <= kMaxAlphabet, ErrorKind::kParameter,
          "quantizer step too fine for the coder alphabet");
}

}  // namespace

std::uint32_t sq_alphabet(double step) {
  require(std::isfinite(step) && step > 0.0, ErrorKind::kParameter, "quantizer step must be positive");
  // |DC| <= 8 * 255 and |AC| <= 4 * 255; a DC residual spans twice the DC range.
  const double bound = std::ceil(2.0 * 8.0 * 255.0 / step) + 2.0;
  if (bound > double(kMaxAlphabet)) return kMaxAlphabet + 1;
  return static_cast<std::uint32_t>(2.0 * bound + 2.0);
}

std::uint32_t sq_level_to_symbol(std::int32_t level) {
  const std::int64_t v = level;
  return static_cast<std::uint32_t>(1 + (v >= 0 ? 2 * v : -2 * v - 1));
}

std::int32_t sq_symbol_to_level(std::uint32_t symbol) {
  require(symbol != kEndOfBlock, ErrorKind::kParameter, "end-of-block carries no level");
  const std::uint32_t u = symbol - 1;
  return (u & 1u) ? -static_cast<std::int32_t>((u + 1) / 2) : static_cast<std::int32_t>(u / 2);
}

std::vector<std::uint32_t> sq_symbols(const ImageGrid& image, double step) {
  check_step(step);
  const auto blocks = image_blocks(image);
  const int across = blocks_across(image.width);
  std::vector<std::int32_t> dc(blocks.size());
  std::vector<std::uint32_t> out;
  out.reserve(blocks.size() * 4);
  std::array<std::int32_t, kBlockArea> levels{};
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto coeffs = dct2_forward(blocks[b]);
    for (int rank = 0; rank < kBlockArea; ++rank) levels[rank] = sq_quantize(coeffs[kZigzag[rank]], step);
    dc[b] = levels[0];
    const int bx = static_cast<int>(b % across), by = static_cast<int>(b / across);
    out.push_back(sq_level_to_symbol(levels[0] - predict_dc(dc, bx, by, across, step)));
    int last = 0;
    for (int rank = 1; rank < kBlockArea; ++rank)
      if (levels[rank] != 0) last = rank;
    for (int rank = 1; rank <= last; ++rank) out.push_back(sq_level_to_symbol(levels[rank]));
    out.push_back(kEndOfBlock);
  }
  return out;
}

ImageGrid sq_reconstruct(std::span<const std::uint32_t> symbols, int width, int height, double step) {
  check_step(step);
  const int across = blocks_across(width);
  const std::size_t nblocks = static_cast<std::size_t>(across) * blocks_down(height);
  std::vector<std::int32_t> dc(nblocks);
  std::vector<PixelBlock> blocks(nblocks);
  std::size_t pos = 0;
  auto corrupt = [](const std::string& m) { fail(ErrorKind::kCorrupt, "sq stream: " + m); };
  for (std::size_t b = 0; b < nblocks; ++b) {
    if (pos >= symbols.size()) corrupt("ends before block " + std::to_string(b));
    if (symbols[pos] == kEndOfBlock) corrupt("missing DC level in block " + std::to_string(b));
    const int bx = static_cast<int>(b % across), by = static_cast<int>(b / across);
    dc[b] = sq_symbol_to_level(symbols[pos++]) + predict_dc(dc, bx, by, across, step);
    CoeffBlock coeffs{};
    coeffs[kZigzag[0]] = sq_dequantize(dc[b], step);
    int rank = 1;
    for (;; ++rank) {
      if (pos >= symbols.size()) corrupt("block " + std::to_string(b) + " lacks an end marker");
      const auto s = symbols[pos++];
      if (s == kEndOfBlock) break;
      if (rank >= kBlockArea) corrupt("block " + std::to_string(b) + " has more than 64 levels");
      coeffs[kZigzag[rank]] = sq_dequantize(sq_symbol_to_level(s), step);
    }
    blocks[b] = dct2_inverse(coeffs);
  }
  if (pos != symbols.size()) corrupt("trailing symbols after the last block");
  return blocks_to_image(blocks, width, height);
}

CausalContextModel sq_default_model(double step, std::uint32_t order, double alpha) {
  check_step(step);
  return CausalContextModel(sq_alphabet(step), order, alpha);
}

SqEncoding sq_encode_image(const ImageGrid& image, double step, const CausalContextModel& model,
                           bool adaptive) {
  check_step(step);
  if (model.alphabet() != sq_alphabet(step))
    fail(ErrorKind::kModelMismatch, "model alphabet " + std::to_string(model.alphabet()) +
                                        " does not match step " + std::to_string(step) +
                                        " (needs " + std::to_string(sq_alphabet(step)) + ")");
  const auto symbols = sq_symbols(image, step);
  SqEncoding enc;
  enc.step = step;
  enc.stream = ac_encode(symbols, model, adaptive);
  enc.reconstruction = sq_reconstruct(symbols, image.width, image.height, step);
  return enc;
}

ImageGrid sq_decode_image(const Bitstream& stream, int width, int height, double step,
                          const CausalContextModel& model, bool adaptive) {
  const auto symbols = ac_decode(stream, model, adaptive);
  return sq_reconstruct(symbols, width, height, step);
}

std::vector<double> sq_step_ladder() {
  std::vector<double> steps;
  for (int i = 0; i <= 48; ++i) steps.push_back(std::pow(2.0, i / 4.0));
  return steps;
}

std::optional<SqEncoding> sq_encode_to_budget(const ImageGrid& image, std::uint64_t max_bits,
                                              std::uint32_t order, double alpha) {
  const auto ladder = sq_step_ladder();
  auto encode = [&](std::size_t i) {
    return sq_encode_image(image, ladder[i], sq_default_model(ladder[i], order, alpha), true);
  };
  auto fits = [&](const SqEncoding& e) { return e.stream.size_bytes() * 8 <= max_bits; };

  // Stream size falls with the step almost everywhere; bisect for the first
  // fitting step, then walk coarser in case the guess sits on a bump.
  std::size_t lo = 0, hi = ladder.size() - 1;
  auto coarsest = encode(hi);
  if (!fits(coarsest)) return std::nullopt;
  std::optional<SqEncoding> best = std::move(coarsest);
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    auto e = encode(mid);
    if (fits(e)) {
      best = std::move(e);
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

TokenGrid vq_tokenize(const ImageGrid& image, const Codebook& codebook) {
  require(codebook.dim() == kPatchDim, ErrorKind::kParameter, "codebook dimension must be 16 for 4x4 patches");
  const auto patches = image_patches(image);
  const int rows = patches_down(image.height), cols = patches_across(image.width);
  TokenGrid grid(rows, cols);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid.tokens[i] = vq_encode(std::span<const double>(patches).subspan(i * kPatchDim, kPatchDim), codebook);
  return grid;
}

ImageGrid vq_reconstruct(const TokenGrid& grid, const Codebook& codebook, int width, int height) {
  require(codebook.dim() == kPatchDim, ErrorKind::kParameter, "codebook dimension must be 16 for 4x4 patches");
  require(grid.rows == patches_down(height) && grid.cols == patches_across(width), ErrorKind::kParameter,
          "token grid does not match image size");
  require(grid.missing_count() == 0, ErrorKind::kParameter, "vq_reconstruct: grid has missing cells");
  ImageGrid out(width, height);
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      const auto word = codebook.codeword(grid.at(r, c));
      for (int dy = 0; dy < kPatchSize; ++dy) {
        const int y = r * kPatchSize + dy;
        if (y >= height) break;
        for (int dx = 0; dx < kPatchSize; ++dx) {
          const int x = c * kPatchSize + dx;
          if (x >= width) break;
          const double v = std::round(double(word[dy * kPatchSize + dx]));
          out.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
      }
    }
  return out;
}

// ---------------------------------------------------------------------------

std::uint64_t CompressedImage::stream_bits() const {
  std::uint64_t bits = 0;
  for (const auto& s : streams) bits += 8 * s.size_bytes();
  return bits;
}

std::vector<std::uint8_t> CompressedImage::serialize() const {
  ByteWriter w;
  w.bytes("GJIM");
  w.u8(1);
  w.u8(static_cast<std::uint8_t>(mode));
  w.u32(static_cast<std::uint32_t>(width));
  w.u32(static_cast<std::uint32_t>(height));
  w.f64(step);
  w.u8(fresh_model ? 1 : 0);
  w.u8(order);
  w.u32(alpha_q);
  w.u32(static_cast<std::uint32_t>(streams.size()));
  for (const auto& s : streams) {
    const auto bytes = s.serialize();
    w.u32(static_cast<std::uint32_t>(bytes.size()));
    w.bytes(bytes);
  }
  return w.take();
}

CompressedImage CompressedImage::parse(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "compressed image");
  r.magic("GJIM");
  const auto version = r.u8("version");
  require(version == 1, ErrorKind::kFormat, "compressed image: unsupported version " + std::to_string(version));
  CompressedImage c;
  const auto mode = r.u8("mode");
  require(mode <= 1, ErrorKind::kFormat, "compressed image: unknown mode " + std::to_string(mode));
  c.mode = static_cast<CodecMode>(mode);
  const auto w = r.u32("width"), h = r.u32("height");
  require(w >= 1 && h >= 1 && w <= 65535 && h <= 65535, ErrorKind::kFormat,
          "compressed image: implausible dimensions");
  c.width = static_cast<int>(w);
  c.height = static_cast<int>(h);
  c.step = r.f64("step");
  const auto fresh = r.u8("model flag");
  require(fresh <= 1, ErrorKind::kFormat, "compressed image: bad model flag");
  c.fresh_model = fresh == 1;
  c.order = r.u8("order");
  c.alpha_q = r.u32("alpha");
  const auto n = r.u32("stream count");
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto len = r.u32("stream length");
    c.streams.push_back(Bitstream::parse(r.bytes(len, "stream")));
  }
  require(r.remaining() == 0, ErrorKind::kFormat, "compressed image: trailing bytes");
  return c;
}

// ---------------------------------------------------------------------------

std::vector<std::uint32_t> image_symbols(const ImageGrid& image, CodecMode mode, double step,
                                         const Codebook* codebook, std::size_t* row_length) {
  if (mode == CodecMode::kSq) {
    if (row_length) *row_length = 0;
    return sq_symbols(image, step);
  }
  require(codebook != nullptr, ErrorKind::kConfiguration, "vq mode needs a codebook");
  auto grid = vq_tokenize(image, *codebook);
  if (row_length) *row_length = static_cast<std::size_t>(grid.cols);
  return std::move(grid.tokens);
}

namespace {

CausalContextModel coding_model(CodecMode mode, double step, const Codebook* codebook,
                                std::uint32_t order, std::uint32_t alpha_q) {
  const std::uint32_t a = mode == CodecMode::kSq ? sq_alphabet(step) : codebook->size();
  return CausalContextModel(a, order, double(alpha_q) / kPmfTotal);
}

void check_model_alphabet(const CausalContextModel& model, std::uint32_t needed) {
  if (model.alphabet() != needed)
    fail(ErrorKind::kModelMismatch, "model alphabet " + std::to_string(model.alphabet()) +
                                        " does not match the codec alphabet " + std::to_string(needed));
}

}  // namespace

CompressedImage compress_image(const ImageGrid& image, const CompressOptions& options,
                               const Codebook* codebook, const CausalContextModel* model,
                               CompressStats* stats) {
  CompressedImage c;
  c.mode = options.mode;
  c.width = image.width;
  c.height = image.height;
  if (options.mode == CodecMode::kSq) {
    check_step(options.step);
    c.step = options.step;
  } else {
    require(codebook != nullptr, ErrorKind::kConfiguration, "vq mode needs a codebook");
  }
  std::size_t row_length = 0;
  const auto symbols = image_symbols(image, options.mode, options.step, codebook, &row_length);
  const std::uint32_t needed = options.mode == CodecMode::kSq ? sq_alphabet(options.step) : codebook->size();

  std::optional<CausalContextModel> fresh;
  if (model) {
    check_model_alphabet(*model, needed);
    c.fresh_model = false;
    c.order = static_cast<std::uint8_t>(model->order());
    c.alpha_q = model->alpha_q();
  } else {
    require(options.order <= 4, ErrorKind::kParameter, "context order must be <= 4");
    c.fresh_model = true;
    c.order = static_cast<std::uint8_t>(options.order);
    c.alpha_q = alpha_to_fixed(options.alpha);
    fresh.emplace(coding_model(options.mode, c.step, codebook, c.order, c.alpha_q));
    model = &*fresh;
  }
  c.streams.push_back(ac_encode(symbols, *model, true, row_length));
  if (stats) {
    stats->bits = 8ull * c.serialize().size();
    stats->symbols = symbols.size();
    stats->bpp = double(stats->bits) / double(image.pixel_count());
    stats->cross_entropy =
        symbols.empty() ? 0.0 : ideal_code_length_bits(symbols, *model, true, row_length) / double(symbols.size());
  }
  return c;
}

ImageGrid decompress_image(const CompressedImage& c, const Codebook* codebook, const CausalContextModel* model) {
  require(c.streams.size() == 1, ErrorKind::kFormat, "compressed image: expected exactly one stream");
  if (c.mode == CodecMode::kVq) require(codebook != nullptr, ErrorKind::kConfiguration, "vq stream needs a codebook");
  std::optional<CausalContextModel> fresh;
  if (!model) {
    require(c.fresh_model, ErrorKind::kConfiguration, "stream was coded with a trained model; supply the model file");
    fresh.emplace(coding_model(c.mode, c.step, codebook, c.order, c.alpha_q));
    model = &*fresh;
  }
  if (c.mode == CodecMode::kSq) {
    const auto symbols = ac_decode(c.streams[0], *model, true, 0);
    return sq_reconstruct(symbols, c.width, c.height, c.step);
  }
  const int rows = patches_down(c.height), cols = patches_across(c.width);
  auto symbols = ac_decode(c.streams[0], *model, true, static_cast<std::size_t>(cols));
  require(symbols.size() == static_cast<std::size_t>(rows) * cols, ErrorKind::kCorrupt,
          "vq stream: token count does not match the image size");
  for (auto t : symbols)
    require(t < codebook->size(), ErrorKind::kCorrupt, "vq stream: token outside the codebook");
  return vq_reconstruct(TokenGrid(rows, cols, std::move(symbols)), *codebook, c.width, c.height);
}

}  // namespace genjscc
