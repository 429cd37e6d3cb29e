#include "entropy_codec.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "error.hpp"

namespace genjscc {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
}

std::vector<std::uint8_t> Bitstream::serialize() const {
  ByteWriter w;
  w.bytes("GJS1");
  w.u8(version);
  w.u16(alphabet);
  w.u32(count);
  w.u64(model_hash);
  w.bytes(payload);
  return w.take();
}

Bitstream Bitstream::parse(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "bitstream");
  r.magic("GJS1");
  Bitstream b;
  b.version = r.u8("version");
  require(b.version == 1, ErrorKind::kFormat, "bitstream: unsupported version " + std::to_string(b.version));
  b.alphabet = r.u16("alphabet");
  b.count = r.u32("symbol count");
  b.model_hash = r.u64("model hash");
  auto rest = r.rest();
  b.payload.assign(rest.begin(), rest.end());
  return b;
}

// ---------------------------------------------------------------------------

void RangeEncoder::emit(std::uint8_t b) {
  if (leading_) {
    leading_ = false;
    return;
  }
  out_.push_back(b);
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      emit(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--pending_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++pending_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(std::uint32_t cum, std::uint32_t freq) {
  const std::uint64_t r = range_;
  const auto lo = static_cast<std::uint32_t>((r * cum) >> kPmfBits);
  const auto hi = static_cast<std::uint32_t>((r * (cum + freq)) >> kPmfBits);
  low_ += lo;
  range_ = hi - lo;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  // range >= 2^24, so a multiple of 2^24 lies inside [low, low + range).
  low_ = (low_ + (kTop - 1)) & ~std::uint64_t{kTop - 1};
  shift_low();
  shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> payload) : in_(payload) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next();
  if (code_ >= range_) fail(ErrorKind::kCorrupt, "bitstream: invalid initial code value");
}

std::uint8_t RangeDecoder::next() {
  // past the end reads as zero; the mirror check rejects any stream that needed it wrongly
  std::uint8_t b = pos_ < in_.size() ? in_[pos_] : 0;
  ++pos_;
  return b;
}

std::uint32_t RangeDecoder::decode(const QuantizedPmf& pmf, std::uint32_t& cum,
                                   std::uint32_t& freq) {
  const std::uint64_t r = range_;
  // Largest c with floor(r * c / 2^16) <= code; it lies in the coded symbol's interval.
  const auto target = static_cast<std::uint32_t>((((std::uint64_t{code_} + 1) << kPmfBits) - 1) / r);
  const std::uint32_t s = pmf.find(target, cum, freq);
  const auto lo = static_cast<std::uint32_t>((r * cum) >> kPmfBits);
  const auto hi = static_cast<std::uint32_t>((r * (cum + freq)) >> kPmfBits);
  if (code_ < lo || code_ >= hi) fail(ErrorKind::kCorrupt, "bitstream: code value left its interval");
  code_ -= lo;
  range_ = hi - lo;
  while (range_ < kTop) {
    code_ = (code_ << 8) | next();
    range_ <<= 8;
  }
  return s;
}

// ---------------------------------------------------------------------------

Bitstream ac_encode(std::span<const std::uint32_t> symbols, const CausalContextModel& model,
                    bool adaptive, std::size_t row_length) {
  for (std::size_t i = 0; i < symbols.size(); ++i)
    if (symbols[i] >= model.alphabet())
      fail(ErrorKind::kRange, "ac_encode: symbol " + std::to_string(symbols[i]) + " at position " +
                                  std::to_string(i) + " outside alphabet of size " +
                                  std::to_string(model.alphabet()));
  require(symbols.size() <= 0xFFFFFFFFull, ErrorKind::kParameter, "ac_encode: too many symbols");

  Bitstream out;
  out.alphabet = static_cast<std::uint16_t>(model.alphabet());
  out.count = static_cast<std::uint32_t>(symbols.size());
  out.model_hash = model.descriptor_hash();
  if (symbols.empty()) return out;

  CausalContextModel working = model;
  RangeEncoder enc;
  QuantizedPmf pmf;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const auto key = working.context_key_at(symbols, i, row_length);
    working.pmf_for_key(key, pmf);
    enc.encode(pmf.cumulative(symbols[i]), pmf.weight(symbols[i]));
    if (adaptive) working.update_key(key, symbols[i]);
  }
  out.payload = enc.finish();
  return out;
}

std::vector<std::uint32_t> ac_decode(const Bitstream& stream, const CausalContextModel& model,
                                     bool adaptive, std::size_t row_length) {
  if (stream.alphabet != model.alphabet())
    fail(ErrorKind::kModelMismatch, "ac_decode: stream alphabet " + std::to_string(stream.alphabet) +
                                        " differs from model alphabet " +
                                        std::to_string(model.alphabet()));
  if (stream.model_hash != model.descriptor_hash())
    fail(ErrorKind::kModelMismatch, "ac_decode: model hash mismatch (stream was coded with a different model)");

  std::vector<std::uint32_t> symbols;
  if (stream.count == 0) {
    if (!stream.payload.empty()) fail(ErrorKind::kCorrupt, "ac_decode: payload present for an empty stream");
    return symbols;
  }
  symbols.resize(stream.count);

  CausalContextModel working = model;
  RangeDecoder dec(stream.payload);
  RangeEncoder mirror;
  QuantizedPmf pmf;
  std::uint32_t cum = 0, freq = 0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const auto key = working.context_key_at(symbols, i, row_length);
    working.pmf_for_key(key, pmf);
    symbols[i] = dec.decode(pmf, cum, freq);
    mirror.encode(cum, freq);
    if (adaptive) working.update_key(key, symbols[i]);
  }
  if (mirror.finish() != stream.payload)
    fail(ErrorKind::kCorrupt, "ac_decode: payload is not a complete encoding (truncated or corrupted)");
  return symbols;
}

double ideal_code_length_bits(std::span<const std::uint32_t> symbols,
                              const CausalContextModel& model, bool adaptive,
                              std::size_t row_length) {
  CausalContextModel working = model;
  QuantizedPmf pmf;
  double bits = 0.0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const auto key = working.context_key_at(symbols, i, row_length);
    working.pmf_for_key(key, pmf);
    bits -= std::log2(double(pmf.weight(symbols[i])) / kPmfTotal);
    if (adaptive) working.update_key(key, symbols[i]);
  }
  return bits;
}

}  // namespace genjscc
