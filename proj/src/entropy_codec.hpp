#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "context_models.hpp"

namespace genjscc {

inline constexpr std::size_t kBitstreamHeaderBytes = 19;

// "GJS1" | u8 version | u16 alphabet | u32 symbol count | u64 model hash | payload
struct Bitstream {
  std::uint8_t version = 1;
  std::uint16_t alphabet = 0;
  std::uint32_t count = 0;
  std::uint64_t model_hash = 0;
  std::vector<std::uint8_t> payload;

  std::size_t size_bytes() const { return kBitstreamHeaderBytes + payload.size(); }
  std::vector<std::uint8_t> serialize() const;
  static Bitstream parse(std::span<const std::uint8_t> bytes);
};

// Byte-oriented range coder: 32-bit range renormalized below 2^24, 16-bit
// probability totals, carries propagated through a pending-byte cache.
// Interval boundaries are floor(range * cum / 2^16), which partitions the
// range exactly.
class RangeEncoder {
 public:
  void encode(std::uint32_t cum, std::uint32_t freq);
  /// Emits the shortest tail that pins a value inside the final interval.
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();
  void emit(std::uint8_t b);

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t pending_ = 1;
  bool leading_ = true;  // the first shifted byte is always zero and is not stored
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> payload);
  std::uint32_t decode(const QuantizedPmf& pmf, std::uint32_t& cum, std::uint32_t& freq);

 private:
  std::uint8_t next();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

/// Codes `symbols` under `model`. With `adaptive`, a private copy of the
/// model is updated after every symbol; `model` itself is never modified.
/// Context history resets every `row_length` symbols (0 = never).
Bitstream ac_encode(std::span<const std::uint32_t> symbols, const CausalContextModel& model,
                    bool adaptive, std::size_t row_length = 0);

/// Inverse of ac_encode. Throws kModelMismatch when the header does not
/// match `model`, kCorrupt when the payload is not exactly the encoding of
/// the decoded symbols (truncation, bit errors).
std::vector<std::uint32_t> ac_decode(const Bitstream& stream, const CausalContextModel& model,
                                     bool adaptive, std::size_t row_length = 0);

/// Sum of -log2 p over the sequence under the same model evolution the coder uses.
double ideal_code_length_bits(std::span<const std::uint32_t> symbols,
                              const CausalContextModel& model, bool adaptive,
                              std::size_t row_length = 0);

}  // namespace genjscc
