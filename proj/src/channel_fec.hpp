#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace genjscc {

// ---------------------------------------------------------------------------
// AWGN

/// Adds zero-mean Gaussian noise of variance mean_power / 10^(snr_db/10).
std::vector<double> awgn(std::span<const double> symbols, double snr_db, std::uint64_t seed);
double mean_power(std::span<const double> symbols);
/// 10 log10(signal power / noise power) measured from a clean/noisy pair.
double realized_snr_db(std::span<const double> clean, std::span<const double> noisy);

// ---------------------------------------------------------------------------
// Gilbert-Elliott packet loss

enum class ChannelState : std::uint8_t { kGood = 0, kBad = 1 };

struct GilbertElliottParams {
  double p_gb = 0.0;  // P(good -> bad)
  double p_bg = 1.0;  // P(bad -> good)
  double loss_good = 0.0;
  double loss_bad = 1.0;

  void validate() const;
  double stationary_bad() const { return p_gb / (p_gb + p_bg); }
  double stationary_loss() const {
    return (1.0 - stationary_bad()) * loss_good + stationary_bad() * loss_bad;
  }
};

struct ChannelTrace {
  std::vector<std::uint8_t> lost;  // one flag per packet slot
  std::vector<ChannelState> state;
  GilbertElliottParams params;

  std::size_t size() const { return lost.size(); }
  double loss_rate() const;
  /// Mean length of maximal runs of lost packets (0 when nothing was lost).
  double mean_burst_length() const;
  ChannelTrace slice(std::size_t begin, std::size_t length) const;

  /// Text dump: one "index,state,lost" line per packet, state G or B.
  std::string to_text() const;
  static ChannelTrace from_text(const std::string& text);
  void save(const std::string& path) const;
  static ChannelTrace load(const std::string& path);
};

/// Two-state Markov loss trace starting from the stationary distribution.
ChannelTrace gilbert_elliott(std::size_t n, const GilbertElliottParams& params, std::uint64_t seed);

/// Loss fraction per consecutive window; the last partial window is averaged
/// over its own length.
std::vector<double> interval_loss_rate(const ChannelTrace& trace, std::size_t window);

// ---------------------------------------------------------------------------
// Interpacket erasure FEC (systematic Vandermonde code over GF(256))

struct Packet {
  std::uint32_t index = 0;
  std::vector<std::uint8_t> payload;
  bool lost = false;
};

struct FecConfig {
  std::uint32_t k = 1;  // data packets per block
  std::uint32_t r = 0;  // repair packets

  void validate() const;
  std::uint32_t n() const { return k + r; }
};

/// Repair packets for an estimated loss rate under multiplier N:
/// N * ceil(estimated_loss * k), so N-fold provisioning costs exactly N times
/// the parity of the 1x setting.
std::uint32_t provision_repair(double multiplier, double estimated_loss, std::uint32_t k);

/// Returns the k data packets (zero-padded to the longest) followed by r
/// parity packets, indexed 0..k+r-1.
std::vector<Packet> fec_encode(std::span<const std::vector<std::uint8_t>> data, std::uint32_t r);

struct FecDecodeResult {
  bool recovered = false;  // false: fewer than k packets arrived
  std::vector<std::vector<std::uint8_t>> data;
};

/// `received` holds the packets that arrived (the `lost` flag is ignored).
FecDecodeResult fec_decode(std::span<const Packet> received, const FecConfig& cfg);

}  // namespace genjscc
