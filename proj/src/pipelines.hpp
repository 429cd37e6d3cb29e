#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "analog_jscc.hpp"
#include "channel_fec.hpp"
#include "concealment.hpp"
#include "context_models.hpp"
#include "image_codec.hpp"
#include "sources_metrics.hpp"
#include "transform_quant.hpp"

namespace genjscc {

enum class Scheme : std::uint8_t { kDigitalSeparate = 0, kWeakJscc = 1, kAnalogJscc = 2 };

const char* scheme_name(Scheme s);
std::optional<Scheme> parse_scheme(const std::string& name);

// One modulation-and-coding mode of the link abstraction.
struct McsEntry {
  double efficiency = 0.0;  // information bits per channel symbol
  double min_snr_db = 0.0;  // decodes iff the channel SNR reaches this
};

/// Efficiencies of the 15 LTE/NR CQI modes with evenly spaced thresholds
/// from -6 dB in 2 dB steps.
std::vector<McsEntry> default_mcs_table();

/// Index of the most efficient mode whose threshold does not exceed the
/// estimate, or -1 when even the most robust mode is out of reach.
int choose_mcs(std::span<const McsEntry> table, double snr_estimate_db);

struct SchemeConfig {
  Scheme scheme = Scheme::kDigitalSeparate;
  double bandwidth_ratio = 0.02;
  std::vector<McsEntry> mcs_table = default_mcs_table();
  double snr_estimate_db = 0.0;
  std::uint32_t context_order = 2;  // adaptive model of the digital stream
  double context_alpha = 1.0;
  double sq_step = 16.0;            // fixed step of the lossy digital path
  std::uint32_t data_packets = 16;  // k
  double fec_multiplier = 1.0;      // N
  std::uint32_t token_packets = 16; // P

  void validate() const;
};

// Trained receiver/transmitter state shared by all trials.
struct Assets {
  std::optional<JsccStatistics> jscc;
  std::optional<Codebook> codebook;
  std::optional<NeighborhoodModel> neighborhood;
  std::optional<CausalContextModel> token_model;  // codes tokens inside one packet
};

struct AssetSettings {
  std::uint32_t codebook_size = 256;
  int codebook_iters = 12;
  std::size_t codebook_samples = 20000;
  std::uint32_t token_order = 0;
  double context_alpha = 1.0;
  std::uint32_t token_packets = 16;
  std::uint64_t seed = 1;
};

/// Fits whatever the requested schemes need from the training images.
Assets train_assets(std::span<const ImageGrid> train, const AssetSettings& settings, bool analog,
                    bool tokens);

struct SweepRecord {
  std::string scheme;      // scheme name, with "/FEC<N>x" for the lossy digital path
  std::string condition;   // channel condition label
  std::size_t condition_index = 0;
  std::size_t scheme_index = 0;
  std::string group;       // loss scenario for packet channels, "awgn" otherwise
  double condition_value = 0.0;  // SNR in dB, or the scenario's stationary loss
  std::uint64_t seed = 0;
  MetricsRow metrics;
  int mcs_index = -1;
  int fec_r = -1;
  double realized_loss_rate = 0.0;
  std::uint64_t parity_bits = 0;
};

// Per-image work reused across channel conditions. Not thread-safe; one
// cache per trial.
class TrialCache {
 public:
  explicit TrialCache(const ImageGrid& image) : image_(image) {}
  const ImageGrid& image() const { return image_; }

  /// Rate-controlled digital stream for a capacity, decoded once.
  const std::optional<SqEncoding>& digital_for_capacity(std::uint64_t bits, std::uint32_t order,
                                                        double alpha);
  struct FixedStream {
    std::vector<std::uint8_t> bytes;  // u32 length prefix + GJS1 stream
    ImageGrid reconstruction;
  };
  const FixedStream& digital_fixed(double step, std::uint32_t order, double alpha);

  struct TokenPackets {
    TokenGrid tokens;
    PacketAssignment assignment;
    std::vector<Bitstream> streams;
    ImageGrid clean;  // reconstruction with every token present
  };
  const TokenPackets& token_packets(const Assets& assets, std::uint32_t packets);

 private:
  ImageGrid image_;
  std::vector<std::pair<std::uint64_t, std::optional<SqEncoding>>> by_capacity_;
  std::optional<std::pair<double, FixedStream>> fixed_;
  std::optional<std::pair<std::uint32_t, TokenPackets>> tokens_;
};

/// Digital stack over AWGN: rate control to the capacity of the mode chosen
/// from the estimate, then the threshold rule on the actual SNR.
SweepRecord run_digital_separate(TrialCache& cache, const SchemeConfig& cfg, double actual_snr_db);

/// Digital stack over a packet-erasure trace: one stream split into k
/// packets plus r = provision_repair(N, estimated_loss, k) parity packets
/// that occupy slots [0, k + r) of `slots`.
SweepRecord run_digital_separate_lossy(TrialCache& cache, const SchemeConfig& cfg,
                                       std::span<const std::uint8_t> slots, double estimated_loss);

/// Token path: packet p is lost iff lost[p]. Never fails.
SweepRecord run_weak_jscc(TrialCache& cache, const SchemeConfig& cfg, const Assets& assets,
                          std::span<const std::uint8_t> lost);

/// Token path over AWGN: packets go out in index order while they fit the
/// capacity of the chosen mode and arrive iff the actual SNR meets its
/// threshold; the rest are concealed.
SweepRecord run_weak_jscc_awgn(TrialCache& cache, const SchemeConfig& cfg, const Assets& assets,
                               double actual_snr_db);

SweepRecord run_analog(const ImageGrid& image, const SchemeConfig& cfg, const Assets& assets,
                       double snr_db, std::uint64_t noise_seed);

/// Same pipeline with the lost cells filled by the marginal argmax instead
/// of the neighborhood model (for comparisons).
SweepRecord run_weak_jscc_marginal(TrialCache& cache, const SchemeConfig& cfg, const Assets& assets,
                                   std::span<const std::uint8_t> lost);

}  // namespace genjscc
