#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pipelines.hpp"

namespace genjscc {

enum class ChannelKind : std::uint8_t { kAwgn = 0, kGilbertElliott = 1 };

// Experiment description. Text form: one "key = value" per line, '#'
// starts a comment, lists are comma separated. See scenario_keys().
struct Scenario {
  std::string name = "scenario";
  std::vector<Scheme> schemes;
  ChannelKind channel = ChannelKind::kAwgn;

  // AWGN
  std::vector<double> snr_db;
  double snr_estimate_db = 0.0;
  double bandwidth_ratio = 0.02;
  std::vector<McsEntry> mcs_table = default_mcs_table();

  // Gilbert-Elliott packet channel; one loss scenario per p_gb value (or per trace file)
  std::vector<double> ge_p_gb;
  double ge_p_bg = 0.5;
  double ge_loss_good = 0.0;
  double ge_loss_bad = 1.0;
  std::vector<std::string> ge_trace_files;
  std::uint32_t interval_packets = 128;
  std::uint32_t intervals = 10;  // interval 0 only seeds the loss estimate
  std::vector<double> fec_multipliers{1.0, 4.0};
  std::uint32_t data_packets = 16;
  std::uint32_t token_packets = 16;
  double sq_step = 16.0;

  std::uint32_t seeds = 5;
  std::uint64_t seed = 1;

  // Source images: "ar1" draws a fresh AR(1) texture per seed, otherwise a PGM path.
  std::string source = "ar1";
  int source_width = 256;
  int source_height = 256;
  double source_rho = 0.95;
  double source_sigma = 40.0;
  std::uint32_t train_images = 4;
  std::vector<std::string> train_paths;

  std::uint32_t codebook_size = 256;
  std::uint32_t codebook_iters = 12;
  std::uint32_t codebook_samples = 20000;
  std::uint32_t context_order = 2;
  std::uint32_t token_order = 0;
  double context_alpha = 1.0;

  void validate() const;
};

/// Recognized keys, in documentation order.
const std::vector<std::string>& scenario_keys();

/// Parses scenario text on top of the defaults. Unknown keys raise one
/// kConfiguration error naming all of them.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
/// Applies one KEY=VALUE override (kConfiguration on unknown keys or bad values).
void apply_override(Scenario& scenario, const std::string& key, const std::string& value);

struct SweepOptions {
  unsigned jobs = 1;
  // Restrict to one seed index (simulate); -1 runs them all.
  long long only_seed = -1;
  // Replaces the scenario source with this image for every seed.
  const ImageGrid* image = nullptr;
};

/// Runs every (scheme, condition, seed) trial; records sorted by
/// (scheme, condition, seed) regardless of the worker count.
std::vector<SweepRecord> run_sweep(const Scenario& scenario, const SweepOptions& options = {});

/// Loss traces used for (loss scenario g, seed s) on a packet channel.
ChannelTrace scenario_trace(const Scenario& scenario, std::size_t g, std::uint32_t s);

inline constexpr const char* kCsvHeader =
    "scheme,condition,seed,bpp,bandwidth_ratio,mse,psnr,decode_failed,mcs_index,fec_r,"
    "realized_loss_rate";
std::string records_to_csv(std::span<const SweepRecord> records);
void write_csv(const std::string& path, std::span<const SweepRecord> records);

}  // namespace genjscc
