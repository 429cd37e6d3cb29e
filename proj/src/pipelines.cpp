#include "pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "binary_io.hpp"
#include "entropy_codec.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace genjscc {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kDigitalSeparate: return "DIGITAL_SEPARATE";
    case Scheme::kWeakJscc: return "WEAK_JSCC";
    case Scheme::kAnalogJscc: return "ANALOG_JSCC";
  }
  return "?";
}

std::optional<Scheme> parse_scheme(const std::string& name) {
  for (auto s : {Scheme::kDigitalSeparate, Scheme::kWeakJscc, Scheme::kAnalogJscc})
    if (name == scheme_name(s)) return s;
  return std::nullopt;
}

std::vector<McsEntry> default_mcs_table() {
  static const double kEff[] = {0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
                                2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547};
  std::vector<McsEntry> t;
  for (int i = 0; i < 15; ++i) t.push_back({kEff[i], -6.0 + 2.0 * i});
  return t;
}

int choose_mcs(std::span<const McsEntry> table, double snr_estimate_db) {
  int best = -1;
  for (std::size_t i = 0; i < table.size(); ++i)
    if (table[i].min_snr_db <= snr_estimate_db &&
        (best < 0 || table[i].efficiency > table[best].efficiency))
      best = static_cast<int>(i);
  return best;
}

void SchemeConfig::validate() const {
  require(bandwidth_ratio > 0.0 && bandwidth_ratio <= 1.0, ErrorKind::kConfiguration,
          "bandwidth_ratio must lie in (0, 1]");
  require(!mcs_table.empty(), ErrorKind::kConfiguration, "mcs_table is empty");
  for (std::size_t i = 0; i < mcs_table.size(); ++i) {
    require(mcs_table[i].efficiency > 0.0, ErrorKind::kConfiguration, "mcs efficiencies must be positive");
    if (i > 0)
      require(mcs_table[i].min_snr_db > mcs_table[i - 1].min_snr_db, ErrorKind::kConfiguration,
              "mcs_table must be sorted by strictly increasing min_snr");
  }
  require(sq_step > 0.0 && std::isfinite(sq_step), ErrorKind::kConfiguration, "sq_step must be positive");
  require(data_packets >= 1, ErrorKind::kConfiguration, "data_packets must be >= 1");
  require(fec_multiplier >= 0.0, ErrorKind::kConfiguration, "fec multiplier must be >= 0");
  require(token_packets >= 1, ErrorKind::kConfiguration, "token_packets must be >= 1");
  require(context_order <= 4, ErrorKind::kConfiguration, "context_order must be <= 4");
  require(context_alpha > 0.0, ErrorKind::kConfiguration, "context_alpha must be positive");
}

// ---------------------------------------------------------------------------

Assets train_assets(std::span<const ImageGrid> train, const AssetSettings& settings, bool analog,
                    bool tokens) {
  require(!train.empty(), ErrorKind::kConfiguration, "no training images");
  Assets assets;
  if (analog) assets.jscc = jscc_fit(train);
  if (!tokens) return assets;

  std::vector<double> all;
  for (const auto& img : train) {
    const auto p = image_patches(img);
    all.insert(all.end(), p.begin(), p.end());
  }
  const std::size_t n = all.size() / kPatchDim;
  std::vector<double> sample;
  if (n <= settings.codebook_samples) {
    sample = std::move(all);
  } else {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(settings.seed, 0x5A, 0));
    for (std::size_t i = 0; i < settings.codebook_samples; ++i)
      std::swap(idx[i], idx[i + std::uniform_int_distribution<std::size_t>(0, n - 1 - i)(rng)]);
    idx.resize(settings.codebook_samples);
    std::sort(idx.begin(), idx.end());
    for (auto i : idx) sample.insert(sample.end(), all.begin() + i * kPatchDim, all.begin() + (i + 1) * kPatchDim);
  }
  assets.codebook = vq_train(sample, kPatchDim, settings.codebook_size, settings.codebook_iters,
                             derive_seed(settings.seed, 0xC0, 0)).codebook;

  const std::uint32_t k = assets.codebook->size();
  std::vector<TokenGrid> grids;
  for (const auto& img : train) grids.push_back(vq_tokenize(img, *assets.codebook));
  assets.neighborhood.emplace(k, settings.context_alpha);
  assets.neighborhood->train(grids);

  assets.token_model.emplace(k, settings.token_order, settings.context_alpha);
  for (const auto& g : grids) {
    const auto assignment = strided_assignment(g.rows, g.cols, settings.token_packets);
    for (std::uint32_t p = 0; p < settings.token_packets; ++p) {
      std::vector<std::uint32_t> seq;
      for (auto cell : assignment.cells_of(p)) seq.push_back(g.tokens[cell]);
      assets.token_model->observe_sequence(seq, 0);
    }
  }
  assets.token_model->freeze();
  return assets;
}

// ---------------------------------------------------------------------------

const std::optional<SqEncoding>& TrialCache::digital_for_capacity(std::uint64_t bits,
                                                                  std::uint32_t order, double alpha) {
  for (const auto& [cap, enc] : by_capacity_)
    if (cap == bits) return enc;
  auto enc = sq_encode_to_budget(image_, bits, order, alpha);
  if (enc) {
    // The receiver's view: decode the stream rather than trusting the encoder.
    enc->reconstruction = sq_decode_image(enc->stream, image_.width, image_.height, enc->step,
                                          sq_default_model(enc->step, order, alpha), true);
  }
  by_capacity_.emplace_back(bits, std::move(enc));
  return by_capacity_.back().second;
}

const TrialCache::FixedStream& TrialCache::digital_fixed(double step, std::uint32_t order, double alpha) {
  if (fixed_ && fixed_->first == step) return fixed_->second;
  const auto model = sq_default_model(step, order, alpha);
  const auto enc = sq_encode_image(image_, step, model, true);
  FixedStream fs;
  const auto stream = enc.stream.serialize();
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(stream.size()));
  w.bytes(stream);
  fs.bytes = w.take();
  fs.reconstruction = sq_decode_image(Bitstream::parse(stream), image_.width, image_.height, step, model, true);
  fixed_.emplace(step, std::move(fs));
  return fixed_->second;
}

const TrialCache::TokenPackets& TrialCache::token_packets(const Assets& assets, std::uint32_t packets) {
  if (tokens_ && tokens_->first == packets) return tokens_->second;
  require(assets.codebook && assets.neighborhood && assets.token_model, ErrorKind::kConfiguration,
          "token path needs a codebook, a neighborhood model and a token model");
  TokenPackets tp;
  tp.tokens = vq_tokenize(image_, *assets.codebook);
  tp.assignment = strided_assignment(tp.tokens.rows, tp.tokens.cols, packets);
  for (std::uint32_t p = 0; p < packets; ++p) {
    std::vector<std::uint32_t> seq;
    for (auto cell : tp.assignment.cells_of(p)) seq.push_back(tp.tokens.tokens[cell]);
    tp.streams.push_back(ac_encode(seq, *assets.token_model, true));
    if (ac_decode(tp.streams.back(), *assets.token_model, true) != seq)
      fail(ErrorKind::kCorrupt, "token packet failed to round-trip");
  }
  tp.clean = vq_reconstruct(tp.tokens, *assets.codebook, image_.width, image_.height);
  tokens_.emplace(packets, std::move(tp));
  return tokens_->second;
}

// ---------------------------------------------------------------------------

SweepRecord run_digital_separate(TrialCache& cache, const SchemeConfig& cfg, double actual_snr_db) {
  cfg.validate();
  const auto& image = cache.image();
  SweepRecord rec;
  rec.scheme = scheme_name(Scheme::kDigitalSeparate);
  const auto symbols = static_cast<std::uint64_t>(std::floor(cfg.bandwidth_ratio * double(image.pixel_count())));
  const int mcs = choose_mcs(cfg.mcs_table, cfg.snr_estimate_db);
  rec.mcs_index = mcs;

  const std::optional<SqEncoding>* enc = nullptr;
  if (mcs >= 0) {
    const auto capacity = static_cast<std::uint64_t>(std::floor(double(symbols) * cfg.mcs_table[mcs].efficiency));
    enc = &cache.digital_for_capacity(capacity, cfg.context_order, cfg.context_alpha);
  }
  const bool sent = enc && enc->has_value();
  const bool ok = sent && actual_snr_db >= cfg.mcs_table[mcs].min_snr_db;
  const std::uint64_t bits = sent ? 8 * (*enc)->stream.size_bytes() : 0;
  rec.metrics = compute_metrics(image, ok ? (*enc)->reconstruction : mean_gray(image), bits, symbols);
  rec.metrics.decode_failed = !ok;
  rec.realized_loss_rate = ok ? 0.0 : 1.0;
  return rec;
}

SweepRecord run_digital_separate_lossy(TrialCache& cache, const SchemeConfig& cfg,
                                       std::span<const std::uint8_t> slots, double estimated_loss) {
  cfg.validate();
  const auto& image = cache.image();
  const auto& fixed = cache.digital_fixed(cfg.sq_step, cfg.context_order, cfg.context_alpha);
  const std::uint32_t k = cfg.data_packets;
  FecConfig fec{k, provision_repair(cfg.fec_multiplier, estimated_loss, k)};
  fec.validate();
  require(slots.size() >= fec.n(), ErrorKind::kConfiguration,
          "interval has " + std::to_string(slots.size()) + " packet slots but the FEC block needs " +
              std::to_string(fec.n()));

  const std::size_t len = (fixed.bytes.size() + k - 1) / k;
  std::vector<std::vector<std::uint8_t>> data(k, std::vector<std::uint8_t>(len, 0));
  for (std::size_t i = 0; i < fixed.bytes.size(); ++i) data[i / len][i % len] = fixed.bytes[i];
  const auto packets = fec_encode(data, fec.r);

  std::vector<Packet> received;
  std::uint32_t lost = 0;
  for (std::uint32_t i = 0; i < fec.n(); ++i) {
    if (slots[i]) {
      ++lost;
    } else {
      received.push_back(packets[i]);
    }
  }
  const auto result = fec_decode(received, fec);

  ImageGrid recon;
  bool ok = result.recovered;
  if (ok) {
    std::vector<std::uint8_t> joined;
    for (const auto& d : result.data) joined.insert(joined.end(), d.begin(), d.end());
    joined.resize(fixed.bytes.size());
    if (joined == fixed.bytes) {
      recon = fixed.reconstruction;
    } else {
      try {
        ByteReader r(joined, "recovered stream");
        const auto n = r.u32("length");
        const auto stream = Bitstream::parse(r.bytes(n, "stream"));
        recon = sq_decode_image(stream, image.width, image.height, cfg.sq_step,
                                sq_default_model(cfg.sq_step, cfg.context_order, cfg.context_alpha), true);
      } catch (const Error&) {
        ok = false;
      }
    }
  }
  if (!ok) recon = mean_gray(image);

  SweepRecord rec;
  rec.scheme = scheme_name(Scheme::kDigitalSeparate);
  const std::uint64_t bits = 8ull * len * fec.n();
  rec.metrics = compute_metrics(image, recon, bits, 0);
  rec.metrics.decode_failed = !ok;
  rec.fec_r = static_cast<int>(fec.r);
  rec.parity_bits = 8ull * len * fec.r;
  rec.realized_loss_rate = double(lost) / double(fec.n());
  return rec;
}

namespace {

SweepRecord weak_jscc_common(TrialCache& cache, const Assets& assets, std::uint32_t packets,
                             std::span<const std::uint8_t> lost, std::uint64_t bits, bool marginal) {
  const auto& image = cache.image();
  const auto& tp = cache.token_packets(assets, packets);
  std::vector<std::uint32_t> lost_ids;
  for (std::uint32_t p = 0; p < packets; ++p)
    if (lost[p]) lost_ids.push_back(p);

  SweepRecord rec;
  rec.scheme = scheme_name(Scheme::kWeakJscc);
  ImageGrid recon;
  if (lost_ids.empty()) {
    recon = tp.clean;
  } else {
    const auto masked = apply_loss_mask(tp.tokens, lost_ids, tp.assignment);
    const auto filled = marginal ? marginal_fill(masked, *assets.neighborhood)
                                 : conceal(masked, *assets.neighborhood);
    recon = vq_reconstruct(filled, *assets.codebook, image.width, image.height);
  }
  rec.metrics = compute_metrics(image, recon, bits, 0);
  rec.realized_loss_rate = double(lost_ids.size()) / double(packets);
  return rec;
}

std::uint64_t all_packet_bits(const TrialCache::TokenPackets& tp) {
  std::uint64_t bits = 0;
  for (const auto& s : tp.streams) bits += 8 * s.size_bytes();
  return bits;
}

}  // namespace

SweepRecord run_weak_jscc(TrialCache& cache, const SchemeConfig& cfg, const Assets& assets,
                          std::span<const std::uint8_t> lost) {
  cfg.validate();
  require(lost.size() >= cfg.token_packets, ErrorKind::kConfiguration,
          "loss pattern shorter than the token packet count");
  const auto& tp = cache.token_packets(assets, cfg.token_packets);
  return weak_jscc_common(cache, assets, cfg.token_packets, lost, all_packet_bits(tp), false);
}

SweepRecord run_weak_jscc_marginal(TrialCache& cache, const SchemeConfig& cfg, const Assets& assets,
                                   std::span<const std::uint8_t> lost) {
  cfg.validate();
  require(lost.size() >= cfg.token_packets, ErrorKind::kConfiguration,
          "loss pattern shorter than the token packet count");
  const auto& tp = cache.token_packets(assets, cfg.token_packets);
  return weak_jscc_common(cache, assets, cfg.token_packets, lost, all_packet_bits(tp), true);
}

SweepRecord run_weak_jscc_awgn(TrialCache& cache, const SchemeConfig& cfg, const Assets& assets,
                               double actual_snr_db) {
  cfg.validate();
  const auto& tp = cache.token_packets(assets, cfg.token_packets);
  const auto symbols = static_cast<std::uint64_t>(std::floor(cfg.bandwidth_ratio * double(cache.image().pixel_count())));
  const int mcs = choose_mcs(cfg.mcs_table, cfg.snr_estimate_db);
  const std::uint64_t capacity =
      mcs >= 0 ? static_cast<std::uint64_t>(std::floor(double(symbols) * cfg.mcs_table[mcs].efficiency)) : 0;
  const bool link_ok = mcs >= 0 && actual_snr_db >= cfg.mcs_table[mcs].min_snr_db;

  std::vector<std::uint8_t> lost(cfg.token_packets, 1);
  std::uint64_t sent_bits = 0;
  for (std::uint32_t p = 0; p < cfg.token_packets; ++p) {
    const std::uint64_t b = 8 * tp.streams[p].size_bytes();
    if (sent_bits + b > capacity) break;
    sent_bits += b;
    lost[p] = link_ok ? 0 : 1;
  }
  auto rec = weak_jscc_common(cache, assets, cfg.token_packets, lost, sent_bits, false);
  rec.metrics.bandwidth_ratio = double(symbols) / double(cache.image().pixel_count());
  rec.mcs_index = mcs;
  return rec;
}

SweepRecord run_analog(const ImageGrid& image, const SchemeConfig& cfg, const Assets& assets,
                       double snr_db, std::uint64_t noise_seed) {
  cfg.validate();
  require(assets.jscc.has_value(), ErrorKind::kConfiguration, "analog path needs fitted statistics");
  auto code = jscc_encode(image, *assets.jscc, cfg.bandwidth_ratio);
  code.symbols = awgn(code.symbols, snr_db, noise_seed);
  const auto recon = jscc_decode(code, snr_db, *assets.jscc);
  SweepRecord rec;
  rec.scheme = scheme_name(Scheme::kAnalogJscc);
  rec.metrics = compute_metrics(image, recon, 0, code.budget);
  return rec;
}

}  // namespace genjscc
