#include "genjscc/genjscc.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <variant>

#include "binary_io.hpp"
#include "channel_fec.hpp"
#include "context_models.hpp"
#include "entropy_codec.hpp"
#include "error.hpp"
#include "image_codec.hpp"
#include "scenario.hpp"
#include "sources_metrics.hpp"
#include "transform_quant.hpp"

using namespace genjscc;

struct gj_image {
  ImageGrid grid;
};
struct gj_codebook {
  Codebook codebook;
};
struct gj_model {
  std::variant<CausalContextModel, NeighborhoodModel> model;
};
struct gj_scenario {
  Scenario scenario;
};
struct gj_sweep_result {
  std::vector<SweepRecord> records;
};

namespace {

thread_local std::string g_last_error;

gj_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParameter: return GJ_ERR_PARAMETER;
    case ErrorKind::kConfiguration: return GJ_ERR_CONFIG;
    case ErrorKind::kIo: return GJ_ERR_IO;
    case ErrorKind::kFormat: return GJ_ERR_FORMAT;
    case ErrorKind::kModelMismatch: return GJ_ERR_MODEL_MISMATCH;
    case ErrorKind::kCorrupt: return GJ_ERR_CORRUPT;
    case ErrorKind::kRange: return GJ_ERR_RANGE;
  }
  return GJ_ERR_INTERNAL;
}

template <class F>
gj_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return GJ_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return GJ_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GJ_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorKind::kParameter, std::string(what) + " must not be NULL");
}

std::vector<ImageGrid> gather(const gj_image* const* images, size_t count) {
  if (count > 0) need(images, "images");
  std::vector<ImageGrid> out;
  for (size_t i = 0; i < count; ++i) {
    need(images[i], "image");
    out.push_back(images[i]->grid);
  }
  return out;
}

const CausalContextModel& causal(const gj_model* m) {
  need(m, "model");
  const auto* c = std::get_if<CausalContextModel>(&m->model);
  if (!c) fail(ErrorKind::kParameter, "a causal context model is required here");
  return *c;
}

CodecMode mode_of(gj_codec_mode m) {
  if (m == GJ_MODE_SQ) return CodecMode::kSq;
  if (m == GJ_MODE_VQ) return CodecMode::kVq;
  fail(ErrorKind::kParameter, "unknown codec mode");
}

GilbertElliottParams ge_of(const gj_ge_params* p) {
  need(p, "params");
  GilbertElliottParams g{p->p_gb, p->p_bg, p->loss_good, p->loss_bad};
  g.validate();
  return g;
}

}  // namespace

extern "C" {

const char* gj_version(void) { return "1.0.0"; }

const char* gj_status_name(gj_status s) {
  switch (s) {
    case GJ_OK: return "ok";
    case GJ_ERR_PARAMETER: return "parameter error";
    case GJ_ERR_CONFIG: return "configuration error";
    case GJ_ERR_IO: return "i/o error";
    case GJ_ERR_FORMAT: return "format error";
    case GJ_ERR_MODEL_MISMATCH: return "model mismatch";
    case GJ_ERR_CORRUPT: return "corrupt stream";
    case GJ_ERR_RANGE: return "range error";
    case GJ_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* gj_last_error(void) { return g_last_error.c_str(); }

// ---- images

gj_status gj_image_create(int width, int height, const uint8_t* samples, gj_image** out) {
  return guarded([&] {
    need(out, "out");
    need(samples, "samples");
    require(width > 0 && height > 0, ErrorKind::kParameter, "image dimensions must be positive");
    std::vector<std::uint8_t> data(samples, samples + static_cast<size_t>(width) * height);
    *out = new gj_image{ImageGrid(width, height, std::move(data))};
  });
}

gj_status gj_image_load_pgm(const char* path, gj_image** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new gj_image{load_pgm(path)};
  });
}

gj_status gj_image_save_pgm(const gj_image* image, const char* path) {
  return guarded([&] {
    need(image, "image");
    need(path, "path");
    save_pgm(image->grid, path);
  });
}

gj_status gj_image_ar1(int width, int height, double rho, double sigma, uint64_t seed, gj_image** out) {
  return guarded([&] {
    need(out, "out");
    *out = new gj_image{gen_ar1_image(width, height, rho, sigma, 128.0, seed)};
  });
}

int gj_image_width(const gj_image* image) { return image ? image->grid.width : 0; }
int gj_image_height(const gj_image* image) { return image ? image->grid.height : 0; }
const uint8_t* gj_image_samples(const gj_image* image) { return image ? image->grid.samples.data() : nullptr; }

gj_status gj_image_mse(const gj_image* a, const gj_image* b, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "mse");
    *out = mse(a->grid, b->grid);
  });
}

void gj_image_free(gj_image* image) { delete image; }

// ---- codebooks

gj_status gj_codebook_train(const gj_image* const* images, size_t count, uint32_t size, uint32_t iterations,
                            uint64_t seed, gj_codebook** out) {
  return guarded([&] {
    need(out, "out");
    const auto grids = gather(images, count);
    require(!grids.empty(), ErrorKind::kParameter, "no training images");
    std::vector<double> patches;
    for (const auto& g : grids) {
      const auto p = image_patches(g);
      patches.insert(patches.end(), p.begin(), p.end());
    }
    auto result = vq_train(patches, kPatchDim, size, static_cast<int>(iterations), seed);
    *out = new gj_codebook{std::move(result.codebook)};
  });
}

gj_status gj_codebook_load(const char* path, gj_codebook** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new gj_codebook{Codebook::load(path)};
  });
}

gj_status gj_codebook_save(const gj_codebook* codebook, const char* path) {
  return guarded([&] {
    need(codebook, "codebook");
    need(path, "path");
    codebook->codebook.save(path);
  });
}

uint32_t gj_codebook_size(const gj_codebook* codebook) { return codebook ? codebook->codebook.size() : 0; }
void gj_codebook_free(gj_codebook* codebook) { delete codebook; }

// ---- models

gj_status gj_model_create_causal(uint32_t alphabet, uint32_t order, double alpha, gj_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = new gj_model{CausalContextModel(alphabet, order, alpha)};
  });
}

gj_status gj_model_train(const gj_image* const* images, size_t count, const gj_train_options* options,
                         const gj_codebook* codebook, gj_model** out) {
  return guarded([&] {
    need(options, "options");
    need(out, "out");
    const auto grids = gather(images, count);
    require(!grids.empty(), ErrorKind::kParameter, "no training images");
    const auto mode = mode_of(options->mode);
    const Codebook* cb = codebook ? &codebook->codebook : nullptr;
    if (mode == CodecMode::kVq) require(cb != nullptr, ErrorKind::kConfiguration, "vq mode needs a codebook");

    if (options->kind == GJ_MODEL_NEIGHBORHOOD) {
      require(mode == CodecMode::kVq, ErrorKind::kConfiguration, "neighborhood models describe VQ tokens");
      std::vector<TokenGrid> tokens;
      for (const auto& g : grids) tokens.push_back(vq_tokenize(g, *cb));
      NeighborhoodModel m(cb->size(), options->alpha);
      m.train(tokens);
      *out = new gj_model{std::move(m)};
      return;
    }
    require(options->kind == GJ_MODEL_CAUSAL, ErrorKind::kParameter, "unknown model kind");
    const std::uint32_t alphabet = mode == CodecMode::kSq ? sq_alphabet(options->step) : cb->size();
    CausalContextModel m(alphabet, options->order, options->alpha);
    for (const auto& g : grids) {
      std::size_t row = 0;
      const auto symbols = image_symbols(g, mode, options->step, cb, &row);
      m.observe_sequence(symbols, row);
    }
    m.freeze();
    *out = new gj_model{std::move(m)};
  });
}

gj_status gj_model_load(const char* path, gj_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const auto bytes = read_file(path);
    if (peek_model_kind(bytes) == ModelKind::kCausal)
      *out = new gj_model{CausalContextModel::deserialize(bytes)};
    else
      *out = new gj_model{NeighborhoodModel::deserialize(bytes)};
  });
}

gj_status gj_model_save(const gj_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    std::visit([&](const auto& m) { m.save(path); }, model->model);
  });
}

gj_model_kind gj_model_kind_of(const gj_model* model) {
  return model && std::holds_alternative<NeighborhoodModel>(model->model) ? GJ_MODEL_NEIGHBORHOOD
                                                                           : GJ_MODEL_CAUSAL;
}

uint32_t gj_model_alphabet(const gj_model* model) {
  return model ? std::visit([](const auto& m) { return m.alphabet(); }, model->model) : 0;
}

uint64_t gj_model_hash(const gj_model* model) {
  return model ? std::visit([](const auto& m) { return m.descriptor_hash(); }, model->model) : 0;
}

void gj_model_free(gj_model* model) { delete model; }

// ---- compression

gj_status gj_compress_file(const gj_image* image, const gj_compress_options* options, const gj_codebook* codebook,
                           const gj_model* model, const char* out_path, gj_compress_stats* stats) {
  return guarded([&] {
    need(image, "image");
    need(options, "options");
    need(out_path, "out_path");
    CompressOptions opt;
    opt.mode = mode_of(options->mode);
    opt.step = options->step;
    opt.order = options->order;
    opt.alpha = options->alpha;
    CompressStats st;
    const auto c = compress_image(image->grid, opt, codebook ? &codebook->codebook : nullptr,
                                  model ? &causal(model) : nullptr, &st);
    write_file(out_path, c.serialize());
    if (stats) *stats = gj_compress_stats{st.bits, st.symbols, st.bpp, st.cross_entropy};
  });
}

gj_status gj_decompress_file(const char* in_path, const gj_codebook* codebook, const gj_model* model,
                             gj_image** out) {
  return guarded([&] {
    need(in_path, "in_path");
    need(out, "out");
    const auto c = CompressedImage::parse(read_file(in_path));
    *out = new gj_image{decompress_image(c, codebook ? &codebook->codebook : nullptr,
                                         model ? &causal(model) : nullptr)};
  });
}

// ---- scenarios

gj_status gj_scenario_load(const char* path, gj_scenario** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new gj_scenario{load_scenario(path)};
  });
}

gj_status gj_scenario_parse(const char* text, gj_scenario** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new gj_scenario{parse_scenario(text)};
  });
}

gj_status gj_scenario_set(gj_scenario* scenario, const char* key, const char* value) {
  return guarded([&] {
    need(scenario, "scenario");
    need(key, "key");
    need(value, "value");
    apply_override(scenario->scenario, key, value);
  });
}

void gj_scenario_free(gj_scenario* scenario) { delete scenario; }

gj_status gj_scenario_run(const gj_scenario* scenario, unsigned jobs, long long seed_index, const gj_image* image,
                          gj_sweep_result** out) {
  return guarded([&] {
    need(scenario, "scenario");
    need(out, "out");
    SweepOptions opt;
    opt.jobs = jobs;
    opt.only_seed = seed_index;
    opt.image = image ? &image->grid : nullptr;
    *out = new gj_sweep_result{run_sweep(scenario->scenario, opt)};
  });
}

gj_status gj_scenario_write_trace(const gj_scenario* scenario, size_t loss_scenario, uint32_t seed,
                                  const char* path) {
  return guarded([&] {
    need(scenario, "scenario");
    need(path, "path");
    const auto& sc = scenario->scenario;
    require(sc.channel == ChannelKind::kGilbertElliott, ErrorKind::kConfiguration,
            "scenario has no packet channel");
    sc.validate();
    const std::size_t groups = sc.ge_trace_files.empty() ? sc.ge_p_gb.size() : sc.ge_trace_files.size();
    require(loss_scenario < groups, ErrorKind::kRange, "loss scenario index out of range");
    scenario_trace(sc, loss_scenario, seed).save(path);
  });
}

size_t gj_sweep_result_count(const gj_sweep_result* result) { return result ? result->records.size() : 0; }

gj_status gj_sweep_result_get(const gj_sweep_result* result, size_t index, gj_record* out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    require(index < result->records.size(), ErrorKind::kRange, "record index out of range");
    const auto& r = result->records[index];
    *out = gj_record{r.scheme.c_str(), r.condition.c_str(), r.seed, r.metrics.bpp, r.metrics.bandwidth_ratio,
                     r.metrics.mse, r.metrics.psnr, r.metrics.decode_failed ? 1 : 0, r.mcs_index, r.fec_r,
                     r.realized_loss_rate, r.parity_bits};
  });
}

gj_status gj_sweep_result_csv(const gj_sweep_result* result, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(result, "result");
    const auto text = records_to_csv(result->records);
    if (needed) *needed = text.size() + 1;
    require(buf != nullptr && cap > text.size(), ErrorKind::kRange, "csv buffer too small");
    std::memcpy(buf, text.c_str(), text.size() + 1);
  });
}

gj_status gj_sweep_result_write_csv(const gj_sweep_result* result, const char* path) {
  return guarded([&] {
    need(result, "result");
    need(path, "path");
    write_csv(path, result->records);
  });
}

void gj_sweep_result_free(gj_sweep_result* result) { delete result; }

// ---- primitives

gj_status gj_ac_encode(const uint32_t* symbols, size_t count, const gj_model* model, int adaptive,
                       size_t row_length, uint8_t* out, size_t cap, size_t* written) {
  return guarded([&] {
    if (count > 0) need(symbols, "symbols");
    const auto stream = ac_encode(std::span<const std::uint32_t>(symbols, count), causal(model), adaptive != 0,
                                  row_length)
                            .serialize();
    if (written) *written = stream.size();
    require(out != nullptr && cap >= stream.size(), ErrorKind::kRange, "output buffer too small");
    std::memcpy(out, stream.data(), stream.size());
  });
}

gj_status gj_ac_decode(const uint8_t* stream, size_t size, const gj_model* model, int adaptive,
                       size_t row_length, uint32_t* out, size_t cap, size_t* count) {
  return guarded([&] {
    need(stream, "stream");
    const auto symbols = ac_decode(Bitstream::parse(std::span<const std::uint8_t>(stream, size)), causal(model),
                                   adaptive != 0, row_length);
    if (count) *count = symbols.size();
    require(symbols.empty() || (out != nullptr && cap >= symbols.size()), ErrorKind::kRange,
            "output buffer too small");
    if (!symbols.empty()) std::memcpy(out, symbols.data(), symbols.size() * sizeof(uint32_t));
  });
}

gj_status gj_fec_encode(const uint8_t* data, uint32_t k, size_t length, uint32_t r, uint8_t* parity) {
  return guarded([&] {
    FecConfig{k, r}.validate();
    if (length > 0) need(data, "data");
    if (r > 0 && length > 0) need(parity, "parity");
    std::vector<std::vector<std::uint8_t>> packets;
    for (uint32_t i = 0; i < k; ++i) packets.emplace_back(data + i * length, data + (i + 1) * length);
    const auto coded = fec_encode(packets, r);
    for (uint32_t j = 0; j < r; ++j)
      std::memcpy(parity + j * length, coded[k + j].payload.data(), length);
  });
}

gj_status gj_fec_decode(const uint8_t* packets, const uint32_t* indices, size_t count, size_t length, uint32_t k,
                        uint32_t r, uint8_t* data, int* recovered) {
  return guarded([&] {
    need(recovered, "recovered");
    if (count > 0) {
      need(indices, "indices");
      if (length > 0) need(packets, "packets");
    }
    std::vector<Packet> received;
    for (size_t i = 0; i < count; ++i)
      received.push_back(Packet{indices[i], std::vector<std::uint8_t>(packets + i * length, packets + (i + 1) * length), false});
    const auto result = fec_decode(received, FecConfig{k, r});
    *recovered = result.recovered ? 1 : 0;
    if (result.recovered && length > 0) {
      need(data, "data");
      for (uint32_t i = 0; i < k; ++i) std::memcpy(data + i * length, result.data[i].data(), length);
    }
  });
}

uint32_t gj_provision_repair(double multiplier, double estimated_loss, uint32_t k) {
  uint32_t r = 0;
  if (guarded([&] { r = provision_repair(multiplier, estimated_loss, k); }) != GJ_OK) return 0;
  return r;
}

gj_status gj_ge_trace(size_t n, const gj_ge_params* params, uint64_t seed, uint8_t* lost, uint8_t* state) {
  return guarded([&] {
    if (n > 0) need(lost, "lost");
    const auto trace = gilbert_elliott(n, ge_of(params), seed);
    for (size_t i = 0; i < n; ++i) {
      lost[i] = trace.lost[i];
      if (state) state[i] = static_cast<uint8_t>(trace.state[i]);
    }
  });
}

gj_status gj_ge_trace_write(size_t n, const gj_ge_params* params, uint64_t seed, const char* path) {
  return guarded([&] {
    need(path, "path");
    gilbert_elliott(n, ge_of(params), seed).save(path);
  });
}

gj_status gj_awgn(const double* symbols, size_t count, double snr_db, uint64_t seed, double* out) {
  return guarded([&] {
    if (count > 0) {
      need(symbols, "symbols");
      need(out, "out");
    }
    const auto noisy = awgn(std::span<const double>(symbols, count), snr_db, seed);
    std::copy(noisy.begin(), noisy.end(), out);
  });
}

}  // extern "C"
