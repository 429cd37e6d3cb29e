/* C interface to the genjscc library. All functions return a gj_status;
 * on failure gj_last_error() describes the problem (per thread). Handles
 * are opaque and released with the matching *_free function. */
#ifndef GENJSCC_H
#define GENJSCC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(GJ_BUILDING_LIBRARY)
#    define GJ_API __declspec(dllexport)
#  else
#    define GJ_API __declspec(dllimport)
#  endif
#else
#  define GJ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gj_status {
  GJ_OK = 0,
  GJ_ERR_PARAMETER = 1,      /* argument outside its domain */
  GJ_ERR_CONFIG = 2,         /* invalid scenario or codec configuration */
  GJ_ERR_IO = 3,             /* file could not be read or written */
  GJ_ERR_FORMAT = 4,         /* malformed file or stream */
  GJ_ERR_MODEL_MISMATCH = 5, /* stream was coded with a different model */
  GJ_ERR_CORRUPT = 6,        /* payload does not decode */
  GJ_ERR_RANGE = 7,          /* index out of range or output buffer too small */
  GJ_ERR_INTERNAL = 8
} gj_status;

GJ_API const char* gj_version(void);
GJ_API const char* gj_status_name(gj_status status);
/* Message of the last failed call on this thread ("" if none). */
GJ_API const char* gj_last_error(void);

/* ---- images (8-bit grayscale) ---------------------------------------- */

typedef struct gj_image gj_image;

GJ_API gj_status gj_image_create(int width, int height, const uint8_t* samples, gj_image** out);
GJ_API gj_status gj_image_load_pgm(const char* path, gj_image** out);
GJ_API gj_status gj_image_save_pgm(const gj_image* image, const char* path);
GJ_API gj_status gj_image_ar1(int width, int height, double rho, double sigma, uint64_t seed,
                              gj_image** out);
GJ_API int gj_image_width(const gj_image* image);
GJ_API int gj_image_height(const gj_image* image);
GJ_API const uint8_t* gj_image_samples(const gj_image* image);
GJ_API gj_status gj_image_mse(const gj_image* a, const gj_image* b, double* mse);
GJ_API void gj_image_free(gj_image* image);

/* ---- VQ codebooks (4x4 patches) -------------------------------------- */

typedef struct gj_codebook gj_codebook;

GJ_API gj_status gj_codebook_train(const gj_image* const* images, size_t count, uint32_t size,
                                   uint32_t iterations, uint64_t seed, gj_codebook** out);
GJ_API gj_status gj_codebook_load(const char* path, gj_codebook** out);
GJ_API gj_status gj_codebook_save(const gj_codebook* codebook, const char* path);
GJ_API uint32_t gj_codebook_size(const gj_codebook* codebook);
GJ_API void gj_codebook_free(gj_codebook* codebook);

/* ---- context models --------------------------------------------------- */

typedef struct gj_model gj_model;

typedef enum gj_model_kind { GJ_MODEL_CAUSAL = 0, GJ_MODEL_NEIGHBORHOOD = 1 } gj_model_kind;
typedef enum gj_codec_mode { GJ_MODE_SQ = 0, GJ_MODE_VQ = 1 } gj_codec_mode;

/* Untrained causal model over an alphabet of the given size. */
GJ_API gj_status gj_model_create_causal(uint32_t alphabet, uint32_t order, double alpha, gj_model** out);

typedef struct gj_train_options {
  gj_model_kind kind;
  gj_codec_mode mode;  /* symbols the model describes: SQ levels or VQ tokens */
  double step;         /* SQ quantizer step */
  uint32_t order;      /* causal context order */
  double alpha;        /* additive smoothing */
} gj_train_options;

/* Neighborhood models need mode GJ_MODE_VQ and a codebook. */
GJ_API gj_status gj_model_train(const gj_image* const* images, size_t count, const gj_train_options* options,
                                const gj_codebook* codebook, gj_model** out);
GJ_API gj_status gj_model_load(const char* path, gj_model** out);
GJ_API gj_status gj_model_save(const gj_model* model, const char* path);
GJ_API gj_model_kind gj_model_kind_of(const gj_model* model);
GJ_API uint32_t gj_model_alphabet(const gj_model* model);
GJ_API uint64_t gj_model_hash(const gj_model* model);
GJ_API void gj_model_free(gj_model* model);

/* ---- image compression ------------------------------------------------ */

typedef struct gj_compress_options {
  gj_codec_mode mode;
  double step;     /* SQ mode */
  uint32_t order;  /* fresh adaptive model when no trained model is given */
  double alpha;
} gj_compress_options;

typedef struct gj_compress_stats {
  uint64_t bits;        /* size of the written file */
  uint64_t symbols;
  double bpp;
  double cross_entropy; /* ideal bits per symbol under the coding model */
} gj_compress_stats;

/* `codebook` is required in VQ mode; `model` (causal, may be NULL) replaces
 * the fresh adaptive model. */
GJ_API gj_status gj_compress_file(const gj_image* image, const gj_compress_options* options,
                                  const gj_codebook* codebook, const gj_model* model, const char* out_path,
                                  gj_compress_stats* stats);
GJ_API gj_status gj_decompress_file(const char* in_path, const gj_codebook* codebook, const gj_model* model,
                                    gj_image** out);

/* ---- scenarios and sweeps --------------------------------------------- */

typedef struct gj_scenario gj_scenario;
typedef struct gj_sweep_result gj_sweep_result;

GJ_API gj_status gj_scenario_load(const char* path, gj_scenario** out);
GJ_API gj_status gj_scenario_parse(const char* text, gj_scenario** out);
GJ_API gj_status gj_scenario_set(gj_scenario* scenario, const char* key, const char* value);
GJ_API void gj_scenario_free(gj_scenario* scenario);

/* seed_index < 0 runs every seed; `image` (may be NULL) replaces the
 * scenario's source for every trial. */
GJ_API gj_status gj_scenario_run(const gj_scenario* scenario, unsigned jobs, long long seed_index,
                                 const gj_image* image, gj_sweep_result** out);
/* Writes the loss trace of (loss scenario, seed) for packet channels. */
GJ_API gj_status gj_scenario_write_trace(const gj_scenario* scenario, size_t loss_scenario, uint32_t seed,
                                         const char* path);

typedef struct gj_record {
  const char* scheme;    /* valid while the result lives */
  const char* condition;
  uint64_t seed;
  double bpp;
  double bandwidth_ratio;
  double mse;
  double psnr;           /* +inf for a perfect reconstruction */
  int decode_failed;
  int mcs_index;         /* -1 when not applicable */
  int fec_r;             /* -1 when not applicable */
  double realized_loss_rate;
  uint64_t parity_bits;
} gj_record;

GJ_API size_t gj_sweep_result_count(const gj_sweep_result* result);
GJ_API gj_status gj_sweep_result_get(const gj_sweep_result* result, size_t index, gj_record* out);
/* Copies the CSV text (NUL-terminated) into buf; *needed receives the size
 * including the terminator. GJ_ERR_RANGE when cap is too small. */
GJ_API gj_status gj_sweep_result_csv(const gj_sweep_result* result, char* buf, size_t cap, size_t* needed);
GJ_API gj_status gj_sweep_result_write_csv(const gj_sweep_result* result, const char* path);
GJ_API void gj_sweep_result_free(gj_sweep_result* result);

/* ---- primitives ------------------------------------------------------- */

/* Entropy-codes symbols under a causal model into a serialized "GJS1"
 * stream. *written receives the stream size; GJ_ERR_RANGE if cap is short. */
GJ_API gj_status gj_ac_encode(const uint32_t* symbols, size_t count, const gj_model* model, int adaptive,
                              size_t row_length, uint8_t* out, size_t cap, size_t* written);
GJ_API gj_status gj_ac_decode(const uint8_t* stream, size_t size, const gj_model* model, int adaptive,
                              size_t row_length, uint32_t* out, size_t cap, size_t* count);

/* data: k packets of `length` bytes, contiguous. parity: r * length bytes. */
GJ_API gj_status gj_fec_encode(const uint8_t* data, uint32_t k, size_t length, uint32_t r, uint8_t* parity);
/* packets: `count` received packets of `length` bytes with their indices
 * (0..k-1 data, k..k+r-1 parity). On success *recovered is 1 and data
 * receives k * length bytes; with fewer than k packets *recovered is 0. */
GJ_API gj_status gj_fec_decode(const uint8_t* packets, const uint32_t* indices, size_t count, size_t length,
                               uint32_t k, uint32_t r, uint8_t* data, int* recovered);
GJ_API uint32_t gj_provision_repair(double multiplier, double estimated_loss, uint32_t k);

typedef struct gj_ge_params {
  double p_gb;
  double p_bg;
  double loss_good;
  double loss_bad;
} gj_ge_params;

/* lost[i] = 1 for a lost packet; state (may be NULL) receives 0 good / 1 bad. */
GJ_API gj_status gj_ge_trace(size_t n, const gj_ge_params* params, uint64_t seed, uint8_t* lost, uint8_t* state);
GJ_API gj_status gj_ge_trace_write(size_t n, const gj_ge_params* params, uint64_t seed, const char* path);

/* Adds Gaussian noise for the given SNR relative to the block's mean power. */
GJ_API gj_status gj_awgn(const double* symbols, size_t count, double snr_db, uint64_t seed, double* out);

#ifdef __cplusplus
}
#endif

#endif /* GENJSCC_H */
