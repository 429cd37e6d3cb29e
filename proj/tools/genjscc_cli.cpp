// genjscc command-line frontend. Talks to the library only through the C API.
//
// Exit codes: 0 success, 2 usage or configuration, 3 I/O, 4 data format
// (malformed/corrupt streams, model mismatch), 1 anything else.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "genjscc/genjscc.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitFormat = 4;

struct Failure {
  int code;
};

int exit_code(gj_status s) {
  switch (s) {
    case GJ_OK: return 0;
    case GJ_ERR_PARAMETER:
    case GJ_ERR_CONFIG: return kExitUsage;
    case GJ_ERR_IO: return kExitIo;
    case GJ_ERR_FORMAT:
    case GJ_ERR_MODEL_MISMATCH:
    case GJ_ERR_CORRUPT:
    case GJ_ERR_RANGE: return kExitFormat;
    default: return 1;
  }
}

void check(gj_status s, const std::string& what) {
  if (s == GJ_OK) return;
  std::fprintf(stderr, "genjscc: %s: %s\n", what.c_str(), gj_last_error());
  throw Failure{exit_code(s)};
}

[[noreturn]] void usage_error(const std::string& msg) {
  std::fprintf(stderr, "genjscc: %s\n", msg.c_str());
  throw Failure{kExitUsage};
}

void require_file(const std::string& path, const char* what) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) usage_error(std::string(what) + " not found: " + path);
}

// Small RAII wrappers so early exits release handles.
template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    std::swap(p, o.p);
    return *this;
  }
  ~Handle() { Free(p); }
  T** out() { return &p; }
};
using Image = Handle<gj_image, gj_image_free>;
using CodebookH = Handle<gj_codebook, gj_codebook_free>;
using Model = Handle<gj_model, gj_model_free>;
using ScenarioH = Handle<gj_scenario, gj_scenario_free>;
using Result = Handle<gj_sweep_result, gj_sweep_result_free>;

// --set KEY=VALUE for the subcommands that take codec parameters.
std::map<std::string, std::string> parse_sets(const std::vector<std::string>& sets,
                                              const std::vector<std::string>& allowed) {
  std::map<std::string, std::string> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) usage_error("--set expects KEY=VALUE, got '" + s + "'");
    const auto key = s.substr(0, eq);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      std::string keys;
      for (const auto& a : allowed) keys += " " + a;
      usage_error("unknown --set key '" + key + "' (known:" + keys + ")");
    }
    out[key] = s.substr(eq + 1);
  }
  return out;
}

double number(const std::map<std::string, std::string>& m, const std::string& key, double fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    usage_error("--set " + key + ": not a number: '" + it->second + "'");
  }
}

gj_codec_mode mode_of(const std::string& m) { return m == "vq" ? GJ_MODE_VQ : GJ_MODE_SQ; }

Image load_image(const std::string& path) {
  Image img;
  check(gj_image_load_pgm(path.c_str(), img.out()), "reading " + path);
  return img;
}

CodebookH load_codebook(const std::string& path) {
  CodebookH cb;
  if (path.empty()) return cb;
  require_file(path, "codebook file");
  check(gj_codebook_load(path.c_str(), cb.out()), "loading codebook " + path);
  return cb;
}

Model load_model(const std::string& path) {
  Model m;
  if (path.empty()) return m;
  require_file(path, "model file");
  check(gj_model_load(path.c_str(), m.out()), "loading model " + path);
  return m;
}

ScenarioH load_scenario(const std::string& path, const std::vector<std::string>& sets, const std::string& seed) {
  require_file(path, "scenario file");
  ScenarioH sc;
  check(gj_scenario_load(path.c_str(), sc.out()), "scenario " + path);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) usage_error("--set expects KEY=VALUE, got '" + s + "'");
    check(gj_scenario_set(sc.p, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()), "--set " + s);
  }
  if (!seed.empty()) check(gj_scenario_set(sc.p, "seed", seed.c_str()), "--seed");
  return sc;
}

void emit_csv(const gj_sweep_result* result, const std::string& out) {
  if (!out.empty()) {
    check(gj_sweep_result_write_csv(result, out.c_str()), "writing " + out);
    return;
  }
  size_t needed = 0;
  gj_sweep_result_csv(result, nullptr, 0, &needed);
  std::string text(needed, '\0');
  check(gj_sweep_result_csv(result, text.data(), text.size(), &needed), "formatting csv");
  std::fwrite(text.data(), 1, needed - 1, stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"genjscc: generative joint source-channel coding simulator"};
  app.require_subcommand(1);

  std::string in, out, mode = "sq", codebook_path, model_path, config, kind = "causal", seed, trace_out;
  std::vector<std::string> inputs, sets;
  unsigned jobs = 1;
  long long trial = 0;
  std::size_t loss_scenario = 0;
  const auto modes = CLI::IsMember({"sq", "vq"});

  auto* compress = app.add_subcommand("compress", "Compress a PGM image to a GJIM file");
  compress->add_option("--in", in, "input PGM")->required();
  compress->add_option("--out", out, "output file")->required();
  compress->add_option("--mode", mode, "sq or vq")->check(modes);
  compress->add_option("--codebook", codebook_path, "codebook file (vq)");
  compress->add_option("--model", model_path, "trained causal model file");
  compress->add_option("--set", sets, "step=, order=, alpha=");

  auto* decompress = app.add_subcommand("decompress", "Decode a GJIM file to PGM");
  decompress->add_option("--in", in, "compressed file")->required();
  decompress->add_option("--out", out, "output PGM")->required();
  decompress->add_option("--codebook", codebook_path, "codebook file (vq)");
  decompress->add_option("--model", model_path, "causal model used at compression");

  auto* train_cb = app.add_subcommand("train-codebook", "Train a 4x4 VQ codebook");
  train_cb->add_option("--in", inputs, "training PGM images")->required();
  train_cb->add_option("--out", out, "codebook file")->required();
  train_cb->add_option("--set", sets, "size=, iters=");
  train_cb->add_option("--seed", seed, "k-means seed");

  auto* train_model = app.add_subcommand("train-model", "Train a context model");
  train_model->add_option("--in", inputs, "training PGM images")->required();
  train_model->add_option("--out", out, "model file")->required();
  train_model->add_option("--kind", kind, "causal or neighborhood")->check(CLI::IsMember({"causal", "neighborhood"}));
  train_model->add_option("--mode", mode, "sq or vq")->check(modes);
  train_model->add_option("--codebook", codebook_path, "codebook file (vq)");
  train_model->add_option("--set", sets, "step=, order=, alpha=");

  auto* simulate = app.add_subcommand("simulate", "Run one seed of a scenario");
  simulate->add_option("--config", config, "scenario file")->required();
  simulate->add_option("--set", sets, "scenario override KEY=VALUE");
  simulate->add_option("--seed", seed, "base seed");
  simulate->add_option("--trial", trial, "seed index to run")->check(CLI::NonNegativeNumber);
  simulate->add_option("--in", in, "source PGM replacing the scenario source");
  simulate->add_option("--out", out, "CSV output (default: stdout)");
  simulate->add_option("--trace-out", trace_out, "write the loss trace of this trial");
  simulate->add_option("--loss-scenario", loss_scenario, "which loss scenario --trace-out writes");

  auto* sweep = app.add_subcommand("sweep", "Run every trial of a scenario");
  sweep->add_option("--config", config, "scenario file")->required();
  sweep->add_option("--set", sets, "scenario override KEY=VALUE");
  sweep->add_option("--seed", seed, "base seed");
  sweep->add_option("--out", out, "CSV output (default: stdout)");
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*compress) {
      const auto params = parse_sets(sets, {"step", "order", "alpha"});
      auto img = load_image(in);
      auto cb = load_codebook(codebook_path);
      auto model = load_model(model_path);
      if (mode == "vq" && !cb.p) usage_error("vq mode needs --codebook");
      gj_compress_options opt{mode_of(mode), number(params, "step", 1.0),
                              static_cast<uint32_t>(number(params, "order", 2)), number(params, "alpha", 1.0)};
      gj_compress_stats stats{};
      check(gj_compress_file(img.p, &opt, cb.p, model.p, out.c_str(), &stats), "compress");
      std::printf("bpp=%.6f cross_entropy=%.6f bits=%llu symbols=%llu\n", stats.bpp, stats.cross_entropy,
                  static_cast<unsigned long long>(stats.bits), static_cast<unsigned long long>(stats.symbols));
    } else if (*decompress) {
      require_file(in, "input file");
      auto cb = load_codebook(codebook_path);
      auto model = load_model(model_path);
      Image img;
      check(gj_decompress_file(in.c_str(), cb.p, model.p, img.out()), "decompress " + in);
      check(gj_image_save_pgm(img.p, out.c_str()), "writing " + out);
    } else if (*train_cb) {
      const auto params = parse_sets(sets, {"size", "iters"});
      std::vector<Image> imgs;
      std::vector<const gj_image*> ptrs;
      for (const auto& p : inputs) {
        imgs.push_back(load_image(p));
        ptrs.push_back(imgs.back().p);
      }
      CodebookH cb;
      const auto s = seed.empty() ? 1ull : std::stoull(seed);
      check(gj_codebook_train(ptrs.data(), ptrs.size(), static_cast<uint32_t>(number(params, "size", 256)),
                              static_cast<uint32_t>(number(params, "iters", 12)), s, cb.out()),
            "train-codebook");
      check(gj_codebook_save(cb.p, out.c_str()), "writing " + out);
      std::fprintf(stderr, "codebook of %u entries written to %s\n", gj_codebook_size(cb.p), out.c_str());
    } else if (*train_model) {
      const auto params = parse_sets(sets, {"step", "order", "alpha"});
      auto cb = load_codebook(codebook_path);
      std::vector<Image> imgs;
      std::vector<const gj_image*> ptrs;
      for (const auto& p : inputs) {
        imgs.push_back(load_image(p));
        ptrs.push_back(imgs.back().p);
      }
      gj_train_options opt{kind == "neighborhood" ? GJ_MODEL_NEIGHBORHOOD : GJ_MODEL_CAUSAL, mode_of(mode),
                           number(params, "step", 1.0), static_cast<uint32_t>(number(params, "order", 2)),
                           number(params, "alpha", 1.0)};
      Model model;
      check(gj_model_train(ptrs.data(), ptrs.size(), &opt, cb.p, model.out()), "train-model");
      check(gj_model_save(model.p, out.c_str()), "writing " + out);
      std::fprintf(stderr, "%s model (alphabet %u) written to %s\n", kind.c_str(), gj_model_alphabet(model.p),
                   out.c_str());
    } else if (*simulate) {
      auto sc = load_scenario(config, sets, seed);
      Image img;
      if (!in.empty()) img = load_image(in);
      Result result;
      check(gj_scenario_run(sc.p, 1, trial, img.p, result.out()), "simulate");
      if (!trace_out.empty())
        check(gj_scenario_write_trace(sc.p, loss_scenario, static_cast<uint32_t>(trial), trace_out.c_str()),
              "writing trace " + trace_out);
      emit_csv(result.p, out);
      std::fprintf(stderr, "%zu records\n", gj_sweep_result_count(result.p));
    } else if (*sweep) {
      auto sc = load_scenario(config, sets, seed);
      Result result;
      check(gj_scenario_run(sc.p, jobs, -1, nullptr, result.out()), "sweep");
      emit_csv(result.p, out);
      std::fprintf(stderr, "%zu records%s%s\n", gj_sweep_result_count(result.p), out.empty() ? "" : " written to ",
                   out.c_str());
    }
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "genjscc: %s\n", e.what());
    return kExitUsage;
  }
  return 0;
}
