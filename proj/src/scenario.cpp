#include "scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "binary_io.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace genjscc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& v, const std::string& why) {
  fail(ErrorKind::kConfiguration, "scenario key '" + key + "': invalid value '" + v + "' (" + why + ")");
}

double to_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(d)) bad_value(key, v, "expected a number");
  return d;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
    bad_value(key, v, "expected a non-negative integer");
  errno = 0;
  const auto x = std::strtoull(t.c_str(), nullptr, 10);
  if (errno == ERANGE) bad_value(key, v, "out of range");
  return x;
}

std::uint32_t to_u32(const std::string& key, const std::string& v) {
  const auto x = to_uint(key, v);
  if (x > 0xFFFFFFFFull) bad_value(key, v, "out of range");
  return static_cast<std::uint32_t>(x);
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

using Setter = std::function<void(Scenario&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"name", [](Scenario& s, const std::string&, const std::string& v) { s.name = trim(v); }},
      {"schemes",
       [](Scenario& s, const std::string& k, const std::string& v) {
         s.schemes.clear();
         for (const auto& item : split_list(v)) {
           const auto sc = parse_scheme(item);
           if (!sc) bad_value(k, item, "schemes are DIGITAL_SEPARATE, WEAK_JSCC, ANALOG_JSCC");
           s.schemes.push_back(*sc);
         }
       }},
      {"channel",
       [](Scenario& s, const std::string& k, const std::string& v) {
         const auto t = trim(v);
         if (t == "awgn") s.channel = ChannelKind::kAwgn;
         else if (t == "gilbert_elliott") s.channel = ChannelKind::kGilbertElliott;
         else bad_value(k, v, "expected awgn or gilbert_elliott");
       }},
      {"snr_db", [](Scenario& s, const std::string& k, const std::string& v) { s.snr_db = to_doubles(k, v); }},
      {"snr_estimate_db",
       [](Scenario& s, const std::string& k, const std::string& v) { s.snr_estimate_db = to_double(k, v); }},
      {"bandwidth_ratio",
       [](Scenario& s, const std::string& k, const std::string& v) { s.bandwidth_ratio = to_double(k, v); }},
      {"mcs_table",
       [](Scenario& s, const std::string& k, const std::string& v) {
         s.mcs_table.clear();
         for (const auto& item : split_list(v)) {
           const auto colon = item.find(':');
           if (colon == std::string::npos) bad_value(k, item, "expected efficiency:min_snr_db");
           s.mcs_table.push_back({to_double(k, item.substr(0, colon)), to_double(k, item.substr(colon + 1))});
         }
       }},
      {"ge_p_gb", [](Scenario& s, const std::string& k, const std::string& v) { s.ge_p_gb = to_doubles(k, v); }},
      {"ge_p_bg", [](Scenario& s, const std::string& k, const std::string& v) { s.ge_p_bg = to_double(k, v); }},
      {"ge_loss_good",
       [](Scenario& s, const std::string& k, const std::string& v) { s.ge_loss_good = to_double(k, v); }},
      {"ge_loss_bad",
       [](Scenario& s, const std::string& k, const std::string& v) { s.ge_loss_bad = to_double(k, v); }},
      {"ge_trace_files",
       [](Scenario& s, const std::string&, const std::string& v) { s.ge_trace_files = split_list(v); }},
      {"interval_packets",
       [](Scenario& s, const std::string& k, const std::string& v) { s.interval_packets = to_u32(k, v); }},
      {"intervals", [](Scenario& s, const std::string& k, const std::string& v) { s.intervals = to_u32(k, v); }},
      {"fec_multipliers",
       [](Scenario& s, const std::string& k, const std::string& v) { s.fec_multipliers = to_doubles(k, v); }},
      {"data_packets",
       [](Scenario& s, const std::string& k, const std::string& v) { s.data_packets = to_u32(k, v); }},
      {"token_packets",
       [](Scenario& s, const std::string& k, const std::string& v) { s.token_packets = to_u32(k, v); }},
      {"sq_step", [](Scenario& s, const std::string& k, const std::string& v) { s.sq_step = to_double(k, v); }},
      {"seeds", [](Scenario& s, const std::string& k, const std::string& v) { s.seeds = to_u32(k, v); }},
      {"seed", [](Scenario& s, const std::string& k, const std::string& v) { s.seed = to_uint(k, v); }},
      {"source", [](Scenario& s, const std::string&, const std::string& v) { s.source = trim(v); }},
      {"source_width",
       [](Scenario& s, const std::string& k, const std::string& v) { s.source_width = static_cast<int>(to_u32(k, v)); }},
      {"source_height",
       [](Scenario& s, const std::string& k, const std::string& v) { s.source_height = static_cast<int>(to_u32(k, v)); }},
      {"source_rho", [](Scenario& s, const std::string& k, const std::string& v) { s.source_rho = to_double(k, v); }},
      {"source_sigma",
       [](Scenario& s, const std::string& k, const std::string& v) { s.source_sigma = to_double(k, v); }},
      {"train_images",
       [](Scenario& s, const std::string& k, const std::string& v) { s.train_images = to_u32(k, v); }},
      {"train_paths",
       [](Scenario& s, const std::string&, const std::string& v) { s.train_paths = split_list(v); }},
      {"codebook_size",
       [](Scenario& s, const std::string& k, const std::string& v) { s.codebook_size = to_u32(k, v); }},
      {"codebook_iters",
       [](Scenario& s, const std::string& k, const std::string& v) { s.codebook_iters = to_u32(k, v); }},
      {"codebook_samples",
       [](Scenario& s, const std::string& k, const std::string& v) { s.codebook_samples = to_u32(k, v); }},
      {"context_order",
       [](Scenario& s, const std::string& k, const std::string& v) { s.context_order = to_u32(k, v); }},
      {"token_order",
       [](Scenario& s, const std::string& k, const std::string& v) { s.token_order = to_u32(k, v); }},
      {"context_alpha",
       [](Scenario& s, const std::string& k, const std::string& v) { s.context_alpha = to_double(k, v); }},
  };
  return table;
}

const Setter* find_setter(const std::string& key) {
  for (const auto& [k, f] : setters())
    if (k == key) return &f;
  return nullptr;
}

}  // namespace

const std::vector<std::string>& scenario_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void Scenario::validate() const {
  auto cfg_error = [](const std::string& m) { fail(ErrorKind::kConfiguration, "scenario: " + m); };
  if (schemes.empty()) cfg_error("no schemes listed");
  if (seeds == 0) cfg_error("seeds must be >= 1");
  if (channel == ChannelKind::kAwgn) {
    if (snr_db.empty()) cfg_error("awgn channel needs snr_db values");
  } else {
    if (std::find(schemes.begin(), schemes.end(), Scheme::kAnalogJscc) != schemes.end())
      cfg_error("ANALOG_JSCC runs only on the awgn channel");
    if (ge_p_gb.empty() && ge_trace_files.empty()) cfg_error("gilbert_elliott channel needs ge_p_gb or ge_trace_files");
    if (!ge_p_gb.empty() && !ge_trace_files.empty()) cfg_error("give either ge_p_gb or ge_trace_files, not both");
    if (intervals < 2) cfg_error("intervals must be >= 2 (the first only seeds the loss estimate)");
    if (interval_packets == 0) cfg_error("interval_packets must be >= 1");
    if (token_packets > interval_packets) cfg_error("token_packets exceeds interval_packets");
    if (data_packets > interval_packets) cfg_error("data_packets exceeds interval_packets");
    if (fec_multipliers.empty()) cfg_error("fec_multipliers is empty");
    for (double p : ge_p_gb) GilbertElliottParams{p, ge_p_bg, ge_loss_good, ge_loss_bad}.validate();
  }
  if (source == "ar1") {
    if (source_width < 1 || source_height < 1) cfg_error("source dimensions must be positive");
    if (!(source_rho >= 0.0 && source_rho < 1.0)) cfg_error("source_rho must lie in [0, 1)");
    if (!(source_sigma > 0.0)) cfg_error("source_sigma must be > 0");
  }
  if (train_paths.empty() && train_images == 0) cfg_error("train_images must be >= 1");
  if (codebook_size < 2 || codebook_size > kMaxCodebookSize) cfg_error("codebook_size must lie in [2, 1024]");
  if (token_order > 4) cfg_error("token_order must be <= 4");
  SchemeConfig cfg;
  cfg.bandwidth_ratio = bandwidth_ratio;
  cfg.mcs_table = mcs_table;
  cfg.sq_step = sq_step;
  cfg.data_packets = data_packets;
  cfg.token_packets = token_packets;
  cfg.context_order = context_order;
  cfg.context_alpha = context_alpha;
  cfg.validate();
}

void apply_override(Scenario& scenario, const std::string& key, const std::string& value) {
  const auto* setter = find_setter(trim(key));
  if (!setter) fail(ErrorKind::kConfiguration, "unknown scenario key: " + trim(key));
  (*setter)(scenario, trim(key), value);
}

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::vector<std::string> unknown;
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::kConfiguration, "scenario line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto* setter = find_setter(key);
    if (!setter) {
      unknown.push_back(key);
      continue;
    }
    if (!seen.insert(key).second)
      fail(ErrorKind::kConfiguration, "scenario line " + std::to_string(lineno) + ": duplicate key " + key);
    (*setter)(s, key, value);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown scenario keys:";
    for (const auto& k : unknown) msg += " " + k;
    fail(ErrorKind::kConfiguration, msg);
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  const auto bytes = read_file(path);
  return parse_scenario(std::string(bytes.begin(), bytes.end()));
}

// ---------------------------------------------------------------------------

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Lane {
  Scheme scheme;
  double multiplier = 0.0;  // lossy digital only
  std::string label;
};

std::vector<Lane> lanes_of(const Scenario& sc) {
  std::vector<Lane> lanes;
  for (auto s : sc.schemes) {
    if (s == Scheme::kDigitalSeparate && sc.channel == ChannelKind::kGilbertElliott) {
      for (double n : sc.fec_multipliers)
        lanes.push_back({s, n, std::string(scheme_name(s)) + "/FEC" + format_number(n) + "x"});
    } else {
      lanes.push_back({s, 0.0, scheme_name(s)});
    }
  }
  return lanes;
}

SchemeConfig base_config(const Scenario& sc) {
  SchemeConfig cfg;
  cfg.bandwidth_ratio = sc.bandwidth_ratio;
  cfg.mcs_table = sc.mcs_table;
  cfg.snr_estimate_db = sc.snr_estimate_db;
  cfg.context_order = sc.context_order;
  cfg.context_alpha = sc.context_alpha;
  cfg.sq_step = sc.sq_step;
  cfg.data_packets = sc.data_packets;
  cfg.token_packets = sc.token_packets;
  return cfg;
}

std::size_t loss_scenarios(const Scenario& sc) {
  return sc.ge_trace_files.empty() ? sc.ge_p_gb.size() : sc.ge_trace_files.size();
}

ImageGrid source_image(const Scenario& sc, std::uint32_t s) {
  if (sc.source == "ar1")
    return gen_ar1_image(sc.source_width, sc.source_height, sc.source_rho, sc.source_sigma, 128.0,
                         derive_seed(sc.seed, 1, s));
  return load_pgm(sc.source);
}

std::vector<ImageGrid> training_images(const Scenario& sc) {
  std::vector<ImageGrid> out;
  if (!sc.train_paths.empty()) {
    for (const auto& p : sc.train_paths) out.push_back(load_pgm(p));
  } else {
    for (std::uint32_t i = 0; i < sc.train_images; ++i)
      out.push_back(gen_ar1_image(sc.source_width, sc.source_height, sc.source_rho, sc.source_sigma, 128.0,
                                  derive_seed(sc.seed, 2, i)));
  }
  return out;
}

}  // namespace

ChannelTrace scenario_trace(const Scenario& sc, std::size_t g, std::uint32_t s) {
  const std::size_t n = std::size_t{sc.intervals} * sc.interval_packets;
  if (!sc.ge_trace_files.empty()) {
    auto trace = ChannelTrace::load(sc.ge_trace_files.at(g));
    require(trace.size() >= n, ErrorKind::kConfiguration,
            "trace file " + sc.ge_trace_files[g] + " has " + std::to_string(trace.size()) +
                " packets, scenario needs " + std::to_string(n));
    return trace;
  }
  const GilbertElliottParams params{sc.ge_p_gb.at(g), sc.ge_p_bg, sc.ge_loss_good, sc.ge_loss_bad};
  return gilbert_elliott(n, params, derive_seed(derive_seed(sc.seed, 4, g), s, 0));
}

std::vector<SweepRecord> run_sweep(const Scenario& sc, const SweepOptions& options) {
  sc.validate();
  const auto lanes = lanes_of(sc);
  const bool need_tokens = std::find(sc.schemes.begin(), sc.schemes.end(), Scheme::kWeakJscc) != sc.schemes.end();
  const bool need_analog = std::find(sc.schemes.begin(), sc.schemes.end(), Scheme::kAnalogJscc) != sc.schemes.end();

  Assets assets;
  if (need_tokens || need_analog) {
    AssetSettings settings;
    settings.codebook_size = sc.codebook_size;
    settings.codebook_iters = static_cast<int>(sc.codebook_iters);
    settings.codebook_samples = sc.codebook_samples;
    settings.token_order = sc.token_order;
    settings.context_alpha = sc.context_alpha;
    settings.token_packets = sc.token_packets;
    settings.seed = derive_seed(sc.seed, 5, 0);
    const auto train = training_images(sc);
    assets = train_assets(train, settings, need_analog, need_tokens);
  }
  std::optional<ImageGrid> shared;
  if (options.image) shared = *options.image;
  else if (sc.source != "ar1") shared = load_pgm(sc.source);

  std::vector<std::uint32_t> seed_list;
  if (options.only_seed >= 0) {
    require(options.only_seed < sc.seeds, ErrorKind::kConfiguration, "seed index outside the scenario's seeds");
    seed_list.push_back(static_cast<std::uint32_t>(options.only_seed));
  } else {
    for (std::uint32_t s = 0; s < sc.seeds; ++s) seed_list.push_back(s);
  }

  // A unit is one seed (AWGN) or one (loss scenario, seed) pair; it owns
  // its image cache and emits every record that depends on it.
  struct Unit {
    std::size_t group;
    std::uint32_t seed;
  };
  std::vector<Unit> units;
  const std::size_t groups = sc.channel == ChannelKind::kAwgn ? 1 : loss_scenarios(sc);
  for (std::size_t g = 0; g < groups; ++g)
    for (auto s : seed_list) units.push_back({g, s});

  const SchemeConfig base = base_config(sc);
  auto run_unit = [&](const Unit& u) {
    std::vector<SweepRecord> out;
    TrialCache cache(shared ? *shared : source_image(sc, u.seed));
    if (sc.channel == ChannelKind::kAwgn) {
      for (std::size_t li = 0; li < lanes.size(); ++li) {
        for (std::size_t c = 0; c < sc.snr_db.size(); ++c) {
          const double snr = sc.snr_db[c];
          SweepRecord rec;
          switch (lanes[li].scheme) {
            case Scheme::kDigitalSeparate: rec = run_digital_separate(cache, base, snr); break;
            case Scheme::kWeakJscc: rec = run_weak_jscc_awgn(cache, base, assets, snr); break;
            case Scheme::kAnalogJscc:
              rec = run_analog(cache.image(), base, assets, snr,
                               derive_seed(derive_seed(sc.seed, 3, u.seed), li, c));
              break;
          }
          rec.scheme = lanes[li].label;
          rec.scheme_index = li;
          rec.condition = "snr=" + format_number(snr);
          rec.condition_index = c;
          rec.condition_value = snr;
          rec.group = "awgn";
          rec.seed = u.seed;
          out.push_back(std::move(rec));
        }
      }
      return out;
    }

    const auto trace = scenario_trace(sc, u.group, u.seed);
    const auto rates = interval_loss_rate(trace, sc.interval_packets);
    double group_value;
    std::string group_label;
    if (sc.ge_trace_files.empty()) {
      group_value = GilbertElliottParams{sc.ge_p_gb[u.group], sc.ge_p_bg, sc.ge_loss_good, sc.ge_loss_bad}
                        .stationary_loss();
      char buf[32];
      std::snprintf(buf, sizeof buf, "loss=%.3f", group_value);
      group_label = buf;
    } else {
      group_value = trace.loss_rate();
      group_label = "trace=" + std::to_string(u.group);
    }
    for (std::uint32_t i = 1; i < sc.intervals; ++i) {
      const std::span<const std::uint8_t> slots(trace.lost.data() + std::size_t{i} * sc.interval_packets,
                                                sc.interval_packets);
      const double est = rates[i - 1];
      for (std::size_t li = 0; li < lanes.size(); ++li) {
        SweepRecord rec;
        if (lanes[li].scheme == Scheme::kWeakJscc) {
          rec = run_weak_jscc(cache, base, assets, slots.first(sc.token_packets));
        } else {
          SchemeConfig cfg = base;
          cfg.fec_multiplier = lanes[li].multiplier;
          rec = run_digital_separate_lossy(cache, cfg, slots, est);
        }
        rec.scheme = lanes[li].label;
        rec.scheme_index = li;
        rec.condition = group_label + "/interval=" + std::to_string(i);
        rec.condition_index = u.group * (sc.intervals - 1) + (i - 1);
        rec.condition_value = group_value;
        rec.group = group_label;
        rec.seed = u.seed;
        out.push_back(std::move(rec));
      }
    }
    return out;
  };

  std::vector<std::vector<SweepRecord>> results(units.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(units.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < units.size(); ++i) results[i] = run_unit(units[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < units.size();) {
          try {
            results[i] = run_unit(units[i]);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = units.size();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  std::vector<SweepRecord> records;
  for (auto& r : results) records.insert(records.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  std::sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) {
    return std::tie(a.scheme_index, a.condition_index, a.seed) < std::tie(b.scheme_index, b.condition_index, b.seed);
  });
  return records;
}

std::string records_to_csv(std::span<const SweepRecord> records) {
  std::string out = std::string(kCsvHeader) + "\n";
  char buf[512];
  for (const auto& r : records) {
    const auto& m = r.metrics;
    char psnr[32];
    if (std::isinf(m.psnr)) std::snprintf(psnr, sizeof psnr, "inf");
    else std::snprintf(psnr, sizeof psnr, "%.6f", m.psnr);
    std::snprintf(buf, sizeof buf, "%s,%s,%llu,%.6f,%.6f,%.6f,%s,%d,%d,%d,%.6f\n", r.scheme.c_str(),
                  r.condition.c_str(), static_cast<unsigned long long>(r.seed), m.bpp, m.bandwidth_ratio, m.mse,
                  psnr, m.decode_failed ? 1 : 0, r.mcs_index, r.fec_r, r.realized_loss_rate);
    out += buf;
  }
  return out;
}

void write_csv(const std::string& path, std::span<const SweepRecord> records) {
  const auto text = records_to_csv(records);
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace genjscc
