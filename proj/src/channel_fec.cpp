#include "channel_fec.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "binary_io.hpp"
#include "error.hpp"
#include "gf256.hpp"
#include "rng.hpp"

namespace genjscc {

double mean_power(std::span<const double> symbols) {
  double p = 0.0;
  for (double s : symbols) p += s * s;
  return symbols.empty() ? 0.0 : p / static_cast<double>(symbols.size());
}

std::vector<double> awgn(std::span<const double> symbols, double snr_db, std::uint64_t seed) {
  require(!symbols.empty(), ErrorKind::kParameter, "awgn: empty input");
  require(std::isfinite(snr_db), ErrorKind::kParameter, "awgn: snr must be finite");
  const double power = mean_power(symbols);
  require(power > 0.0, ErrorKind::kParameter, "awgn: input has zero power");
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<double> out(symbols.begin(), symbols.end());
  for (auto& v : out) v += normal(rng);
  return out;
}

double realized_snr_db(std::span<const double> clean, std::span<const double> noisy) {
  require(clean.size() == noisy.size() && !clean.empty(), ErrorKind::kParameter,
          "realized_snr_db: length mismatch");
  double noise = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) noise += (noisy[i] - clean[i]) * (noisy[i] - clean[i]);
  noise /= static_cast<double>(clean.size());
  return 10.0 * std::log10(mean_power(clean) / noise);
}

// ---------------------------------------------------------------------------

void GilbertElliottParams::validate() const {
  for (double p : {p_gb, p_bg, loss_good, loss_bad})
    require(p >= 0.0 && p <= 1.0, ErrorKind::kParameter,
            "gilbert_elliott: probabilities must lie in [0,1]");
  require(p_gb + p_bg > 0.0, ErrorKind::kParameter,
          "gilbert_elliott: p_gb = p_bg = 0 has no stationary distribution");
}

double ChannelTrace::loss_rate() const {
  if (lost.empty()) return 0.0;
  std::size_t n = 0;
  for (auto l : lost) n += l != 0;
  return double(n) / double(lost.size());
}

double ChannelTrace::mean_burst_length() const {
  std::size_t bursts = 0, total = 0, run = 0;
  for (auto l : lost) {
    if (l) {
      ++run;
    } else if (run) {
      ++bursts;
      total += run;
      run = 0;
    }
  }
  if (run) {
    ++bursts;
    total += run;
  }
  return bursts ? double(total) / double(bursts) : 0.0;
}

ChannelTrace ChannelTrace::slice(std::size_t begin, std::size_t length) const {
  require(begin + length <= lost.size(), ErrorKind::kRange, "trace slice beyond the end of the trace");
  ChannelTrace t;
  t.params = params;
  t.lost.assign(lost.begin() + static_cast<std::ptrdiff_t>(begin),
                lost.begin() + static_cast<std::ptrdiff_t>(begin + length));
  t.state.assign(state.begin() + static_cast<std::ptrdiff_t>(begin),
                 state.begin() + static_cast<std::ptrdiff_t>(begin + length));
  return t;
}

std::string ChannelTrace::to_text() const {
  std::string out;
  out.reserve(lost.size() * 12);
  for (std::size_t i = 0; i < lost.size(); ++i) {
    out += std::to_string(i);
    out += state[i] == ChannelState::kBad ? ",B," : ",G,";
    out += lost[i] ? '1' : '0';
    out += '\n';
  }
  return out;
}

ChannelTrace ChannelTrace::from_text(const std::string& text) {
  ChannelTrace t;
  std::istringstream in(text);
  std::string line;
  std::size_t expect = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos)
      fail(ErrorKind::kFormat, "trace: line " + std::to_string(expect + 1) + " is not index,state,lost");
    const std::string idx = line.substr(0, c1);
    const std::string st = line.substr(c1 + 1, c2 - c1 - 1);
    const std::string ls = line.substr(c2 + 1);
    if (idx != std::to_string(expect))
      fail(ErrorKind::kFormat, "trace: expected index " + std::to_string(expect) + ", got '" + idx + "'");
    if (st != "G" && st != "B") fail(ErrorKind::kFormat, "trace: state must be G or B, got '" + st + "'");
    if (ls != "0" && ls != "1") fail(ErrorKind::kFormat, "trace: lost must be 0 or 1, got '" + ls + "'");
    t.state.push_back(st == "B" ? ChannelState::kBad : ChannelState::kGood);
    t.lost.push_back(ls == "1");
    ++expect;
  }
  return t;
}

void ChannelTrace::save(const std::string& path) const {
  const std::string text = to_text();
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ChannelTrace ChannelTrace::load(const std::string& path) {
  auto bytes = read_file(path);
  return from_text(std::string(bytes.begin(), bytes.end()));
}

ChannelTrace gilbert_elliott(std::size_t n, const GilbertElliottParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ChannelTrace t;
  t.params = params;
  t.lost.resize(n);
  t.state.resize(n);
  ChannelState s = u(rng) < params.stationary_bad() ? ChannelState::kBad : ChannelState::kGood;
  for (std::size_t i = 0; i < n; ++i) {
    t.state[i] = s;
    const double loss = s == ChannelState::kBad ? params.loss_bad : params.loss_good;
    t.lost[i] = u(rng) < loss;
    const double flip = s == ChannelState::kBad ? params.p_bg : params.p_gb;
    if (u(rng) < flip) s = s == ChannelState::kBad ? ChannelState::kGood : ChannelState::kBad;
  }
  return t;
}

std::vector<double> interval_loss_rate(const ChannelTrace& trace, std::size_t window) {
  require(window >= 1, ErrorKind::kParameter, "interval_loss_rate: window must be >= 1");
  std::vector<double> rates;
  for (std::size_t start = 0; start < trace.lost.size(); start += window) {
    const std::size_t end = std::min(start + window, trace.lost.size());
    std::size_t n = 0;
    for (std::size_t i = start; i < end; ++i) n += trace.lost[i] != 0;
    rates.push_back(double(n) / double(end - start));
  }
  return rates;
}

// ---------------------------------------------------------------------------

void FecConfig::validate() const {
  require(k >= 1, ErrorKind::kConfiguration, "fec: k must be >= 1");
  require(k + r <= 255, ErrorKind::kConfiguration,
          "fec: k + r = " + std::to_string(k + r) + " exceeds the GF(256) limit of 255");
}

std::uint32_t provision_repair(double multiplier, double estimated_loss, std::uint32_t k) {
  require(multiplier >= 0.0 && std::isfinite(multiplier), ErrorKind::kConfiguration,
          "fec: multiplier must be >= 0");
  require(estimated_loss >= 0.0 && estimated_loss <= 1.0, ErrorKind::kParameter,
          "fec: loss estimate must lie in [0,1]");
  // The small epsilon keeps exact products such as 0.25 * 16 from rounding up.
  const double expected = std::ceil(estimated_loss * k - 1e-9);
  return static_cast<std::uint32_t>(std::llround(multiplier * std::max(0.0, expected)));
}

namespace {

// Systematic generator: Vandermonde rows V[i][j] = x_i^j with x_i = 2^i,
// right-multiplied by the inverse of its top k x k block. Any k rows of V
// are independent, hence so are any k rows of the result.
gf256::Matrix generator_matrix(std::uint32_t k, std::uint32_t n) {
  gf256::Matrix v(static_cast<int>(n), static_cast<int>(k));
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < k; ++j) v.at(static_cast<int>(i), static_cast<int>(j)) = gf256::exp(i * j);
  gf256::Matrix top(static_cast<int>(k), static_cast<int>(k));
  for (std::uint32_t i = 0; i < k; ++i)
    for (std::uint32_t j = 0; j < k; ++j)
      top.at(static_cast<int>(i), static_cast<int>(j)) = v.at(static_cast<int>(i), static_cast<int>(j));
  if (!gf256::invert(top)) fail(ErrorKind::kConfiguration, "fec: singular Vandermonde block");
  return gf256::multiply(v, top);
}

}  // namespace

std::vector<Packet> fec_encode(std::span<const std::vector<std::uint8_t>> data, std::uint32_t r) {
  FecConfig cfg{static_cast<std::uint32_t>(data.size()), r};
  cfg.validate();
  std::size_t len = 0;
  for (const auto& d : data) len = std::max(len, d.size());

  std::vector<Packet> out(cfg.n());
  for (std::uint32_t i = 0; i < cfg.k; ++i) {
    out[i].index = i;
    out[i].payload = data[i];
    out[i].payload.resize(len, 0);
  }
  if (r == 0) return out;
  const auto g = generator_matrix(cfg.k, cfg.n());
  for (std::uint32_t p = cfg.k; p < cfg.n(); ++p) {
    out[p].index = p;
    out[p].payload.assign(len, 0);
    for (std::uint32_t j = 0; j < cfg.k; ++j)
      gf256::mul_add(out[p].payload, out[j].payload, g.at(static_cast<int>(p), static_cast<int>(j)));
  }
  return out;
}

FecDecodeResult fec_decode(std::span<const Packet> received, const FecConfig& cfg) {
  cfg.validate();
  std::vector<const Packet*> by_index(cfg.n(), nullptr);
  std::size_t len = 0;
  bool first = true;
  for (const auto& p : received) {
    require(p.index < cfg.n(), ErrorKind::kParameter,
            "fec_decode: packet index " + std::to_string(p.index) + " outside the block");
    require(by_index[p.index] == nullptr, ErrorKind::kParameter,
            "fec_decode: duplicate packet index " + std::to_string(p.index));
    if (first) {
      len = p.payload.size();
      first = false;
    } else if (p.payload.size() != len) {
      fail(ErrorKind::kFormat, "fec_decode: packets in one block have different lengths");
    }
    by_index[p.index] = &p;
  }

  FecDecodeResult result;
  if (received.size() < cfg.k) return result;

  result.recovered = true;
  result.data.resize(cfg.k);
  bool systematic = true;
  for (std::uint32_t i = 0; i < cfg.k; ++i) systematic = systematic && by_index[i];
  if (systematic) {
    for (std::uint32_t i = 0; i < cfg.k; ++i) result.data[i] = by_index[i]->payload;
    return result;
  }

  // First k arrivals in index order; data rows are unit vectors of G.
  std::vector<std::uint32_t> rows;
  for (std::uint32_t i = 0; i < cfg.n() && rows.size() < cfg.k; ++i)
    if (by_index[i]) rows.push_back(i);
  const auto g = generator_matrix(cfg.k, cfg.n());
  gf256::Matrix sub(static_cast<int>(cfg.k), static_cast<int>(cfg.k));
  for (std::uint32_t i = 0; i < cfg.k; ++i)
    for (std::uint32_t j = 0; j < cfg.k; ++j)
      sub.at(static_cast<int>(i), static_cast<int>(j)) = g.at(static_cast<int>(rows[i]), static_cast<int>(j));
  if (!gf256::invert(sub)) fail(ErrorKind::kCorrupt, "fec_decode: singular recovery matrix");
  for (std::uint32_t j = 0; j < cfg.k; ++j) {
    result.data[j].assign(len, 0);
    for (std::uint32_t i = 0; i < cfg.k; ++i)
      gf256::mul_add(result.data[j], by_index[rows[i]]->payload, sub.at(static_cast<int>(j), static_cast<int>(i)));
  }
  return result;
}

}  // namespace genjscc
