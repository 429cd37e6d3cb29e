#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <limits>
#include <set>
#include <tuple>
#include <string>

#include "error.hpp"
#include "scenario.hpp"

namespace genjscc {
namespace {

const char* kSmallAwgn = R"(
name = small
schemes = DIGITAL_SEPARATE, WEAK_JSCC, ANALOG_JSCC
channel = awgn
snr_db = 8, 2, -4      # trailing comment
snr_estimate_db = 2
bandwidth_ratio = 0.5
seeds = 3
seed = 11
source_width = 64
source_height = 64
train_images = 2
codebook_size = 16
codebook_iters = 4
context_order = 1
)";

const char* kSmallGe = R"(
schemes = DIGITAL_SEPARATE, WEAK_JSCC
channel = gilbert_elliott
ge_p_gb = 0.05, 0.2
ge_p_bg = 0.5
interval_packets = 32
intervals = 4
fec_multipliers = 1, 4
data_packets = 8
token_packets = 8
seeds = 2
seed = 3
source_width = 64
source_height = 64
train_images = 2
codebook_size = 16
codebook_iters = 4
context_order = 1
)";

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kParameter;
}

TEST(ScenarioParse, ValuesAndDefaults) {
  const auto s = parse_scenario(kSmallAwgn);
  EXPECT_EQ(s.name, "small");
  EXPECT_EQ(s.schemes.size(), 3u);
  EXPECT_EQ(s.snr_db, (std::vector<double>{8, 2, -4}));
  EXPECT_EQ(s.seed, 11u);
  EXPECT_EQ(s.codebook_size, 16u);
  EXPECT_EQ(s.token_order, 0u);  // default
  EXPECT_EQ(Scenario{}.context_order, 2u);
  EXPECT_EQ(Scenario{}.context_alpha, 1.0);
  EXPECT_NO_THROW(s.validate());
}

TEST(ScenarioParse, McsTableAndTraces) {
  const auto s = parse_scenario("mcs_table = 0.5:-3, 1.5:4\nge_trace_files = a.csv, b.csv\n");
  ASSERT_EQ(s.mcs_table.size(), 2u);
  EXPECT_DOUBLE_EQ(s.mcs_table[1].efficiency, 1.5);
  EXPECT_DOUBLE_EQ(s.mcs_table[1].min_snr_db, 4);
  EXPECT_EQ(s.ge_trace_files, (std::vector<std::string>{"a.csv", "b.csv"}));
}

TEST(ScenarioParse, UnknownKeysReportedTogether) {
  try {
    parse_scenario("seeds = 2\nfoo = 1\nsnr = 3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfiguration);
    const std::string m = e.what();
    EXPECT_NE(m.find("foo"), std::string::npos);
    EXPECT_NE(m.find("snr"), std::string::npos);
  }
}

TEST(ScenarioParse, Errors) {
  EXPECT_EQ(kind_of([] { parse_scenario("seeds = 2\nseeds = 3\n"); }), ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([] { parse_scenario("seeds 2\n"); }), ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([] { parse_scenario("seeds = -2\n"); }), ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([] { parse_scenario("snr_db = 1, x\n"); }), ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([] { parse_scenario("schemes = DIGITAL\n"); }), ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([] { parse_scenario("channel = rayleigh\n"); }), ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([] { load_scenario("/nonexistent/dir/x.scn"); }), ErrorKind::kIo);
}

TEST(ScenarioParse, KeysAreAllSettable) {
  const auto& keys = scenario_keys();
  EXPECT_GE(keys.size(), 30u);
  EXPECT_EQ(std::set<std::string>(keys.begin(), keys.end()).size(), keys.size());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "context_alpha"), keys.end());
}

TEST(ScenarioOverride, AppliesAndRejects) {
  auto s = parse_scenario(kSmallAwgn);
  apply_override(s, "seeds", "7");
  EXPECT_EQ(s.seeds, 7u);
  apply_override(s, " snr_db ", "1,2");
  EXPECT_EQ(s.snr_db.size(), 2u);
  EXPECT_EQ(kind_of([&] { apply_override(s, "nope", "1"); }), ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([&] { apply_override(s, "seeds", "many"); }), ErrorKind::kConfiguration);
}

TEST(ScenarioValidate, Rejections) {
  auto base = parse_scenario(kSmallGe);
  EXPECT_NO_THROW(base.validate());
  auto s = base;
  s.schemes.push_back(Scheme::kAnalogJscc);
  EXPECT_THROW(s.validate(), Error);
  s = base;
  s.intervals = 1;
  EXPECT_THROW(s.validate(), Error);
  s = base;
  s.token_packets = 64;
  EXPECT_THROW(s.validate(), Error);
  s = base;
  s.ge_p_gb = {1.5};
  EXPECT_THROW(s.validate(), Error);
  s = base;
  s.source_rho = 1.0;
  EXPECT_THROW(s.validate(), Error);
  s = parse_scenario(kSmallAwgn);
  s.snr_db.clear();
  EXPECT_THROW(s.validate(), Error);
  s = parse_scenario(kSmallAwgn);
  s.schemes.clear();
  EXPECT_THROW(s.validate(), Error);
}

TEST(BundledScenarios, ParseAndValidate) {
  for (const char* f : {"fig5.scn", "fig6.scn"}) {
    const auto s = load_scenario(std::string(GJ_SCENARIO_DIR) + "/" + f);
    EXPECT_NO_THROW(s.validate()) << f;
  }
  const auto fig5 = load_scenario(std::string(GJ_SCENARIO_DIR) + "/fig5.scn");
  EXPECT_EQ(fig5.snr_db, (std::vector<double>{6, 4, 2, 0, -2, -4}));
  EXPECT_DOUBLE_EQ(fig5.bandwidth_ratio, 0.02);
  EXPECT_GE(fig5.seeds, 20u);
  const auto fig6 = load_scenario(std::string(GJ_SCENARIO_DIR) + "/fig6.scn");
  EXPECT_EQ(fig6.channel, ChannelKind::kGilbertElliott);
  // stationary loss spans roughly 5% to 30%
  const GilbertElliottParams lo{fig6.ge_p_gb.front(), fig6.ge_p_bg, fig6.ge_loss_good, fig6.ge_loss_bad};
  const GilbertElliottParams hi{fig6.ge_p_gb.back(), fig6.ge_p_bg, fig6.ge_loss_good, fig6.ge_loss_bad};
  EXPECT_NEAR(lo.stationary_loss(), 0.05, 0.01);
  EXPECT_NEAR(hi.stationary_loss(), 0.30, 0.01);
}

TEST(Sweep, AwgnRecordProductAndOrder) {
  const auto s = parse_scenario(kSmallAwgn);
  const auto recs = run_sweep(s);
  ASSERT_EQ(recs.size(), 3u * 3 * 3);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const auto& a = recs[i - 1];
    const auto& b = recs[i];
    EXPECT_TRUE(std::tie(a.scheme_index, a.condition_index, a.seed) < std::tie(b.scheme_index, b.condition_index, b.seed));
  }
  EXPECT_EQ(recs[0].scheme, "DIGITAL_SEPARATE");
  EXPECT_EQ(recs[0].condition, "snr=8");
  EXPECT_EQ(recs[3].condition, "snr=2");
  EXPECT_EQ(recs.back().scheme, "ANALOG_JSCC");
  EXPECT_EQ(recs.back().condition, "snr=-4");
  for (const auto& r : recs) {
    if (r.scheme == "ANALOG_JSCC") {
      EXPECT_EQ(r.metrics.bpp, 0.0);
      EXPECT_FALSE(r.metrics.decode_failed);
    }
    if (r.scheme == "DIGITAL_SEPARATE") EXPECT_EQ(r.metrics.decode_failed, r.condition_value < 2);
  }
}

TEST(Sweep, DeterministicAcrossWorkerCounts) {
  const auto s = parse_scenario(kSmallAwgn);
  SweepOptions one, three;
  three.jobs = 3;
  EXPECT_EQ(records_to_csv(run_sweep(s, one)), records_to_csv(run_sweep(s, three)));
  const auto g = parse_scenario(kSmallGe);
  EXPECT_EQ(records_to_csv(run_sweep(g, one)), records_to_csv(run_sweep(g, three)));
}

TEST(Sweep, SingleSeedMatchesFullRun) {
  const auto s = parse_scenario(kSmallAwgn);
  const auto all = run_sweep(s);
  SweepOptions o;
  o.only_seed = 1;
  const auto one = run_sweep(s, o);
  ASSERT_EQ(one.size(), 9u);
  std::size_t j = 0;
  for (const auto& r : all)
    if (r.seed == 1) EXPECT_EQ(records_to_csv(std::vector{r}), records_to_csv(std::vector{one[j++]}));
  o.only_seed = 3;
  EXPECT_THROW(run_sweep(s, o), Error);
}

TEST(Sweep, GilbertElliottLanesAndProvisioning) {
  const auto s = parse_scenario(kSmallGe);
  const auto recs = run_sweep(s);
  // lanes: FEC1x, FEC4x, WEAK_JSCC; 2 loss scenarios x 3 intervals; 2 seeds
  ASSERT_EQ(recs.size(), 3u * 6 * 2);
  std::set<std::string> lanes;
  for (const auto& r : recs) lanes.insert(r.scheme);
  EXPECT_EQ(lanes, (std::set<std::string>{"DIGITAL_SEPARATE/FEC1x", "DIGITAL_SEPARATE/FEC4x", "WEAK_JSCC"}));
  for (const auto& r : recs) {
    const std::size_t g = r.condition_index / 3, i = r.condition_index % 3 + 1;
    const auto trace = scenario_trace(s, g, std::uint32_t(r.seed));
    const auto rates = interval_loss_rate(trace, 32);
    const std::string label = g == 0 ? "loss=0.091" : "loss=0.286";
    EXPECT_EQ(r.condition, label + "/interval=" + std::to_string(i));
    if (r.scheme == "WEAK_JSCC") {
      EXPECT_FALSE(r.metrics.decode_failed);
      std::size_t lost = 0;
      for (std::size_t p = 0; p < 8; ++p) lost += trace.lost[i * 32 + p];
      EXPECT_DOUBLE_EQ(r.realized_loss_rate, lost / 8.0);
      EXPECT_EQ(r.fec_r, -1);
    } else {
      const double n = r.scheme == "DIGITAL_SEPARATE/FEC1x" ? 1 : 4;
      const auto rr = provision_repair(n, rates[i - 1], 8);
      EXPECT_EQ(r.fec_r, int(rr));
      std::size_t lost = 0;
      for (std::size_t p = 0; p < 8 + rr; ++p) lost += trace.lost[i * 32 + p];
      EXPECT_EQ(r.metrics.decode_failed, lost > rr);
    }
  }
}

TEST(Sweep, CsvFormat) {
  SweepRecord r;
  r.scheme = "ANALOG_JSCC";
  r.condition = "snr=0";
  r.seed = 4;
  r.metrics.bpp = 0;
  r.metrics.bandwidth_ratio = 0.02;
  r.metrics.mse = 0;
  r.metrics.psnr = std::numeric_limits<double>::infinity();
  const std::vector<SweepRecord> v{r};
  EXPECT_EQ(records_to_csv(v), std::string(kCsvHeader) +
                                   "\nANALOG_JSCC,snr=0,4,0.000000,0.020000,0.000000,inf,0,-1,-1,0.000000\n");
}

}  // namespace
}  // namespace genjscc
