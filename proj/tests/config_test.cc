#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "natsim/config.h"
#include "natsim/scenarios.h"

namespace natsim {
namespace {

TEST(Ini, SectionsCommentsAndWhitespace) {
  const auto kv = parse_ini(
      "# comment\n"
      "scheme = cubic\n"
      "; other comment\n"
      "[feedback]\n"
      "  period_us=10000  \n"
      "\n"
      "[path]\n"
      "loss = 0.01\n");
  ASSERT_EQ(kv.size(), 3u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"scheme", "cubic"}));
  EXPECT_EQ(kv[1].first, "feedback.period_us");
  EXPECT_EQ(kv[1].second, "10000");
  EXPECT_EQ(kv[2].first, "path.loss");
}

TEST(Ini, ErrorsCarryLineNumbers) {
  try {
    parse_ini("scheme = natcp\nnonsense\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_ini("[feedback\n"), ConfigError);
}

TEST(Settings, DefaultsMatchTopology) {
  Settings s;
  EXPECT_EQ(s.sim.buffer_bytes, 150'000);
  EXPECT_EQ(s.sim.netassist.period, 50'000);
  EXPECT_EQ(s.sim.path.oob_delay, 2000);
  EXPECT_EQ(s.sim.netassist.mode, FeedbackMode::kOob);
  EXPECT_DOUBLE_EQ(s.sim.cc.alpha, 2.0);
  EXPECT_EQ(s.sim.effective_cc().watchdog_timeout, 150'000);
}

TEST(Settings, EveryKeyIsSettable) {
  const std::map<std::string, std::string> samples{
      {"scheme", "tg"},           {"trace", "const:6mbps"},   {"duration_s", "3"},
      {"seed", "4"},              {"mtu", "1400"},            {"buffer_bytes", "90000"},
      {"alpha", "1.5"},           {"flows", "0@0,1@1"},       {"goodput_bin_us", "50000"},
      {"feedback.enabled", "no"}, {"feedback.period_us", "10000"},
      {"feedback.mode", "ib"},    {"feedback.oob_delay_us", "3000"},
      {"feedback.size_bytes", "32"}, {"feedback.probe_interval_us", "20000"},
      {"feedback.cutoff_us", "1000000"}, {"feedback.watchdog_us", "90000"},
      {"path.net_min_owd_us", "3000"}, {"path.uplink_owd_us", "3000"},
      {"path.uplink_rate", "24mbps"}, {"path.radio_delay_us", "10"},
      {"path.probe_jitter_us", "5"}, {"path.loss", "0.02"},
      {"cc.cwnd_floor_bytes", "2800"}, {"cc.initial_cwnd_bytes", "14000"},
      {"cc.pacing_floor", "240kbps"}, {"cc.pace_by_beta", "true"},
      {"cc.rtt_horizon_us", "5000000"}, {"output.dir", "out"},
      {"output.summary", "s.csv"}, {"output.events", "e.csv"}, {"output.feedback", "f.csv"}};
  Settings s;
  for (const SettingKey& k : setting_keys()) {
    ASSERT_TRUE(samples.count(std::string(k.name))) << k.name;
    apply_setting(s, k.name, samples.at(std::string(k.name)));
  }
  EXPECT_EQ(s.pinned.size(), setting_keys().size());
  EXPECT_EQ(s.sim.scheme, Scheme::kTg);
  EXPECT_EQ(s.sim.flows.size(), 2u);
  EXPECT_EQ(s.sim.flows[1].ue_id, 1);
  EXPECT_FALSE(s.sim.feedback_enabled);
  EXPECT_EQ(s.sim.netassist.mode, FeedbackMode::kIb);
  EXPECT_DOUBLE_EQ(s.sim.path.uplink_rate, 24e6);
  EXPECT_DOUBLE_EQ(s.sim.cc.pacing_floor, 240e3);
  EXPECT_TRUE(s.sim.cc.divide_pacing_by_beta);
  EXPECT_EQ(s.output.resolve("s.csv"), (std::filesystem::path("out") / "s.csv").string());
  s.sim.validate();
}

TEST(Settings, RejectsBadValues) {
  Settings s;
  EXPECT_THROW(apply_setting(s, "nope", "1"), ConfigError);
  EXPECT_THROW(apply_setting(s, "seed", "abc"), ConfigError);
  EXPECT_THROW(apply_setting(s, "seed", "0"), ConfigError);
  EXPECT_THROW(apply_setting(s, "scheme", "reno"), ConfigError);
  EXPECT_THROW(apply_setting(s, "alpha", "1.5x"), ConfigError);
  EXPECT_THROW(apply_setting(s, "feedback.enabled", "maybe"), ConfigError);
  EXPECT_THROW(apply_setting(s, "flows", ""), ConfigError);
  apply_setting(s, "path.loss", "2");
  EXPECT_THROW(s.sim.validate(), ConfigError);
}

TEST(Settings, FlowList) {
  const auto flows = parse_flows("0@0, 5.5@0,2");
  ASSERT_EQ(flows.size(), 3u);
  EXPECT_DOUBLE_EQ(flows[1].start_s, 5.5);
  EXPECT_EQ(flows[2].ue_id, 0);
}

TEST(Settings, ConfigFileAndMissingFile) {
  const auto path = std::filesystem::path(::testing::TempDir()) / "natsim_config_test.ini";
  {
    std::ofstream out(path);
    out << "scheme = cubic\n[feedback]\nperiod_us = 10000\n";
  }
  Settings s;
  apply_config_file(s, path.string());
  EXPECT_EQ(s.sim.scheme, Scheme::kCubic);
  EXPECT_EQ(s.sim.netassist.period, 10'000);
  EXPECT_TRUE(s.pinned.count("feedback.period_us"));
  EXPECT_THROW(apply_config_file(s, "/nonexistent/natsim.ini"), InputFileError);
}

TEST(Presets, RespectPinnedKeys) {
  SimConfig base;
  base.duration_s = 8;
  const SimConfig fair = fairness_config(base, {});
  ASSERT_EQ(fair.flows.size(), 2u);
  EXPECT_DOUBLE_EQ(fair.flows[1].start_s, 2.0);
  base.flows = parse_flows("0@0,1@0,3@0");
  EXPECT_EQ(fairness_config(base, {"flows"}).flows.size(), 3u);
}

TEST(Parallel, KeepsJobOrderAndRethrowsFirstFailure) {
  std::vector<std::function<int()>> jobs;
  for (int i = 0; i < 32; ++i) jobs.push_back([i] { return i * i; });
  const auto out = run_parallel(jobs, 4);
  for (int i = 0; i < 32; ++i) EXPECT_EQ(out[static_cast<std::size_t>(i)], i * i);
  jobs[5] = [] () -> int { throw ConfigError("five"); };
  jobs[9] = [] () -> int { throw ConfigError("nine"); };
  try {
    run_parallel(jobs, 4);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "five");
  }
}

TEST(Scenarios, ParallelMatchesSerial) {
  SimConfig base;
  base.duration_s = 2;
  const auto one = scenario_single_flow(base, {"const:12mbps", "step:12mbps@500,2mbps@500"},
                                        {Scheme::kNatcp, Scheme::kCubic}, 1);
  const auto many = scenario_single_flow(base, {"const:12mbps", "step:12mbps@500,2mbps@500"},
                                         {Scheme::kNatcp, Scheme::kCubic}, 4);
  ASSERT_EQ(one.raw.size(), 4u);
  for (std::size_t i = 0; i < one.raw.size(); ++i) EXPECT_EQ(to_csv(one.raw[i]), to_csv(many.raw[i]));
  EXPECT_EQ(one.normalized.front().scheme, "natcp");
  EXPECT_DOUBLE_EQ(one.normalized.front().power95, 1.0);
}

TEST(Scenarios, MissingTraceFile) {
  SimConfig base;
  base.duration_s = 1;
  EXPECT_THROW(scenario_single_flow(base, {"/nonexistent.trace"}, {Scheme::kNatcp}, 1),
               InputFileError);
}

TEST(Scenarios, FeedbackModesCellOrder) {
  SimConfig base;
  base.duration_s = 2;
  const auto cells = scenario_feedback_modes(base, {}, 2);
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].label, "tg(ib)");
  EXPECT_EQ(cells[3].label, "natcp(oob)");
  EXPECT_DOUBLE_EQ(cells[0].normalized_power95, 1.0);
}

TEST(Scenarios, PeriodSweepDefaults) {
  EXPECT_EQ(default_sweep_periods(),
            (std::vector<TimeUs>{5'000, 10'000, 25'000, 50'000, 100'000, 250'000, 500'000}));
}

}  // namespace
}  // namespace natsim
