#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

#include "natsim/trace.h"

namespace natsim {
namespace {

// Brute-force count over an explicitly unrolled replay.
std::int64_t unrolled_count(const TraceSchedule& s, TimeUs from, TimeUs to) {
  std::int64_t n = 0;
  for (std::int64_t k = 0; k * s.cycle <= to; ++k)
    for (TimeUs t : s.opportunities) {
      const TimeUs abs = t + k * s.cycle;
      if (abs > from && abs <= to) ++n;
    }
  return n;
}

TEST(ParseTrace, ThreeLinesGiveCycleAndRate) {
  TraceSchedule s = parse_trace("10\n20\n30");
  ASSERT_EQ(s.opportunities.size(), 3u);
  EXPECT_EQ(s.cycle, 30'000);
  EXPECT_DOUBLE_EQ(s.long_run_rate(), 1.2e6);
}

TEST(ParseTrace, SingleZeroNeedsOverride) {
  EXPECT_THROW(parse_trace("0"), TraceError);
  TraceSchedule s = parse_trace("0", 10);
  EXPECT_EQ(s.cycle, 10'000);
  EXPECT_EQ(s.opportunities.size(), 1u);
}

TEST(ParseTrace, RepeatedTimestampsAreABurst) {
  TraceSchedule s = parse_trace("5\n5\n5");
  ASSERT_EQ(s.opportunities.size(), 3u);
  for (TimeUs t : s.opportunities) EXPECT_EQ(t, 5'000);
}

TEST(ParseTrace, Errors) {
  try {
    parse_trace("");
    FAIL();
  } catch (const TraceError& e) {
    EXPECT_STREQ(e.what(), "empty trace");
  }
  try {
    parse_trace("10\n20\n15\n");
    FAIL();
  } catch (const TraceError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse_trace("1\nabc\n");
    FAIL();
  } catch (const TraceError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_trace("1\n-4\n"), TraceError);
  EXPECT_THROW(parse_trace("1.5\n"), TraceError);
}

TEST(ParseTrace, CommentsAndBlankLines) {
  TraceSchedule s = parse_trace("# header\n\n4\n  8 \r\n# tail\n");
  EXPECT_EQ(s.opportunities, (std::vector<TimeUs>{4'000, 8'000}));
}

TEST(SynthConstant, TwelveMbpsIsOnePerMs) {
  TraceSchedule s = synth_constant(12e6, 1000);
  ASSERT_EQ(s.opportunities.size(), 1000u);
  for (std::size_t i = 0; i < s.opportunities.size(); ++i)
    EXPECT_EQ(s.opportunities[i], static_cast<TimeUs>(i + 1) * 1000);
}

TEST(SynthConstant, OnePointTwoMbpsIsOnePerTenMs) {
  TraceSchedule s = synth_constant(1.2e6, 100);
  ASSERT_EQ(s.opportunities.size(), 10u);
  for (std::size_t i = 1; i < s.opportunities.size(); ++i)
    EXPECT_EQ(s.opportunities[i] - s.opportunities[i - 1], 10'000);
}

TEST(SynthConstant, ZeroDurationRejectedOnUse) {
  TraceSchedule s = synth_constant(12e6, 0);
  EXPECT_TRUE(s.opportunities.empty());
  EXPECT_THROW(s.validate(), TraceError);
  EXPECT_THROW(synth_constant(0.0, 100), TraceError);
  EXPECT_THROW(synth_constant(-1.0, 100), TraceError);
}

TEST(SynthConstant, LongRunRateWithinTenthPercent) {
  for (double rate : {0.7e6, 1e6, 3.3e6, 12e6, 24e6, 47.5e6}) {
    TraceSchedule s = synth_constant(rate, 10'000);
    EXPECT_NEAR(s.long_run_rate(), rate, rate * 1e-3) << rate;
  }
}

TEST(SynthStep, StepCountMatchesSegmentOracle) {
  const RateSegment segs[] = {{12e6, 500}, {1.2e6, 500}};
  TraceSchedule s = synth_step(segs);
  // 1000/s for 0.5 s plus 100/s for 0.5 s.
  EXPECT_EQ(s.opportunities.size(), 550u);
  EXPECT_EQ(s.cycle, 1'000'000);
}

TEST(SynthStep, OutageSegmentIsEmpty) {
  const RateSegment segs[] = {{0.0, 100}, {12e6, 100}};
  TraceSchedule s = synth_step(segs);
  EXPECT_EQ(s.count_between(-1, 100'000), 0);
  EXPECT_EQ(s.opportunities.size(), 100u);
  EXPECT_GT(s.opportunities.front(), 100'000);
}

TEST(SynthStep, SingleSegmentEqualsConstant) {
  const RateSegment seg[] = {{12e6, 1000}};
  EXPECT_EQ(synth_step(seg).opportunities, synth_constant(12e6, 1000).opportunities);
  EXPECT_THROW(synth_step(std::span<const RateSegment>{}), TraceError);
}

TEST(SynthStep, RandomSegmentsMatchAccruedCapacity) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> rate(0.0, 30e6);
  std::uniform_int_distribution<int> hold(1, 400);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RateSegment> segs(5);
    double bits = 0;
    for (auto& s : segs) {
      s = {rate(gen), hold(gen)};
      bits += s.rate * static_cast<double>(s.hold_ms) / 1000.0;
    }
    TraceSchedule t = synth_step(segs);
    // Whole packets of accrued capacity, give or take float rounding.
    const double expected = std::floor(bits / 12000.0 + 1e-9);
    EXPECT_NEAR(static_cast<double>(t.opportunities.size()), expected, 1.0);
  }
}

TEST(AvgRate, ConstantWindowsAreExact) {
  TraceSchedule s = synth_constant(12e6, 1000);
  for (TimeUs start : {0, 1'000, 17'000, 950'000, 2'345'000})
    EXPECT_DOUBLE_EQ(avg_rate(s, 50'000, start), 12e6) << start;
}

TEST(AvgRate, OutageWindowIsZero) {
  const RateSegment segs[] = {{0.0, 100}, {12e6, 100}};
  EXPECT_DOUBLE_EQ(avg_rate(synth_step(segs), 50'000, 20'000), 0.0);
}

TEST(AvgRate, ParsedTraceFullCycle) {
  TraceSchedule s = parse_trace("10\n20\n30");
  EXPECT_DOUBLE_EQ(avg_rate(s, 30'000, 0), 1.2e6);
  EXPECT_THROW(avg_rate(s, 0, 0), TraceError);
}

TEST(AvgRate, FullCycleRoundTripProperty) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> count(1, 200), ms(0, 5000);
    std::vector<std::int64_t> stamps(static_cast<std::size_t>(count(gen)));
    for (auto& v : stamps) v = ms(gen);
    std::sort(stamps.begin(), stamps.end());
    std::string text;
    for (auto v : stamps) text += std::to_string(v) + "\n";
    const std::int64_t cycle_ms = std::max<std::int64_t>(stamps.back(), 1);
    TraceSchedule s = parse_trace(text, cycle_ms);
    for (TimeUs start : {TimeUs{0}, s.cycle / 3, 5 * s.cycle}) {
      const double expected = static_cast<double>(stamps.size()) * 12000.0 / to_seconds(s.cycle);
      EXPECT_NEAR(avg_rate(s, s.cycle, start), expected, expected * 1e-12);
    }
  }
}

TEST(TraceSchedule, CountBetweenMatchesUnrolledReplay) {
  std::mt19937_64 gen(3);
  TraceSchedule s = parse_trace("0\n3\n3\n7\n12\n12\n20");
  std::uniform_int_distribution<TimeUs> t(-5'000, 90'000);
  for (int i = 0; i < 2000; ++i) {
    TimeUs a = t(gen), b = t(gen);
    if (a > b) std::swap(a, b);
    ASSERT_EQ(s.count_between(a, b), unrolled_count(s, a, b)) << a << " " << b;
  }
}

TEST(TraceCursor, ReplayIsPeriodic) {
  TraceSchedule s = parse_trace("2\n5\n5\n9");
  TraceCursor c(s);
  std::vector<TimeUs> seen;
  for (int i = 0; i < 12; ++i) seen.push_back(c.next());
  for (std::size_t i = 0; i < seen.size(); ++i) {
    const auto k = static_cast<TimeUs>(i / 4);
    EXPECT_EQ(seen[i], s.opportunities[i % 4] + k * s.cycle);
  }
  // Cycle boundary listing 0 and cycle yields back-to-back opportunities.
  TraceSchedule wrap = parse_trace("0\n10");
  TraceCursor w(wrap);
  EXPECT_EQ(w.next(), 0);
  EXPECT_EQ(w.next(), 10'000);
  EXPECT_EQ(w.next(), 10'000);
  EXPECT_EQ(w.next(), 20'000);
}

TEST(RenderTrace, RoundTrip) {
  const RateSegment segs[] = {{7e6, 300}, {0.0, 50}, {19e6, 250}, {2.2e6, 400}};
  TraceSchedule s = synth_step(segs);
  EXPECT_EQ(parse_trace(render_trace(s)).opportunities, s.opportunities);
  TraceSchedule w = synth_walk(1e6, 24e6, 100, 5000, 9);
  EXPECT_EQ(parse_trace(render_trace(w)).opportunities, w.opportunities);
}

TEST(Walk, StaysInBoundsAndIsSeeded) {
  auto a = walk_segments(1e6, 24e6, 100, 60'000, 5);
  auto b = walk_segments(1e6, 24e6, 100, 60'000, 5);
  auto c = walk_segments(1e6, 24e6, 100, 60'000, 6);
  ASSERT_EQ(a.size(), 600u);
  double lo = 1e18, hi = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].rate, b[i].rate);
    EXPECT_GE(a[i].rate, 1e6 * (1 - 1e-12));
    EXPECT_LE(a[i].rate, 24e6 * (1 + 1e-12));
    lo = std::min(lo, a[i].rate);
    hi = std::max(hi, a[i].rate);
  }
  EXPECT_LT(lo, 3e6);
  EXPECT_GT(hi, 12e6);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].rate != c[i].rate;
  EXPECT_TRUE(differs);
}

TEST(ParseRate, Suffixes) {
  EXPECT_DOUBLE_EQ(parse_rate("12mbps"), 12e6);
  EXPECT_DOUBLE_EQ(parse_rate("1.2Mbps"), 1.2e6);
  EXPECT_DOUBLE_EQ(parse_rate("500kbps"), 5e5);
  EXPECT_DOUBLE_EQ(parse_rate("12e6"), 12e6);
  EXPECT_DOUBLE_EQ(parse_rate("3m"), 3e6);
  EXPECT_THROW(parse_rate("fast"), ConfigError);
  EXPECT_THROW(parse_rate("-3mbps"), ConfigError);
}

TEST(MakeTrace, Specs) {
  EXPECT_EQ(make_trace("const:12mbps", 1000, 1).opportunities.size(), 1000u);
  EXPECT_EQ(make_trace("step:12mbps@500,1.2mbps@500", 99, 1).opportunities.size(), 550u);
  EXPECT_EQ(make_trace("walk:1mbps-24mbps@100ms:4", 2000, 1).opportunities,
            synth_walk(1e6, 24e6, 100, 2000, 4).opportunities);
  EXPECT_EQ(make_trace("walk:1mbps-24mbps@100", 2000, 4).opportunities,
            synth_walk(1e6, 24e6, 100, 2000, 4).opportunities);
  EXPECT_THROW(make_trace("step:12mbps", 1000, 1), ConfigError);
  EXPECT_THROW(make_trace("bogus:1", 1000, 1), ConfigError);
  EXPECT_THROW(make_trace("/nonexistent/trace.txt", 1000, 1), InputFileError);
}

TEST(MakeTrace, LoadsFiles) {
  const std::string path = ::testing::TempDir() + "natsim_trace_test.txt";
  {
    std::ofstream out(path);
    out << "# two per cycle\n5\n10\n";
  }
  TraceSchedule s = make_trace("file:" + path, 0, 1);
  EXPECT_EQ(s.opportunities, (std::vector<TimeUs>{5'000, 10'000}));
  EXPECT_EQ(make_trace(path, 0, 1).cycle, 10'000);
  std::remove(path.c_str());
}

}  // namespace
}  // namespace natsim
