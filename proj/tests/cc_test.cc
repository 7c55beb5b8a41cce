#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <random>

#include "natsim/cc.h"

namespace natsim {
namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

// Exact value of a finite double.
cpp_rational exact(double v) {
  int exp = 0;
  const double mant = std::frexp(v, &exp);
  const auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
  cpp_rational r(scaled);
  exp -= 53;
  if (exp >= 0) r *= cpp_rational(cpp_int(1) << exp);
  else r /= cpp_rational(cpp_int(1) << -exp);
  return r;
}

// round-half-away-from-zero of a non-negative rational.
std::int64_t round_exact(const cpp_rational& r) {
  const cpp_rational shifted = r + cpp_rational(1, 2);
  const cpp_int q = numerator(shifted) / denominator(shifted);
  return static_cast<std::int64_t>(q);
}

FeedbackMsg digest(BitsPerSec bw, TimeUs min_rtt) {
  FeedbackMsg fb;
  fb.bl_bw = bw;
  fb.min_rtt = min_rtt;
  return fb;
}

TEST(AssistedWindow, ReferenceValues) {
  CcParams p;
  const CcDecision d1 = natcp_on_feedback(digest(12e6, 10'000), 1, p);
  EXPECT_EQ(d1.cwnd, 30'000);
  EXPECT_DOUBLE_EQ(d1.pacing_rate, 12e6);
  EXPECT_EQ(natcp_on_feedback(digest(12e6, 10'000), 2, p).cwnd, 15'000);
  const CcDecision outage = natcp_on_feedback(digest(0.0, 10'000), 1, p);
  EXPECT_EQ(outage.cwnd, 3'000);
  EXPECT_DOUBLE_EQ(outage.pacing_rate, p.pacing_floor);
  EXPECT_DOUBLE_EQ(p.pacing_floor, 120'000.0);
}

TEST(AssistedWindow, PacingNotDividedByBetaUnlessAsked) {
  CcParams p;
  EXPECT_DOUBLE_EQ(natcp_on_feedback(digest(12e6, 10'000), 2, p).pacing_rate, 12e6);
  p.divide_pacing_by_beta = true;
  EXPECT_DOUBLE_EQ(natcp_on_feedback(digest(12e6, 10'000), 2, p).pacing_rate, 6e6);
}

TEST(AssistedWindow, MatchesExactRationalOracle) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> alpha(0.1, 4.0), bw(1e3, 1e9);
  std::uniform_int_distribution<TimeUs> rtt(1, 2'000'000);
  std::uniform_int_distribution<int> beta(1, 16);
  for (int i = 0; i < 5000; ++i) {
    const double a = alpha(gen);
    const double b = bw(gen);
    const TimeUs r = rtt(gen);
    const int k = beta(gen);
    const cpp_rational value =
        exact(a) * cpp_rational(r) * exact(b) / cpp_rational(cpp_int(8'000'000) * k);
    const std::int64_t oracle = std::max<std::int64_t>(1500, round_exact(value));
    ASSERT_EQ(assisted_cwnd(a, k, r, b, 1500), oracle) << a << " " << b << " " << r << " " << k;
  }
}

TEST(AssistedWindow, DoublingBetaHalves) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<TimeUs> rtt(1000, 500'000);
  std::uniform_real_distribution<double> bw(1e5, 1e8);
  for (int i = 0; i < 1000; ++i) {
    // Even products so halving is exact before rounding.
    const TimeUs r = 2 * rtt(gen);
    const double b = std::round(bw(gen) / 8.0) * 8.0;
    const Bytes one = assisted_cwnd(2.0, 1, r, b, 0);
    const Bytes two = assisted_cwnd(2.0, 2, r, b, 0);
    const Bytes four = assisted_cwnd(2.0, 4, r, b, 0);
    EXPECT_LE(std::llabs(one - 2 * two), 1);
    EXPECT_LE(std::llabs(two - 2 * four), 1);
  }
}

TEST(Cubic, KForReferenceWindow) {
  EXPECT_NEAR(cubic_k(100, 0.7, 0.4), 4.2172, 1e-4);
  EXPECT_NEAR(cubic_k(100, 0.7, 0.4), std::cbrt(75.0), 1e-12);
}

TEST(Cubic, ClosedFormShape) {
  CubicState st;
  st.w_max = 100;
  st.k = cubic_k(100, st.beta_cubic, st.c);
  EXPECT_DOUBLE_EQ(cubic_window(st.k, st), 100.0);
  EXPECT_NEAR(cubic_window(0.0, st), 70.0, 1e-9);
  EXPECT_NEAR(cubic_window(2 * st.k, st), 130.0, 1e-9);
}

TEST(Cubic, ClosedFormRandomSamples) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> w(2.0, 5000.0), tt(0.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    CubicState st;
    st.w_max = w(gen);
    st.k = cubic_k(st.w_max, st.beta_cubic, st.c);
    const double t = tt(gen);
    const long double d = static_cast<long double>(t) - st.k;
    const long double ref = 0.4L * d * d * d + st.w_max;
    const double got = cubic_window(t, st);
    EXPECT_LE(std::fabs(static_cast<long double>(got) - ref), 1e-9L * std::fabs(ref));
  }
}

TEST(Cubic, MultiplicativeDecrease) {
  CubicState st;
  st.cwnd = 100 * 1500.0;
  cubic_on_loss(st, 1000, 1500, 3000);
  EXPECT_NEAR(st.cwnd, 70 * 1500.0, 1e-9);
  EXPECT_DOUBLE_EQ(st.w_max, 100.0);
  EXPECT_NEAR(st.k, std::cbrt(100 * 0.3 / 0.4), 1e-12);
  EXPECT_EQ(st.epoch_start, 1000);
  cubic_on_loss(st, 2000, 1500, 3000);
  EXPECT_NEAR(st.cwnd, 49 * 1500.0, 1e-9);
}

TEST(Cubic, LossInSlowStartEndsIt) {
  CubicState st;
  st.cwnd = 40 * 1500.0;
  ASSERT_TRUE(st.in_slow_start);
  cubic_on_loss(st, 0, 1500, 3000);
  EXPECT_FALSE(st.in_slow_start);
  EXPECT_DOUBLE_EQ(st.ssthresh, st.cwnd);
}

TEST(Cubic, SlowStartDoublesPerWindow) {
  CcParams p;
  Cubic c(p);
  const Bytes start = c.cwnd();
  // One window's worth of acks.
  for (Bytes acked = 0; acked < start; acked += p.mss) c.on_ack(0, p.mss);
  EXPECT_EQ(c.cwnd(), 2 * start);
}

TEST(Cubic, CongestionAvoidanceTracksCurve) {
  CcParams p;
  Cubic c(p);
  for (int i = 0; i < 90; ++i) c.on_ack(0, p.mss);  // 100 MSS
  c.on_loss(0);
  EXPECT_NEAR(static_cast<double>(c.cwnd()), 70 * 1500.0, 1500);
  // Ack clocked at ~1 MSS per ms for 8 s: the window reaches the plateau
  // region and passes it.
  TimeUs t = 0;
  for (int i = 0; i < 8000; ++i) c.on_ack(t += 1000, p.mss);
  const double w = static_cast<double>(c.cwnd()) / 1500.0;
  CubicState ref = c.state();
  EXPECT_GT(w, 100.0);
  EXPECT_LT(w, cubic_window(8.0, ref) + 1.0);
}

TEST(Cubic, TimeoutCollapsesToFloor) {
  CcParams p;
  Cubic c(p);
  for (int i = 0; i < 30; ++i) c.on_ack(0, p.mss);
  c.on_timeout(0);
  EXPECT_EQ(c.cwnd(), p.cwnd_floor);
  EXPECT_TRUE(c.state().in_slow_start);
}

TEST(Nacubic, CapArithmetic) {
  CcParams p;
  const FeedbackMsg fb = digest(12e6, 10'000);
  EXPECT_EQ(nacubic_apply(fb, 1, 75'000, true, p).cwnd, 30'000);
  EXPECT_EQ(nacubic_apply(fb, 1, 15'000, true, p).cwnd, 15'000);
  const CcDecision stale = nacubic_apply(fb, 1, 75'000, false, p);
  EXPECT_EQ(stale.cwnd, 75'000);
  EXPECT_TRUE(std::isinf(stale.pacing_rate));
  EXPECT_DOUBLE_EQ(nacubic_apply(fb, 1, 15'000, true, p).pacing_rate, 12e6);
}

TEST(Nacubic, DominanceOverIdenticalHistory) {
  CcParams p;
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> ev(0, 99);
  std::uniform_real_distribution<double> bw(1e6, 30e6);
  NacubicController na(p);
  CubicController cu(p);
  FeedbackMsg fb = digest(12e6, 10'000);
  TimeUs t = 0;
  for (int i = 0; i < 20'000; ++i) {
    t += 500;
    const int e = ev(gen);
    if (e < 2) {
      na.on_loss(t, LossKind::kFastRetransmit);
      cu.on_loss(t, LossKind::kFastRetransmit);
    } else if (e < 3) {
      fb = digest(bw(gen), 10'000);
      na.on_feedback(fb, t);
    } else {
      const AckInfo ack{t, p.mss, std::nullopt, 1};
      na.on_ack(ack);
      cu.on_ack(ack);
    }
    const Bytes cap = natcp_on_feedback(fb, 1, p).cwnd;
    if (na.assisted()) ASSERT_LE(na.decision().cwnd, cap) << i;
    ASSERT_LE(na.decision().cwnd, cu.decision().cwnd) << i;
  }
}

TEST(Tg, WindowFromOwnRttEstimate) {
  CcParams p;
  EXPECT_EQ(tg_on_feedback(12e6, 10'000, p).cwnd, 30'000);
  EXPECT_DOUBLE_EQ(tg_on_feedback(12e6, 10'000, p).pacing_rate, 12e6);
  // Self-inflicted queuing inflates the estimate past the buffer.
  EXPECT_EQ(tg_on_feedback(12e6, 60'000, p).cwnd, 180'000);
}

TEST(Tg, IgnoresBetaAndUsesWindowedMin) {
  CcParams p;
  TgController tg(p);
  tg.on_ack({1'000, 1500, 20'000, 2});
  tg.on_ack({2'000, 1500, 12'000, 2});
  tg.on_ack({3'000, 1500, 15'000, 2});
  tg.on_feedback(digest(12e6, 0), 3'000);
  ASSERT_TRUE(tg.assisted());
  EXPECT_EQ(tg.rtt_estimate(), 12'000);
  EXPECT_EQ(tg.decision().cwnd, 36'000);
}

TEST(Tg, FallsBackBeforeAnyRttSample) {
  CcParams p;
  TgController tg(p);
  tg.on_feedback(digest(12e6, 0), 1000);
  EXPECT_FALSE(tg.assisted());
  EXPECT_EQ(tg.decision().cwnd, p.initial_cwnd);
}

TEST(WindowedMinRtt, ExpiresOldSamples) {
  WindowedMinRtt f(10 * kUsPerSec);
  f.update(0, 9'000);
  f.update(5 * kUsPerSec, 20'000);
  EXPECT_EQ(f.get(9 * kUsPerSec), 9'000);
  EXPECT_EQ(f.get(11 * kUsPerSec), 20'000);
  EXPECT_FALSE(f.get(16 * kUsPerSec));
}

TEST(Natcp, PreFeedbackIsCubicAndLossIgnoredWhenAssisted) {
  CcParams p;
  NatcpController n(p);
  CubicController c(p);
  for (int i = 0; i < 20; ++i) {
    n.on_ack({i * 1000, 1500, 10'000, 1});
    c.on_ack({i * 1000, 1500, 10'000, 1});
  }
  EXPECT_EQ(n.decision().cwnd, c.decision().cwnd);
  EXPECT_TRUE(std::isinf(n.decision().pacing_rate));
  n.on_feedback(digest(12e6, 10'000), 50'000);
  EXPECT_EQ(n.decision().cwnd, 30'000);
  n.on_loss(51'000, LossKind::kTimeout);
  EXPECT_EQ(n.decision().cwnd, 30'000);
  n.on_ack({52'000, 1500, 10'000, 2});
  EXPECT_EQ(n.decision().cwnd, 15'000);
}

TEST(Watchdog, RevertsAfterTimeoutAndReengages) {
  CcParams p;  // 150 ms
  NatcpController n(p);
  n.on_feedback(digest(12e6, 10'000), 5'000'000);
  EXPECT_FALSE(n.watchdog_tick(5'149'999));
  EXPECT_TRUE(n.assisted());
  EXPECT_TRUE(n.watchdog_tick(5'150'000));
  EXPECT_FALSE(n.assisted());
  // Fallback Cubic starts from the last assisted window.
  EXPECT_EQ(n.decision().cwnd, 30'000);
  EXPECT_TRUE(std::isinf(n.decision().pacing_rate));
  EXPECT_FALSE(n.watchdog_tick(5'200'000));
  n.on_feedback(digest(12e6, 10'000), 6'000'000);
  EXPECT_TRUE(n.assisted());
}

TEST(Watchdog, NacubicDropsCapAndPacing) {
  CcParams p;
  NacubicController n(p);
  for (int i = 0; i < 40; ++i) n.on_ack({i, 1500, 10'000, 1});
  n.on_feedback(digest(12e6, 10'000), 0);
  EXPECT_EQ(n.decision().cwnd, 30'000);
  EXPECT_TRUE(n.watchdog_tick(150'000));
  EXPECT_TRUE(std::isinf(n.decision().pacing_rate));
  for (int i = 0; i < 40; ++i) n.on_ack({200'000 + i, 1500, 10'000, 1});
  EXPECT_GT(n.decision().cwnd, 30'000);
}

TEST(Watchdog, NeverFiresWithRegularFeedback) {
  CcParams p;
  NatcpController n(p);
  for (TimeUs t = 52'000; t < 60'000'000; t += 50'000) {
    n.on_feedback(digest(12e6, 10'000), t);
    EXPECT_FALSE(n.watchdog_tick(t + 49'999));
  }
}

TEST(Controllers, FactoryAndParams) {
  CcParams p;
  EXPECT_EQ(make_controller(Scheme::kTg, p)->scheme(), Scheme::kTg);
  EXPECT_EQ(parse_scheme("nacubic"), Scheme::kNacubic);
  EXPECT_THROW(parse_scheme("bbr"), ConfigError);
  p.alpha = 0;
  EXPECT_THROW(make_controller(Scheme::kNatcp, p), ConfigError);
}

}  // namespace
}  // namespace natsim
