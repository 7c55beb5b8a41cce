#pragma once

#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <string_view>
#include <utility>

#include "natsim/feedback.h"
#include "natsim/types.h"

namespace natsim {

enum class Scheme { kNatcp, kNacubic, kCubic, kTg };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view text);  // throws ConfigError

// Controller output: window in bytes and pacing rate in bits/s.
struct CcDecision {
  Bytes cwnd = 0;
  BitsPerSec pacing_rate = kUnpaced;
};

struct CcParams {
  Bytes mss = kDefaultMtu;
  Bytes initial_cwnd = 10 * kDefaultMtu;
  Bytes cwnd_floor = 2 * kDefaultMtu;
  // One MTU per 100 ms.
  BitsPerSec pacing_floor = kDefaultMtu * 8 * 10.0;
  double alpha = 2.0;
  TimeUs watchdog_timeout = 150'000;
  bool divide_pacing_by_beta = false;
  // Horizon of the sender-side minimum RTT filter used by TG: a few round
  // trips, so queuing the flow builds up shows in its estimate.
  TimeUs rtt_horizon = 50'000;

  void validate() const;  // throws ConfigError
};

// Cwnd = alpha * (1 / beta) * minRTT * BL_Bw, in bytes, rounded to nearest and
// floored at `floor`.
Bytes assisted_cwnd(double alpha, int beta, TimeUs min_rtt, BitsPerSec bl_bw,
                    Bytes floor);

// NATCP's response to a fresh digest.
CcDecision natcp_on_feedback(const FeedbackMsg& fb, int beta, const CcParams& params);

// NACubic: Cubic's window capped by the assisted window; pacing at BL_Bw.
// Stale feedback leaves Cubic uncapped and unpaced.
CcDecision nacubic_apply(const FeedbackMsg& fb, int beta, Bytes cubic_cwnd,
                         bool feedback_fresh, const CcParams& params);

// Bandwidth-only guidance: the assisted formula with the sender's own RTT
// estimate and no fairness coefficient.
CcDecision tg_on_feedback(BitsPerSec fb_bw, TimeUs e2e_rtt_est, const CcParams& params);

inline constexpr double kCubicC = 0.4;
inline constexpr double kCubicBeta = 0.7;

struct CubicState {
  double w_max = 0.0;  // MSS
  double k = 0.0;      // seconds
  double c = kCubicC;
  double beta_cubic = kCubicBeta;
  TimeUs epoch_start = kUnset;
  double cwnd = 0.0;  // bytes, fractional during congestion avoidance
  double ssthresh = std::numeric_limits<double>::infinity();
  bool in_slow_start = true;
};

// Time for the cubic to climb from beta_cubic * w_max back to w_max.
double cubic_k(double w_max, double beta_cubic, double c);

// W(t) = C (t - K)^3 + W_max, in MSS, for t seconds since the epoch.
double cubic_window(double t, const CubicState& st);

// Multiplicative decrease: W_max = current window, window *= beta_cubic, new
// epoch at `now`, slow start ends with ssthresh = new window.
void cubic_on_loss(CubicState& st, TimeUs now, Bytes mss, Bytes floor);

// Cubic without the TCP-friendly region.
class Cubic {
 public:
  explicit Cubic(const CcParams& params);

  void on_ack(TimeUs now, Bytes acked);
  void on_loss(TimeUs now) { cubic_on_loss(state_, now, params_.mss, params_.cwnd_floor); }
  void on_timeout(TimeUs now);

  // Restart in congestion avoidance from `cwnd` with a plateau at `cwnd`.
  void seed(Bytes cwnd, TimeUs now);
  // Enforces an external upper bound on the window.
  void clamp(Bytes cap);

  Bytes cwnd() const;
  const CubicState& state() const { return state_; }

 private:
  CcParams params_;
  CubicState state_;
};

// Running minimum of RTT samples over a sliding time horizon.
class WindowedMinRtt {
 public:
  explicit WindowedMinRtt(TimeUs horizon) : horizon_(horizon) {}
  void update(TimeUs now, TimeUs sample);
  std::optional<TimeUs> get(TimeUs now);

 private:
  TimeUs horizon_;
  std::deque<std::pair<TimeUs, TimeUs>> samples_;  // (time, rtt), rtt increasing
};

struct AckInfo {
  TimeUs now = 0;
  Bytes acked = 0;
  std::optional<TimeUs> rtt;
  int beta = 1;
};

enum class LossKind { kFastRetransmit, kTimeout };

class CongestionController {
 public:
  virtual ~CongestionController() = default;

  virtual Scheme scheme() const = 0;
  virtual void on_ack(const AckInfo& ack) = 0;
  virtual void on_loss(TimeUs now, LossKind kind) = 0;
  virtual void on_feedback(const FeedbackMsg& /*fb*/, TimeUs /*now*/) {}
  // Reverts to unassisted operation once feedback has been missing for the
  // watchdog timeout. Returns true on the call that reverts.
  virtual bool watchdog_tick(TimeUs /*now*/) { return false; }
  virtual bool assisted() const { return false; }
  virtual bool uses_feedback() const { return false; }
  virtual CcDecision decision() const = 0;
};

std::unique_ptr<CongestionController> make_controller(Scheme scheme,
                                                      const CcParams& params);

class CubicController final : public CongestionController {
 public:
  explicit CubicController(const CcParams& params) : params_(params), cubic_(params) {}

  Scheme scheme() const override { return Scheme::kCubic; }
  void on_ack(const AckInfo& ack) override { cubic_.on_ack(ack.now, ack.acked); }
  void on_loss(TimeUs now, LossKind kind) override;
  CcDecision decision() const override { return {cubic_.cwnd(), kUnpaced}; }

  const Cubic& cubic() const { return cubic_; }

 private:
  CcParams params_;
  Cubic cubic_;
};

// Window from the assisted formula while feedback is fresh; an embedded Cubic
// otherwise (before the first digest and after the watchdog fires).
class NatcpController final : public CongestionController {
 public:
  explicit NatcpController(const CcParams& params);

  Scheme scheme() const override { return Scheme::kNatcp; }
  void on_ack(const AckInfo& ack) override;
  void on_loss(TimeUs now, LossKind kind) override;
  void on_feedback(const FeedbackMsg& fb, TimeUs now) override;
  bool watchdog_tick(TimeUs now) override;
  bool assisted() const override { return assisted_; }
  bool uses_feedback() const override { return true; }
  CcDecision decision() const override;

 private:
  CcParams params_;
  Cubic fallback_;
  bool assisted_ = false;
  FeedbackMsg last_fb_;
  TimeUs last_arrival_ = kUnset;
  int beta_ = 1;
};

class NacubicController final : public CongestionController {
 public:
  explicit NacubicController(const CcParams& params);

  Scheme scheme() const override { return Scheme::kNacubic; }
  void on_ack(const AckInfo& ack) override;
  void on_loss(TimeUs now, LossKind kind) override;
  void on_feedback(const FeedbackMsg& fb, TimeUs now) override;
  bool watchdog_tick(TimeUs now) override;
  bool assisted() const override { return fresh_; }
  bool uses_feedback() const override { return true; }
  CcDecision decision() const override;

  const Cubic& cubic() const { return cubic_; }

 private:
  Bytes cap() const;
  void apply_cap();

  CcParams params_;
  Cubic cubic_;
  bool fresh_ = false;
  FeedbackMsg last_fb_;
  TimeUs last_arrival_ = kUnset;
  int beta_ = 1;
};

class TgController final : public CongestionController {
 public:
  explicit TgController(const CcParams& params);

  Scheme scheme() const override { return Scheme::kTg; }
  void on_ack(const AckInfo& ack) override;
  void on_loss(TimeUs now, LossKind kind) override;
  void on_feedback(const FeedbackMsg& fb, TimeUs now) override;
  bool watchdog_tick(TimeUs now) override;
  bool assisted() const override { return assisted_; }
  bool uses_feedback() const override { return true; }
  CcDecision decision() const override;

  std::optional<TimeUs> rtt_estimate() const { return rtt_est_; }

 private:
  CcParams params_;
  Cubic fallback_;
  WindowedMinRtt min_rtt_;
  std::optional<TimeUs> rtt_est_;
  bool assisted_ = false;
  BitsPerSec bw_ = 0.0;
  TimeUs last_arrival_ = kUnset;
};

}  // namespace natsim
