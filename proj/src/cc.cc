#include "natsim/cc.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace natsim {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kNatcp: return "natcp";
    case Scheme::kNacubic: return "nacubic";
    case Scheme::kCubic: return "cubic";
    case Scheme::kTg: return "tg";
  }
  return "?";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "natcp") return Scheme::kNatcp;
  if (text == "nacubic") return Scheme::kNacubic;
  if (text == "cubic") return Scheme::kCubic;
  if (text == "tg") return Scheme::kTg;
  throw ConfigError("unknown scheme '" + std::string(text) +
                    "' (expected natcp, nacubic, cubic or tg)");
}

void CcParams::validate() const {
  if (mss <= 0) throw ConfigError("mss must be positive");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be > 0");
  if (cwnd_floor < mss) throw ConfigError("cwnd floor must be at least one MSS");
  if (initial_cwnd < cwnd_floor) throw ConfigError("initial cwnd below floor");
  if (!(pacing_floor > 0.0)) throw ConfigError("pacing floor must be positive");
  if (watchdog_timeout <= 0) throw ConfigError("watchdog timeout must be positive");
  if (rtt_horizon <= 0) throw ConfigError("rtt horizon must be positive");
}

Bytes assisted_cwnd(double alpha, int beta, TimeUs min_rtt, BitsPerSec bl_bw,
                    Bytes floor) {
  if (beta < 1) beta = 1;
  if (!(bl_bw > 0.0)) return floor;
  // bytes = alpha * min_rtt[us] * 1e-6 * bl_bw / (8 * beta)
  const long double bytes = static_cast<long double>(alpha) *
                            static_cast<long double>(min_rtt) *
                            static_cast<long double>(bl_bw) /
                            (8.0e6L * static_cast<long double>(beta));
  return std::max<Bytes>(floor, static_cast<Bytes>(std::llround(bytes)));
}

CcDecision natcp_on_feedback(const FeedbackMsg& fb, int beta, const CcParams& params) {
  CcDecision d;
  d.cwnd = assisted_cwnd(params.alpha, beta, fb.min_rtt, fb.bl_bw, params.cwnd_floor);
  BitsPerSec pacing = fb.bl_bw;
  if (params.divide_pacing_by_beta && beta > 1) pacing /= beta;
  d.pacing_rate = std::max(pacing, params.pacing_floor);
  return d;
}

CcDecision nacubic_apply(const FeedbackMsg& fb, int beta, Bytes cubic_cwnd,
                         bool feedback_fresh, const CcParams& params) {
  if (!feedback_fresh) return {cubic_cwnd, kUnpaced};
  const CcDecision assisted = natcp_on_feedback(fb, beta, params);
  return {std::min(cubic_cwnd, assisted.cwnd), assisted.pacing_rate};
}

CcDecision tg_on_feedback(BitsPerSec fb_bw, TimeUs e2e_rtt_est, const CcParams& params) {
  CcDecision d;
  d.cwnd = assisted_cwnd(params.alpha, 1, e2e_rtt_est, fb_bw, params.cwnd_floor);
  d.pacing_rate = std::max(fb_bw, params.pacing_floor);
  return d;
}

double cubic_k(double w_max, double beta_cubic, double c) {
  return std::cbrt(w_max * (1.0 - beta_cubic) / c);
}

double cubic_window(double t, const CubicState& st) {
  const double d = t - st.k;
  return st.c * d * d * d + st.w_max;
}

void cubic_on_loss(CubicState& st, TimeUs now, Bytes mss, Bytes floor) {
  const double m = static_cast<double>(mss);
  st.w_max = st.cwnd / m;
  st.cwnd = std::max(st.cwnd * st.beta_cubic, static_cast<double>(floor));
  st.ssthresh = st.cwnd;
  st.in_slow_start = false;
  st.epoch_start = now;
  st.k = cubic_k(st.w_max, st.beta_cubic, st.c);
}

Cubic::Cubic(const CcParams& params) : params_(params) {
  state_.cwnd = static_cast<double>(params.initial_cwnd);
}

Bytes Cubic::cwnd() const {
  return std::max<Bytes>(static_cast<Bytes>(state_.cwnd), params_.cwnd_floor);
}

void Cubic::on_ack(TimeUs now, Bytes acked) {
  if (acked <= 0) return;
  const double mss = static_cast<double>(params_.mss);
  if (state_.in_slow_start) {
    state_.cwnd += static_cast<double>(acked);
    if (state_.cwnd >= state_.ssthresh) {
      state_.in_slow_start = false;
      state_.epoch_start = kUnset;
    }
    return;
  }
  if (state_.epoch_start == kUnset) {
    state_.epoch_start = now;
    const double w = state_.cwnd / mss;
    if (w < state_.w_max) {
      state_.k = std::cbrt((state_.w_max - w) / state_.c);
    } else {
      state_.k = 0.0;
      state_.w_max = w;
    }
  }
  const double t = to_seconds(now - state_.epoch_start);
  const double target = cubic_window(t, state_) * mss;
  double inc;
  if (target > state_.cwnd) {
    inc = static_cast<double>(acked) * (target - state_.cwnd) / state_.cwnd;
    // At most 1.5x growth per window of acks.
    inc = std::min(inc, 0.5 * static_cast<double>(acked));
  } else {
    inc = static_cast<double>(acked) * mss / (100.0 * state_.cwnd);
  }
  state_.cwnd += inc;
}

void Cubic::on_timeout(TimeUs /*now*/) {
  const double floor = static_cast<double>(params_.cwnd_floor);
  state_.w_max = state_.cwnd / static_cast<double>(params_.mss);
  state_.ssthresh = std::max(state_.cwnd * state_.beta_cubic, floor);
  state_.cwnd = floor;
  state_.in_slow_start = true;
  state_.epoch_start = kUnset;
}

void Cubic::seed(Bytes cwnd, TimeUs now) {
  state_.cwnd = static_cast<double>(std::max(cwnd, params_.cwnd_floor));
  state_.ssthresh = state_.cwnd;
  state_.in_slow_start = false;
  state_.w_max = state_.cwnd / static_cast<double>(params_.mss);
  state_.k = 0.0;
  state_.epoch_start = now;
}

void Cubic::clamp(Bytes cap) {
  state_.cwnd = std::min(state_.cwnd, static_cast<double>(std::max(cap, params_.cwnd_floor)));
}

void WindowedMinRtt::update(TimeUs now, TimeUs sample) {
  while (!samples_.empty() && samples_.back().second >= sample) samples_.pop_back();
  samples_.emplace_back(now, sample);
}

std::optional<TimeUs> WindowedMinRtt::get(TimeUs now) {
  while (!samples_.empty() && samples_.front().first < now - horizon_) samples_.pop_front();
  if (samples_.empty()) return std::nullopt;
  return samples_.front().second;
}

std::unique_ptr<CongestionController> make_controller(Scheme scheme,
                                                      const CcParams& params) {
  params.validate();
  switch (scheme) {
    case Scheme::kNatcp: return std::make_unique<NatcpController>(params);
    case Scheme::kNacubic: return std::make_unique<NacubicController>(params);
    case Scheme::kCubic: return std::make_unique<CubicController>(params);
    case Scheme::kTg: return std::make_unique<TgController>(params);
  }
  throw ConfigError("unknown scheme");
}

void CubicController::on_loss(TimeUs now, LossKind kind) {
  if (kind == LossKind::kTimeout) cubic_.on_timeout(now);
  else cubic_.on_loss(now);
}

NatcpController::NatcpController(const CcParams& params)
    : params_(params), fallback_(params) {}

void NatcpController::on_ack(const AckInfo& ack) {
  beta_ = std::max(1, ack.beta);
  if (!assisted_) fallback_.on_ack(ack.now, ack.acked);
}

void NatcpController::on_loss(TimeUs now, LossKind kind) {
  // The assisted window does not react to loss.
  if (assisted_) return;
  if (kind == LossKind::kTimeout) fallback_.on_timeout(now);
  else fallback_.on_loss(now);
}

void NatcpController::on_feedback(const FeedbackMsg& fb, TimeUs now) {
  last_fb_ = fb;
  last_arrival_ = now;
  assisted_ = true;
}

bool NatcpController::watchdog_tick(TimeUs now) {
  if (!assisted_ || now - last_arrival_ < params_.watchdog_timeout) return false;
  const Bytes current = decision().cwnd;
  assisted_ = false;
  fallback_ = Cubic(params_);
  fallback_.seed(current, now);
  return true;
}

CcDecision NatcpController::decision() const {
  if (assisted_) return natcp_on_feedback(last_fb_, beta_, params_);
  return {fallback_.cwnd(), kUnpaced};
}

NacubicController::NacubicController(const CcParams& params)
    : params_(params), cubic_(params) {}

Bytes NacubicController::cap() const {
  return natcp_on_feedback(last_fb_, beta_, params_).cwnd;
}

void NacubicController::apply_cap() {
  if (fresh_) cubic_.clamp(cap());
}

void NacubicController::on_ack(const AckInfo& ack) {
  beta_ = std::max(1, ack.beta);
  cubic_.on_ack(ack.now, ack.acked);
  apply_cap();
}

void NacubicController::on_loss(TimeUs now, LossKind kind) {
  if (kind == LossKind::kTimeout) cubic_.on_timeout(now);
  else cubic_.on_loss(now);
  apply_cap();
}

void NacubicController::on_feedback(const FeedbackMsg& fb, TimeUs now) {
  last_fb_ = fb;
  last_arrival_ = now;
  fresh_ = true;
  apply_cap();
}

bool NacubicController::watchdog_tick(TimeUs now) {
  if (!fresh_ || now - last_arrival_ < params_.watchdog_timeout) return false;
  fresh_ = false;
  return true;
}

CcDecision NacubicController::decision() const {
  return nacubic_apply(last_fb_, beta_, cubic_.cwnd(), fresh_, params_);
}

TgController::TgController(const CcParams& params)
    : params_(params), fallback_(params), min_rtt_(params.rtt_horizon) {}

void TgController::on_ack(const AckInfo& ack) {
  if (ack.rtt) min_rtt_.update(ack.now, *ack.rtt);
  if (auto est = min_rtt_.get(ack.now)) rtt_est_ = est;
  if (!assisted_) fallback_.on_ack(ack.now, ack.acked);
}

void TgController::on_loss(TimeUs now, LossKind kind) {
  if (assisted_) return;
  if (kind == LossKind::kTimeout) fallback_.on_timeout(now);
  else fallback_.on_loss(now);
}

void TgController::on_feedback(const FeedbackMsg& fb, TimeUs now) {
  bw_ = fb.bl_bw;
  last_arrival_ = now;
  if (rtt_est_) assisted_ = true;
}

bool TgController::watchdog_tick(TimeUs now) {
  if (!assisted_ || now - last_arrival_ < params_.watchdog_timeout) return false;
  const Bytes current = decision().cwnd;
  assisted_ = false;
  fallback_ = Cubic(params_);
  fallback_.seed(current, now);
  return true;
}

CcDecision TgController::decision() const {
  if (assisted_ && rtt_est_) return tg_on_feedback(bw_, *rtt_est_, params_);
  return {fallback_.cwnd(), kUnpaced};
}

}  // namespace natsim
