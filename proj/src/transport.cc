#include "natsim/transport.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace natsim {

namespace {
// Slack for comparing integer clock values with fractional pacing deadlines.
constexpr double kPacingSlackUs = 1e-6;
}  // namespace

RttEstimator::RttEstimator(const SenderConfig& config)
    : rto_min_(config.rto_min), rto_max_(config.rto_max), rto_(config.rto_initial) {}

void RttEstimator::sample(TimeUs rtt) {
  if (!has_sample_) {
    srtt_ = rtt;
    rttvar_ = rtt / 2;
    has_sample_ = true;
  } else {
    rttvar_ = (3 * rttvar_ + std::llabs(srtt_ - rtt)) / 4;
    srtt_ = (7 * srtt_ + rtt) / 8;
  }
  rto_ = std::clamp(srtt_ + 4 * rttvar_, rto_min_, rto_max_);
}

void RttEstimator::backoff() { rto_ = std::min(rto_ * 2, rto_max_); }

Sender::Sender(int flow_id, int ue_id, SenderConfig config,
               std::unique_ptr<CongestionController> cc)
    : flow_id_(flow_id),
      ue_id_(ue_id),
      config_(config),
      cc_(std::move(cc)),
      rtt_(config_) {}

std::int64_t Sender::outstanding_segments() const {
  return (snd_nxt_ - snd_una_ + config_.mss - 1) / config_.mss;
}

Bytes Sender::in_flight() const {
  return std::max<Bytes>(0, snd_nxt_ - snd_una_ - left_network_ * config_.mss);
}

bool Sender::pacing_allows(TimeUs now, BitsPerSec rate) const {
  if (std::isinf(rate)) return true;
  return static_cast<double>(now) + kPacingSlackUs >= pacing_next_;
}

void Sender::note_departure(TimeUs now, BitsPerSec rate) {
  if (std::isinf(rate)) return;
  const double gap = static_cast<double>(config_.mss) * 8.0 * 1e6 / rate;
  const double t = static_cast<double>(now);
  // Stay on the fractional schedule when on time; restart it after idling.
  const double base = (t - pacing_next_ < 1.0) ? pacing_next_ : t;
  pacing_next_ = base + gap;
}

std::optional<TimeUs> Sender::pacing_wake() const {
  if (!ready_but_paced_) return std::nullopt;
  return static_cast<TimeUs>(std::ceil(pacing_next_ - kPacingSlackUs));
}

std::vector<Packet> Sender::try_send(TimeUs now) {
  std::vector<Packet> out;
  ready_but_paced_ = false;
  for (;;) {
    const CcDecision d = cc_->decision();
    const bool retransmit = retx_pending_.has_value();
    if (!retransmit && in_flight() + config_.mss > d.cwnd) break;
    if (!pacing_allows(now, d.pacing_rate)) {
      ready_but_paced_ = true;
      break;
    }
    Packet p;
    p.flow_id = flow_id_;
    p.ue_id = ue_id_;
    p.kind = PacketKind::kData;
    p.size = config_.mss;
    p.t_sent = now;
    if (retransmit) {
      p.seq = *retx_pending_;
      p.is_retransmission = true;
      ++stats_.retransmissions;
      ++stats_.fast_retransmits;
      retx_pending_.reset();
    } else {
      if (in_flight() > d.cwnd) ++window_violations_;
      p.seq = snd_nxt_;
      if (snd_nxt_ < snd_max_) {
        // Resending after a timeout rewound the send point.
        p.is_retransmission = true;
        ++stats_.retransmissions;
        ++stats_.rto_retransmits;
      }
      snd_nxt_ += config_.mss;
      snd_max_ = std::max(snd_max_, snd_nxt_);
    }
    ++stats_.segments_sent;
    stats_.bytes_sent += p.size;
    note_departure(now, d.pacing_rate);
    if (!rto_deadline_) rto_deadline_ = now + rtt_.rto();
    out.push_back(std::move(p));
  }
  return out;
}

void Sender::on_ack(const Packet& ack, TimeUs now) {
  beta_ = std::max(1, ack.beta);
  if (ack.cum_ack < snd_una_) return;  // stale

  if (ack.cum_ack > snd_una_) {
    const Bytes acked = ack.cum_ack - snd_una_;
    const std::int64_t segments = (acked + config_.mss - 1) / config_.mss;
    snd_una_ = ack.cum_ack;
    snd_nxt_ = std::max(snd_nxt_, snd_una_);
    left_network_ = std::max<std::int64_t>(0, left_network_ - (segments - 1));
    left_network_ = std::min(left_network_, std::max<std::int64_t>(0, outstanding_segments() - 1));
    dup_acks_ = 0;
    std::optional<TimeUs> sample;
    if (ack.echo_sent != kUnset && !ack.echo_retransmission) {
      sample = now - ack.echo_sent;
      rtt_.sample(*sample);
    }
    if (in_recovery_) {
      if (snd_una_ >= recover_) {
        in_recovery_ = false;
        timeout_recovery_ = false;
      } else if (!timeout_recovery_) {
        // Partial ack: the next hole is missing too.
        retx_pending_ = snd_una_;
        ++partial_acks_;
      }
    }
    if (retx_pending_ && *retx_pending_ < snd_una_) retx_pending_.reset();
    // Only the first partial ack of an episode rearms the timer, so a long
    // run of holes ends in a timeout instead of one repair per round trip.
    if (snd_max_ == snd_una_) {
      rto_deadline_.reset();
    } else if (!in_recovery_ || timeout_recovery_ || partial_acks_ <= 1) {
      rto_deadline_ = now + rtt_.rto();
    }
    cc_->on_ack({now, acked, sample, beta_});
    return;
  }

  if (snd_max_ == snd_una_) {
    cc_->on_ack({now, 0, std::nullopt, beta_});
    return;
  }
  ++dup_acks_;
  // Resends after a timeout draw duplicate acks that say nothing about loss.
  if (timeout_recovery_) {
    cc_->on_ack({now, 0, std::nullopt, beta_});
    return;
  }
  left_network_ = std::min(left_network_ + 1, std::max<std::int64_t>(0, outstanding_segments() - 1));
  if (dup_acks_ == config_.dupack_threshold && !in_recovery_) {
    in_recovery_ = true;
    partial_acks_ = 0;
    recover_ = snd_max_;
    retx_pending_ = snd_una_;
    ++stats_.loss_events;
    cc_->on_loss(now, LossKind::kFastRetransmit);
  }
  cc_->on_ack({now, 0, std::nullopt, beta_});
}

void Sender::on_rto(TimeUs now) {
  if (snd_max_ == snd_una_) {
    rto_deadline_.reset();
    return;
  }
  rtt_.backoff();
  ++stats_.loss_events;
  in_recovery_ = true;
  timeout_recovery_ = true;
  recover_ = snd_max_;
  dup_acks_ = 0;
  // Go back to the first unacknowledged byte; everything outstanding is
  // presumed lost and is resent as the window reopens.
  retx_pending_.reset();
  snd_nxt_ = snd_una_;
  left_network_ = 0;
  rto_deadline_ = now + rtt_.rto();
  cc_->on_loss(now, LossKind::kTimeout);
}

UeReceiver::UeReceiver(int ue_id, TimeUs activity_window)
    : ue_id_(ue_id), activity_window_(activity_window) {}

Packet UeReceiver::ue_on_data(const Packet& p, TimeUs now) {
  FlowRx& rx = flows_[p.flow_id];
  rx.total += p.size;
  rx.last_data = now;
  if (p.seq == rx.next_expected) {
    rx.next_expected += p.size;
    rx.unique += p.size;
    for (auto it = rx.out_of_order.begin();
         it != rx.out_of_order.end() && it->first <= rx.next_expected;) {
      const Bytes end = it->first + it->second;
      if (end > rx.next_expected) {
        rx.unique += end - rx.next_expected;
        rx.next_expected = end;
      }
      it = rx.out_of_order.erase(it);
    }
  } else if (p.seq > rx.next_expected) {
    rx.out_of_order.emplace(p.seq, p.size);
  }

  Packet ack;
  ack.flow_id = p.flow_id;
  ack.ue_id = ue_id_;
  ack.kind = PacketKind::kAck;
  ack.size = kAckSize;
  ack.t_sent = now;
  ack.cum_ack = rx.next_expected;
  ack.beta = beta(now);
  ack.echo_sent = p.t_sent;
  ack.echo_retransmission = p.is_retransmission;
  ack.feedback = p.feedback;
  return ack;
}

int UeReceiver::beta(TimeUs now) const {
  int active = 0;
  for (const auto& [id, rx] : flows_)
    if (rx.last_data != kUnset && now - rx.last_data <= activity_window_) ++active;
  return std::max(active, 1);
}

Bytes UeReceiver::unique_bytes(int flow_id) const {
  auto it = flows_.find(flow_id);
  return it == flows_.end() ? 0 : it->second.unique;
}

Bytes UeReceiver::total_bytes(int flow_id) const {
  auto it = flows_.find(flow_id);
  return it == flows_.end() ? 0 : it->second.total;
}

}  // namespace natsim
