#include "natsim/netassist.h"

#include <cmath>
#include <string>

namespace natsim {

std::string_view to_string(FeedbackMode mode) {
  return mode == FeedbackMode::kOob ? "oob" : "ib";
}

FeedbackMode parse_feedback_mode(std::string_view text) {
  if (text == "oob") return FeedbackMode::kOob;
  if (text == "ib") return FeedbackMode::kIb;
  throw ConfigError("feedback mode must be 'oob' or 'ib', got '" + std::string(text) + "'");
}

void NetAssistConfig::validate() const {
  if (period <= 0) throw ConfigError("feedback period must be positive");
  if (probe_interval <= 0) throw ConfigError("probe interval must be positive");
  if (feedback_size <= 0) throw ConfigError("feedback size must be positive");
  if (part2_ceiling <= 0) throw ConfigError("minRTT downlink ceiling must be positive");
}

NetAssist::NetAssist(NetAssistConfig config, const TraceSchedule& schedule,
                     const PathConfig& path, int num_ues)
    : config_(config),
      schedule_(&schedule),
      path_(path),
      next_seq_(static_cast<std::size_t>(num_ues), 0) {
  config_.validate();
}

void NetAssist::check_ue(int ue) const {
  if (ue < 0 || static_cast<std::size_t>(ue) >= next_seq_.size())
    throw ConfigError("unknown UE id " + std::to_string(ue));
}

BitsPerSec NetAssist::measure_bl_bw(int ue, TimeUs t_start, TimeUs t_end) const {
  check_ue(ue);
  if (t_end <= t_start) return 0.0;
  const auto n = schedule_->count_between(t_start, t_end);
  return static_cast<double>(n) * static_cast<double>(schedule_->mtu) * 8.0 /
         to_seconds(t_end - t_start) / static_cast<double>(active_ues_);
}

MinRttParts NetAssist::measure_min_rtt(int ue, TimeUs t_start, TimeUs t_end) const {
  check_ue(ue);
  if (!last_probe_) throw NetAssistError("uninitialized");
  MinRttParts parts;
  parts.network = *last_probe_;
  const BitsPerSec bw = measure_bl_bw(ue, t_start, t_end);
  if (bw > 0.0) {
    parts.downlink = std::min(serialization_us(schedule_->mtu, bw), config_.part2_ceiling);
  } else {
    parts.downlink = config_.part2_ceiling;
  }
  parts.uplink = serialization_us(kAckSize, path_.uplink_rate);
  return parts;
}

FeedbackMsg NetAssist::emit_feedback(int ue, TimeUs now) {
  check_ue(ue);
  FeedbackMsg msg;
  msg.ue_id = ue;
  msg.t_start = now - config_.period;
  msg.t_end = now;
  msg.bl_bw = measure_bl_bw(ue, msg.t_start, msg.t_end);
  msg.min_rtt = measure_min_rtt(ue, msg.t_start, msg.t_end).total();
  msg.t_emitted = now;
  msg.seq = next_seq_[static_cast<std::size_t>(ue)]++;
  return msg;
}

double NetAssist::overhead_kbps() const {
  return static_cast<double>(config_.feedback_size) * 8.0 / to_seconds(config_.period) /
         1000.0;
}

bool InBandChannel::attach(Packet& p) {
  auto& slot = pending_.at(static_cast<std::size_t>(p.ue_id));
  if (!slot || p.kind != PacketKind::kData) return false;
  p.feedback = *slot;
  slot.reset();
  return true;
}

}  // namespace natsim
