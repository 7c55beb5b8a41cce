#include "natsim/emulink.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace natsim {

void PathConfig::validate() const {
  if (net_min_owd < 0 || uplink_owd < 0 || oob_delay < 0 || radio_delay < 0 ||
      probe_jitter < 0)
    throw ConfigError("path delays must be >= 0");
  if (uplink_rate < 0.0 || std::isnan(uplink_rate))
    throw ConfigError("uplink rate must be >= 0 (0 = ideal)");
  if (!(loss_prob >= 0.0 && loss_prob <= 1.0))
    throw ConfigError("loss probability must be in [0, 1]");
  if (probe_jitter > net_min_owd + uplink_owd)
    throw ConfigError("probe jitter exceeds the network round trip");
}

UeQueue::UeQueue(Bytes capacity) : capacity_(capacity) {}

EnqueueResult UeQueue::enqueue(Packet p, TimeUs now) {
  arrived_bytes_ += p.size;
  if (occupancy_ + p.size > capacity_) {
    ++drop_count_;
    dropped_bytes_ += p.size;
    return EnqueueResult::kDropped;
  }
  p.t_enqueued = now;
  occupancy_ += p.size;
  fifo_.push_back(std::move(p));
  return EnqueueResult::kAccepted;
}

std::optional<Packet> UeQueue::dequeue(TimeUs now) {
  if (fifo_.empty()) return std::nullopt;
  Packet p = std::move(fifo_.front());
  fifo_.pop_front();
  occupancy_ -= p.size;
  dequeued_bytes_ += p.size;
  p.t_dequeued = now;
  return p;
}

bool UeQueue::audit() const {
  return occupancy_ >= 0 && occupancy_ <= capacity_ &&
         arrived_bytes_ == dequeued_bytes_ + dropped_bytes_ + occupancy_;
}

PathModel::PathModel(PathConfig config) : config_(config) { config_.validate(); }

TimeUs PathModel::send_uplink(Bytes size, TimeUs now) {
  const TimeUs start = std::max(now, uplink_busy_until_);
  uplink_busy_until_ = start + serialization_us(size, config_.uplink_rate);
  return uplink_busy_until_ + config_.uplink_owd;
}

TimeUs PathModel::probe_rtt(Rng& rng) const {
  TimeUs rtt = config_.net_min_owd + config_.uplink_owd;
  if (config_.probe_jitter > 0) {
    const double j = static_cast<double>(config_.probe_jitter);
    rtt += static_cast<TimeUs>(std::llround(rng.uniform(-j, j)));
  }
  return rtt;
}

CellularLink::CellularLink(const TraceSchedule& schedule, int num_ues,
                           Bytes buffer_bytes, double loss_prob)
    : schedule_(&schedule), cursor_(schedule), loss_prob_(loss_prob) {
  if (num_ues <= 0) throw ConfigError("at least one UE is required");
  if (buffer_bytes <= 0) throw ConfigError("buffer must be positive");
  queues_.assign(static_cast<std::size_t>(num_ues), UeQueue(buffer_bytes));
}

const UeQueue& CellularLink::queue(int ue) const {
  if (ue < 0 || ue >= num_ues())
    throw ConfigError("unknown UE id " + std::to_string(ue));
  return queues_[static_cast<std::size_t>(ue)];
}

EnqueueResult CellularLink::enqueue_bts(Packet p, TimeUs now) {
  if (p.ue_id < 0 || p.ue_id >= num_ues())
    throw ConfigError("unknown UE id " + std::to_string(p.ue_id));
  return queues_[static_cast<std::size_t>(p.ue_id)].enqueue(std::move(p), now);
}

CellularLink::Service CellularLink::on_opportunity(TimeUs now, Rng& rng) {
  Service service;
  const std::size_t n = queues_.size();
  for (std::size_t i = 0; i < n; ++i) {
    UeQueue& q = queues_[(rr_next_ + i) % n];
    if (q.empty()) continue;
    service.packet = q.dequeue(now);
    rr_next_ = (rr_next_ + i + 1) % n;
    break;
  }
  if (!service.packet) {
    ++idle_;
    return service;
  }
  if (loss_prob_ > 0.0 && rng.bernoulli(loss_prob_)) {
    service.lost = true;
    ++air_losses_;
  }
  return service;
}

bool CellularLink::audit() const {
  return std::all_of(queues_.begin(), queues_.end(),
                     [](const UeQueue& q) { return q.audit(); });
}

}  // namespace natsim
