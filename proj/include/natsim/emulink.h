#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "natsim/feedback.h"
#include "natsim/trace.h"
#include "natsim/types.h"

namespace natsim {

enum class PacketKind { kData, kAck, kProbe, kFeedback };

struct Packet {
  int flow_id = 0;
  int ue_id = 0;
  Bytes seq = 0;  // byte offset of the first payload byte
  Bytes size = 0;
  PacketKind kind = PacketKind::kData;
  TimeUs t_sent = kUnset;
  TimeUs t_enqueued = kUnset;
  TimeUs t_dequeued = kUnset;
  TimeUs t_delivered = kUnset;
  bool is_retransmission = false;

  // Ack fields.
  Bytes cum_ack = 0;
  int beta = 1;
  TimeUs echo_sent = kUnset;  // t_sent of the data packet being acked
  bool echo_retransmission = false;

  // In-band feedback riding this packet (and later its ack).
  std::optional<FeedbackMsg> feedback;

  TimeUs queuing_delay() const { return t_dequeued - t_enqueued; }
};

// Fixed-delay segments and the uplink of the MEC path.
struct PathConfig {
  // Server to base station, downlink direction.
  TimeUs net_min_owd = 4000;
  // Base station to server, uplink direction (excludes serialization).
  TimeUs uplink_owd = 4957;
  // Uplink serialization rate for acks; 0 means ideal.
  BitsPerSec uplink_rate = 12e6;
  // NetAssist to server control channel.
  TimeUs oob_delay = 2000;
  // Air-interface loss applied to dequeued packets.
  double loss_prob = 0.0;
  // Probe samples are drawn uniformly within +/- this amount.
  TimeUs probe_jitter = 0;
  // Base station to UE radio propagation.
  TimeUs radio_delay = 0;

  void validate() const;  // throws ConfigError
};

enum class EnqueueResult { kAccepted, kDropped };

// Per-UE droptail buffer at the base station, accounted in bytes.
class UeQueue {
 public:
  explicit UeQueue(Bytes capacity = 150'000);

  // Accepts iff occupancy + size <= capacity; stamps t_enqueued.
  EnqueueResult enqueue(Packet p, TimeUs now);
  // Pops the head and stamps t_dequeued.
  std::optional<Packet> dequeue(TimeUs now);

  bool empty() const { return fifo_.empty(); }
  Bytes capacity() const { return capacity_; }
  Bytes occupancy() const { return occupancy_; }
  std::size_t packets() const { return fifo_.size(); }
  std::int64_t drop_count() const { return drop_count_; }
  Bytes arrived_bytes() const { return arrived_bytes_; }
  Bytes dequeued_bytes() const { return dequeued_bytes_; }
  Bytes dropped_bytes() const { return dropped_bytes_; }

  // Conservation: arrived = dequeued + dropped + occupancy, and
  // 0 <= occupancy <= capacity.
  bool audit() const;

 private:
  Bytes capacity_;
  Bytes occupancy_ = 0;
  std::deque<Packet> fifo_;
  std::int64_t drop_count_ = 0;
  Bytes arrived_bytes_ = 0;
  Bytes dequeued_bytes_ = 0;
  Bytes dropped_bytes_ = 0;
};

// Fixed network delays plus a FIFO serializer on the uplink.
class PathModel {
 public:
  explicit PathModel(PathConfig config);

  const PathConfig& config() const { return config_; }

  // Downlink data reaches the base station queue after the fixed delay.
  TimeUs send_downlink(TimeUs now) const { return now + config_.net_min_owd; }

  // Arrival time at the server of an uplink packet of `size` bytes handed to
  // the uplink at `now`. Packets serialize in FIFO order.
  TimeUs send_uplink(Bytes size, TimeUs now);

  // Round trip of a priority probe over the fixed network segment. Probes
  // never enter a UE queue, so the result is independent of occupancy.
  TimeUs probe_rtt(Rng& rng) const;

 private:
  PathConfig config_;
  TimeUs uplink_busy_until_ = 0;
};

// Base station side of the downlink: per-UE queues drained by the trace.
class CellularLink {
 public:
  CellularLink(const TraceSchedule& schedule, int num_ues, Bytes buffer_bytes,
               double loss_prob);

  // Throws ConfigError for an unknown UE.
  EnqueueResult enqueue_bts(Packet p, TimeUs now);

  struct Service {
    std::optional<Packet> packet;  // dequeued packet, if any
    bool lost = false;             // dropped on the air interface
  };

  // Serves one opportunity. With several UEs, backlogged queues take turns.
  // `rng` is consulted only when loss_prob > 0.
  Service on_opportunity(TimeUs now, Rng& rng);

  // Opportunity times in replay order.
  TimeUs next_opportunity() { return cursor_.next(); }

  int num_ues() const { return static_cast<int>(queues_.size()); }
  const UeQueue& queue(int ue) const;
  std::int64_t idle_opportunities() const { return idle_; }
  std::int64_t air_losses() const { return air_losses_; }
  bool audit() const;

 private:
  const TraceSchedule* schedule_;
  TraceCursor cursor_;
  std::vector<UeQueue> queues_;
  double loss_prob_;
  std::size_t rr_next_ = 0;
  std::int64_t idle_ = 0;
  std::int64_t air_losses_ = 0;
};

}  // namespace natsim
