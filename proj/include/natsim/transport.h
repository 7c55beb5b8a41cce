#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "natsim/cc.h"
#include "natsim/emulink.h"
#include "natsim/types.h"

namespace natsim {

struct SenderConfig {
  Bytes mss = kDefaultMtu;
  TimeUs rto_initial = 1'000'000;
  TimeUs rto_min = 200'000;
  TimeUs rto_max = 60'000'000;
  int dupack_threshold = 3;
};

// Smoothed RTT and retransmission timeout (gains 1/8 and 1/4).
class RttEstimator {
 public:
  explicit RttEstimator(const SenderConfig& config);

  void sample(TimeUs rtt);
  // Doubles the timeout, capped at rto_max.
  void backoff();

  bool has_sample() const { return has_sample_; }
  TimeUs srtt() const { return srtt_; }
  TimeUs rttvar() const { return rttvar_; }
  TimeUs rto() const { return rto_; }

 private:
  TimeUs rto_min_;
  TimeUs rto_max_;
  bool has_sample_ = false;
  TimeUs srtt_ = 0;
  TimeUs rttvar_ = 0;
  TimeUs rto_;
};

struct SenderStats {
  std::int64_t segments_sent = 0;
  std::int64_t retransmissions = 0;
  std::int64_t fast_retransmits = 0;  // includes partial-ack repairs
  std::int64_t rto_retransmits = 0;
  std::int64_t loss_events = 0;
  Bytes bytes_sent = 0;
};

// Bulk sender with cumulative acks, NewReno-style recovery and a token-bucket
// pacer (burst of one packet). The window and pacing rate come from the
// congestion controller.
class Sender {
 public:
  Sender(int flow_id, int ue_id, SenderConfig config,
         std::unique_ptr<CongestionController> cc);

  // Packets departing at `now`, in order.
  std::vector<Packet> try_send(TimeUs now);
  void on_ack(const Packet& ack, TimeUs now);
  void on_rto(TimeUs now);
  void on_feedback(const FeedbackMsg& fb, TimeUs now) { cc_->on_feedback(fb, now); }

  // Pending retransmission timer, if armed.
  std::optional<TimeUs> rto_deadline() const { return rto_deadline_; }
  // Earliest time the pacer allows the next departure, if the sender is
  // otherwise ready to send.
  std::optional<TimeUs> pacing_wake() const;

  int flow_id() const { return flow_id_; }
  int ue_id() const { return ue_id_; }
  Bytes cum_acked() const { return snd_una_; }
  Bytes next_seq() const { return snd_nxt_; }
  Bytes max_seq() const { return snd_max_; }
  // Bytes believed to be in the network: outstanding minus segments that
  // duplicate acks (or a timeout) show have left it.
  Bytes in_flight() const;
  int dup_ack_count() const { return dup_acks_; }
  bool in_recovery() const { return in_recovery_; }
  const RttEstimator& rtt() const { return rtt_; }
  const SenderStats& stats() const { return stats_; }
  CongestionController& cc() { return *cc_; }
  const CongestionController& cc() const { return *cc_; }
  // Violations of in_flight <= cwnd observed at new-data send decisions.
  std::int64_t window_violations() const { return window_violations_; }

 private:
  bool pacing_allows(TimeUs now, BitsPerSec rate) const;
  void note_departure(TimeUs now, BitsPerSec rate);
  std::int64_t outstanding_segments() const;

  int flow_id_;
  int ue_id_;
  SenderConfig config_;
  std::unique_ptr<CongestionController> cc_;
  RttEstimator rtt_;

  Bytes snd_una_ = 0;
  Bytes snd_nxt_ = 0;
  Bytes snd_max_ = 0;  // highest byte ever sent
  Bytes recover_ = 0;
  bool in_recovery_ = false;
  int dup_acks_ = 0;
  std::int64_t left_network_ = 0;
  bool timeout_recovery_ = false;
  int partial_acks_ = 0;
  std::optional<Bytes> retx_pending_;  // hole to resend next
  std::optional<TimeUs> rto_deadline_;
  double pacing_next_ = 0.0;
  bool ready_but_paced_ = false;
  int beta_ = 1;

  SenderStats stats_;
  std::int64_t window_violations_ = 0;
};

// UE side: per-flow reassembly, immediate cumulative acks, and the fairness
// coefficient (flows with data inside the activity window).
class UeReceiver {
 public:
  explicit UeReceiver(int ue_id, TimeUs activity_window = kUsPerSec);

  // Returns the 64-byte ack for `p`.
  Packet ue_on_data(const Packet& p, TimeUs now);

  int beta(TimeUs now) const;
  Bytes unique_bytes(int flow_id) const;
  Bytes total_bytes(int flow_id) const;

 private:
  struct FlowRx {
    Bytes next_expected = 0;
    std::map<Bytes, Bytes> out_of_order;  // seq -> size
    TimeUs last_data = kUnset;
    Bytes unique = 0;
    Bytes total = 0;
  };

  int ue_id_;
  TimeUs activity_window_;
  std::map<int, FlowRx> flows_;
};

}  // namespace natsim
