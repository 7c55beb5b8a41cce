#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "natsim/emulink.h"
#include "natsim/feedback.h"
#include "natsim/trace.h"
#include "natsim/types.h"

namespace natsim {

enum class FeedbackMode { kOob, kIb };

std::string_view to_string(FeedbackMode mode);
FeedbackMode parse_feedback_mode(std::string_view text);  // throws ConfigError

struct NetAssistConfig {
  TimeUs period = 50'000;
  FeedbackMode mode = FeedbackMode::kOob;
  TimeUs probe_interval = 50'000;
  Bytes feedback_size = 64;
  // Downlink part of minRTT when the window saw no capacity.
  TimeUs part2_ceiling = 1'000'000;

  void validate() const;  // throws ConfigError
};

// The three additive components of the minimum RTT.
struct MinRttParts {
  TimeUs network = 0;   // probe round trip of the fixed network segment
  TimeUs downlink = 0;  // per-packet transmission/scheduling at the BTS
  TimeUs uplink = 0;    // ack-sized serialization on the uplink
  TimeUs total() const { return network + downlink + uplink; }
};

class NetAssistError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Edge measurement entity paired with one base station.
class NetAssist {
 public:
  NetAssist(NetAssistConfig config, const TraceSchedule& schedule,
            const PathConfig& path, int num_ues);

  const NetAssistConfig& config() const { return config_; }

  // Offered downlink capacity over (t_start, t_end] in bits/s, independent of
  // backlog. Split evenly when several UEs share the link.
  BitsPerSec measure_bl_bw(int ue, TimeUs t_start, TimeUs t_end) const;

  // Throws NetAssistError("uninitialized") before the first probe sample.
  MinRttParts measure_min_rtt(int ue, TimeUs t_start, TimeUs t_end) const;

  void record_probe(TimeUs rtt_sample) { last_probe_ = rtt_sample; }
  bool has_probe() const { return last_probe_.has_value(); }

  // Number of UEs currently sharing the downlink (at least 1).
  void set_active_ues(int n) { active_ues_ = n < 1 ? 1 : n; }

  // Builds the digest for the window ending at `now`; seq increments per UE.
  FeedbackMsg emit_feedback(int ue, TimeUs now);

  // Control-channel bandwidth of one UE's feedback stream, in kbit/s.
  double overhead_kbps() const;

 private:
  void check_ue(int ue) const;

  NetAssistConfig config_;
  const TraceSchedule* schedule_;
  PathConfig path_;
  std::vector<std::uint32_t> next_seq_;
  std::optional<TimeUs> last_probe_;
  int active_ues_ = 1;
};

// In-band delivery: the newest undelivered digest for a UE rides the next data
// packet dequeued at the base station, and reaches the server with its ack.
class InBandChannel {
 public:
  explicit InBandChannel(int num_ues) : pending_(static_cast<std::size_t>(num_ues)) {}

  void post(const FeedbackMsg& msg) { pending_.at(static_cast<std::size_t>(msg.ue_id)) = msg; }

  // Attaches the pending digest (if any) to `p` and clears it.
  bool attach(Packet& p);

  bool pending(int ue) const { return pending_.at(static_cast<std::size_t>(ue)).has_value(); }

 private:
  std::vector<std::optional<FeedbackMsg>> pending_;
};

}  // namespace natsim
