#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "natsim/cc.h"
#include "natsim/emulink.h"
#include "natsim/metrics.h"
#include "natsim/netassist.h"
#include "natsim/trace.h"
#include "natsim/transport.h"
#include "natsim/types.h"

namespace natsim {

// Min-heap of actions ordered by (time, insertion order).
class EventQueue {
 public:
  using Action = std::function<void()>;

  void schedule(TimeUs at, Action action);
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  TimeUs next_time() const { return heap_.front().time; }
  // Advances the clock to the earliest event and runs it.
  void run_next();
  TimeUs now() const { return now_; }

 private:
  struct Entry {
    TimeUs time;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  std::vector<Entry> heap_;
  std::uint64_t next_seq_ = 0;
  TimeUs now_ = 0;
};

struct FlowSpec {
  double start_s = 0.0;
  int ue_id = 0;
};

struct SimConfig {
  Scheme scheme = Scheme::kNatcp;
  // Synthetic spec or trace file path, see make_trace().
  std::string trace = "const:12mbps";
  // Pre-built schedule; takes precedence over `trace` when set.
  std::optional<TraceSchedule> schedule;
  double duration_s = 60.0;
  Bytes mtu = kDefaultMtu;
  Bytes buffer_bytes = 150'000;
  NetAssistConfig netassist;
  // When false NetAssist still measures but nothing reaches the servers.
  bool feedback_enabled = true;
  // Digests emitted at or after this time are not dispatched.
  std::optional<TimeUs> feedback_cutoff;
  PathConfig path;
  CcParams cc;
  // Defaults to three feedback periods.
  std::optional<TimeUs> watchdog_timeout;
  SenderConfig sender;
  std::uint64_t seed = 1;
  std::vector<FlowSpec> flows{FlowSpec{}};
  bool record_events = false;
  bool record_feedback = false;
  TimeUs goodput_bin = 100'000;

  TimeUs duration_us() const;
  int num_ues() const;
  CcParams effective_cc() const;
  // Throws ConfigError (or InputFileError via load_schedule) on the first
  // problem found.
  void validate() const;
  TraceSchedule load_schedule() const;
};

struct ModeChange {
  TimeUs time = 0;
  int flow_id = 0;
  bool assisted = false;
};

struct RunResult {
  std::vector<FlowMetrics> flows;
  FlowMetrics aggregate;
  std::string events_csv;    // filled when record_events
  std::string feedback_csv;  // filled when record_feedback
  std::vector<ModeChange> mode_changes;
  // Last time each flow departed with assisted state, if ever.
  std::vector<std::optional<TimeUs>> last_assisted_send;
  std::int64_t events_processed = 0;
  std::int64_t audit_failures = 0;
  std::int64_t window_violations = 0;
  std::int64_t idle_opportunities = 0;
  std::int64_t air_losses = 0;
  std::int64_t feedback_emitted = 0;
  std::int64_t feedback_dispatched = 0;
};

std::string event_log_header();
std::string feedback_log_header();

// Runs one simulation to completion. Validation errors are thrown before any
// event executes.
RunResult run(const SimConfig& config);

}  // namespace natsim
