#include "natsim/engine.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>

namespace natsim {

void EventQueue::schedule(TimeUs at, Action action) {
  heap_.push_back({at, next_seq_++, std::move(action)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

void EventQueue::run_next() {
  std::pop_heap(heap_.begin(), heap_.end(), Later{});
  Entry e = std::move(heap_.back());
  heap_.pop_back();
  now_ = e.time;
  e.action();
}

TimeUs SimConfig::duration_us() const {
  return static_cast<TimeUs>(std::llround(duration_s * static_cast<double>(kUsPerSec)));
}

int SimConfig::num_ues() const {
  int n = 1;
  for (const FlowSpec& f : flows) n = std::max(n, f.ue_id + 1);
  return n;
}

CcParams SimConfig::effective_cc() const {
  CcParams p = cc;
  p.mss = mtu;
  p.watchdog_timeout = watchdog_timeout.value_or(3 * netassist.period);
  return p;
}

void SimConfig::validate() const {
  if (!std::isfinite(duration_s) || duration_s < 0) throw ConfigError("duration must be >= 0");
  if (mtu <= 0) throw ConfigError("mtu must be positive");
  if (buffer_bytes < mtu) throw ConfigError("buffer must hold at least one packet");
  if (seed == 0) throw ConfigError("seed must be non-zero");
  if (goodput_bin <= 0) throw ConfigError("goodput bin must be positive");
  if (flows.empty()) throw ConfigError("at least one flow is required");
  for (const FlowSpec& f : flows) {
    if (!std::isfinite(f.start_s) || f.start_s < 0) throw ConfigError("flow start must be >= 0");
    if (f.ue_id < 0) throw ConfigError("ue id must be >= 0");
  }
  if (watchdog_timeout && *watchdog_timeout <= 0)
    throw ConfigError("watchdog timeout must be positive");
  netassist.validate();
  path.validate();
  effective_cc().validate();
  if (schedule) schedule->validate();
}

TraceSchedule SimConfig::load_schedule() const {
  if (schedule) return *schedule;
  const auto ms = std::max<std::int64_t>(1000, (duration_us() + kUsPerMs - 1) / kUsPerMs);
  return make_trace(trace, ms, seed, mtu);
}

std::string event_log_header() { return "time_us,kind,flow,seq,qdelay_us"; }
std::string feedback_log_header() { return "seq,t_emitted,t_arrived,bl_bw,min_rtt"; }

namespace {

class Simulation {
 public:
  Simulation(const SimConfig& config, TraceSchedule schedule)
      : config_(config),
        end_(config.duration_us()),
        schedule_(std::move(schedule)),
        rng_(config.seed),
        probe_rng_(config.seed ^ 0x9e3779b97f4a7c15ULL),
        path_(config.path),
        link_(schedule_, config.num_ues(), config.buffer_bytes, config.path.loss_prob),
        netassist_(config.netassist, schedule_, config.path, config.num_ues()),
        inband_(config.num_ues()),
        flow_started_(config.flows.size(), false) {
    const CcParams cc = config.effective_cc();
    SenderConfig sc = config.sender;
    sc.mss = config.mtu;
    for (int ue = 0; ue < config.num_ues(); ++ue) receivers_.emplace_back(ue);
    for (std::size_t i = 0; i < config.flows.size(); ++i) {
      const int id = static_cast<int>(i);
      flows_.push_back(std::make_unique<FlowState>(
          Sender(id, config.flows[i].ue_id, sc, make_controller(config.scheme, cc))));
      FlowMetrics& m = flows_.back()->metrics;
      m.flow_id = id;
      m.ue_id = config.flows[i].ue_id;
      m.start = static_cast<TimeUs>(std::llround(config.flows[i].start_s * 1e6));
      m.bin_width = config.goodput_bin;
    }
    uses_feedback_ = flows_.front()->sender.cc().uses_feedback();
    result_.last_assisted_send.assign(flows_.size(), std::nullopt);
  }

  RunResult run() {
    for (std::size_t i = 0; i < flows_.size(); ++i) {
      const TimeUs start = flows_[i]->metrics.start;
      if (start < end_) at(start, [this, i] { start_flow(i); });
    }
    if (end_ > 0) {
      schedule_opportunity();
      if (uses_feedback_) {
        at(0, [this] { probe(); });
        at(config_.netassist.period, [this] { emit_feedback(); });
      }
    }

    TimeUs last = 0;
    while (!queue_.empty() && queue_.next_time() <= end_) {
      queue_.run_next();
      ++result_.events_processed;
      if (queue_.now() < last) ++result_.audit_failures;
      last = queue_.now();
      if (!link_.audit()) ++result_.audit_failures;
    }
    return finish();
  }

 private:
  struct FlowState {
    explicit FlowState(Sender s) : sender(std::move(s)) {}
    Sender sender;
    FlowMetrics metrics;
    std::optional<TimeUs> rto_armed;
    std::optional<TimeUs> wake_armed;
    std::optional<TimeUs> watchdog_armed;
  };

  template <typename F>
  void at(TimeUs t, F&& f) {
    queue_.schedule(t, std::forward<F>(f));
  }

  TimeUs now() const { return queue_.now(); }

  void log_event(const char* kind, int flow, Bytes seq, std::optional<TimeUs> qdelay) {
    if (!config_.record_events) return;
    char buf[128];
    if (qdelay)
      std::snprintf(buf, sizeof buf, "%lld,%s,%d,%lld,%lld\n", static_cast<long long>(now()),
                    kind, flow, static_cast<long long>(seq), static_cast<long long>(*qdelay));
    else
      std::snprintf(buf, sizeof buf, "%lld,%s,%d,%lld,\n", static_cast<long long>(now()), kind,
                    flow, static_cast<long long>(seq));
    result_.events_csv += buf;
  }

  void start_flow(std::size_t i) {
    flow_started_[i] = true;
    std::set<int> ues;
    for (std::size_t j = 0; j < flows_.size(); ++j)
      if (flow_started_[j]) ues.insert(flows_[j]->sender.ue_id());
    netassist_.set_active_ues(static_cast<int>(ues.size()));
    pump(i);
  }

  // Sends whatever the window and pacer allow, then re-arms the timers.
  void pump(std::size_t i) {
    FlowState& f = *flows_[i];
    const bool assisted = f.sender.cc().assisted();
    for (Packet& p : f.sender.try_send(now())) {
      log_event(p.is_retransmission ? "resend" : "send", static_cast<int>(i), p.seq, {});
      if (assisted) result_.last_assisted_send[i] = now();
      const TimeUs arrival = path_.send_downlink(now());
      at(arrival, [this, i, p = std::move(p)]() mutable { bts_arrival(i, std::move(p)); });
    }
    const auto rto = f.sender.rto_deadline();
    if (rto && rto != f.rto_armed) {
      f.rto_armed = rto;
      at(*rto, [this, i, t = *rto] { rto_fired(i, t); });
    }
    if (!rto) f.rto_armed.reset();
    const auto wake = f.sender.pacing_wake();
    if (wake && wake != f.wake_armed) {
      f.wake_armed = wake;
      at(*wake, [this, i, t = *wake] {
        if (flows_[i]->wake_armed == t) flows_[i]->wake_armed.reset();
        pump(i);
      });
    }
  }

  void rto_fired(std::size_t i, TimeUs t) {
    FlowState& f = *flows_[i];
    if (f.rto_armed != t || f.sender.rto_deadline() != t) return;
    f.rto_armed.reset();
    log_event("rto", static_cast<int>(i), f.sender.cum_acked(), {});
    f.sender.on_rto(now());
    pump(i);
  }

  void bts_arrival(std::size_t i, Packet p) {
    const int flow = p.flow_id;
    const Bytes seq = p.seq;
    if (link_.enqueue_bts(std::move(p), now()) == EnqueueResult::kDropped) {
      ++flows_[i]->metrics.drops;
      log_event("drop", flow, seq, {});
    }
  }

  void schedule_opportunity() {
    const TimeUs t = link_.next_opportunity();
    if (t <= end_) at(t, [this] { opportunity(); });
  }

  void opportunity() {
    CellularLink::Service s = link_.on_opportunity(now(), rng_);
    if (s.packet) {
      Packet& p = *s.packet;
      const auto i = static_cast<std::size_t>(p.flow_id);
      const TimeUs qd = p.queuing_delay();
      flows_[i]->metrics.qdelay_samples.push_back(qd);
      log_event("dequeue", p.flow_id, p.seq, qd);
      if (ib_active() && inband_.attach(p)) {
        ++flows_[i]->metrics.feedback_msgs;
        ++result_.feedback_dispatched;
      }
      if (s.lost) {
        log_event("lost", p.flow_id, p.seq, {});
      } else {
        at(now() + config_.path.radio_delay,
           [this, p = std::move(p)]() mutable { ue_delivery(std::move(p)); });
      }
    }
    schedule_opportunity();
  }

  void ue_delivery(Packet p) {
    p.t_delivered = now();
    const auto i = static_cast<std::size_t>(p.flow_id);
    UeReceiver& rx = receivers_[static_cast<std::size_t>(p.ue_id)];
    FlowMetrics& m = flows_[i]->metrics;
    const Bytes before = rx.unique_bytes(p.flow_id);
    Packet ack = rx.ue_on_data(p, now());
    const Bytes fresh = rx.unique_bytes(p.flow_id) - before;
    m.delivered_bytes += p.size;
    m.unique_bytes += fresh;
    const auto bin = static_cast<std::size_t>(now() / config_.goodput_bin);
    if (m.goodput_bins.size() <= bin) m.goodput_bins.resize(bin + 1, 0);
    m.goodput_bins[bin] += fresh;
    const TimeUs arrival = path_.send_uplink(ack.size, now());
    at(arrival, [this, i, ack = std::move(ack)] { ack_arrival(i, ack); });
  }

  void ack_arrival(std::size_t i, const Packet& ack) {
    FlowState& f = *flows_[i];
    if (ack.feedback) deliver_feedback(i, *ack.feedback);
    f.sender.on_ack(ack, now());
    pump(i);
  }

  bool ib_active() const {
    return uses_feedback_ && config_.feedback_enabled &&
           config_.netassist.mode == FeedbackMode::kIb;
  }

  void probe() {
    const TimeUs rtt = path_.probe_rtt(probe_rng_);
    at(now() + rtt, [this, rtt] { netassist_.record_probe(rtt); });
    at(now() + config_.netassist.probe_interval, [this] { probe(); });
  }

  void emit_feedback() {
    const bool dispatch = config_.feedback_enabled &&
                          (!config_.feedback_cutoff || now() < *config_.feedback_cutoff);
    std::set<int> ues;
    for (std::size_t j = 0; j < flows_.size(); ++j)
      if (flow_started_[j]) ues.insert(flows_[j]->sender.ue_id());
    if (netassist_.has_probe()) {
      for (int ue : ues) {
        FeedbackMsg msg = netassist_.emit_feedback(ue, now());
        ++result_.feedback_emitted;
        if (!dispatch) continue;
        if (config_.netassist.mode == FeedbackMode::kIb) {
          inband_.post(msg);
          continue;
        }
        for (std::size_t j = 0; j < flows_.size(); ++j) {
          if (!flow_started_[j] || flows_[j]->sender.ue_id() != ue) continue;
          ++flows_[j]->metrics.feedback_msgs;
          ++result_.feedback_dispatched;
          at(now() + config_.path.oob_delay, [this, j, msg] { deliver_feedback(j, msg); });
        }
      }
    }
    at(now() + config_.netassist.period, [this] { emit_feedback(); });
  }

  void deliver_feedback(std::size_t i, const FeedbackMsg& msg) {
    FlowState& f = *flows_[i];
    const bool was = f.sender.cc().assisted();
    f.sender.on_feedback(msg, now());
    log_event("feedback", static_cast<int>(i), msg.seq, {});
    if (config_.record_feedback) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%u,%lld,%lld,%.3f,%lld\n", msg.seq,
                    static_cast<long long>(msg.t_emitted), static_cast<long long>(now()),
                    msg.bl_bw, static_cast<long long>(msg.min_rtt));
      result_.feedback_csv += buf;
    }
    if (!was && f.sender.cc().assisted()) {
      result_.mode_changes.push_back({now(), static_cast<int>(i), true});
      log_event("engage", static_cast<int>(i), 0, {});
    }
    const TimeUs deadline = now() + config_.effective_cc().watchdog_timeout;
    f.watchdog_armed = deadline;
    at(deadline, [this, i, deadline] {
      if (flows_[i]->watchdog_armed != deadline) return;
      if (flows_[i]->sender.cc().watchdog_tick(now())) {
        result_.mode_changes.push_back({now(), static_cast<int>(i), false});
        log_event("revert", static_cast<int>(i), 0, {});
      }
      pump(i);
    });
    pump(i);
  }

  RunResult finish() {
    const double secs = to_seconds(end_);
    FlowMetrics& agg = result_.aggregate;
    agg.flow_id = -1;
    agg.active = end_;
    agg.bin_width = config_.goodput_bin;
    for (auto& fp : flows_) {
      FlowMetrics& m = fp->metrics;
      const SenderStats& st = fp->sender.stats();
      m.active = std::max<TimeUs>(0, end_ - m.start);
      m.retransmissions = st.retransmissions;
      m.fast_retransmits = st.fast_retransmits;
      m.rto_retransmits = st.rto_retransmits;
      m.feedback_overhead_kbps =
          secs > 0 ? static_cast<double>(m.feedback_msgs * config_.netassist.feedback_size) *
                         8.0 / secs / 1000.0
                   : 0.0;
      m.finalize();
      result_.window_violations += fp->sender.window_violations();

      agg.delivered_bytes += m.delivered_bytes;
      agg.unique_bytes += m.unique_bytes;
      agg.qdelay_samples.insert(agg.qdelay_samples.end(), m.qdelay_samples.begin(),
                                m.qdelay_samples.end());
      agg.retransmissions += m.retransmissions;
      agg.fast_retransmits += m.fast_retransmits;
      agg.rto_retransmits += m.rto_retransmits;
      agg.drops += m.drops;
      agg.feedback_msgs += m.feedback_msgs;
      if (agg.goodput_bins.size() < m.goodput_bins.size())
        agg.goodput_bins.resize(m.goodput_bins.size(), 0);
      for (std::size_t b = 0; b < m.goodput_bins.size(); ++b) agg.goodput_bins[b] += m.goodput_bins[b];
    }
    // Feedback cost is per UE stream, so the aggregate reports the mean over
    // flows that received any.
    double overhead = 0.0;
    int receiving = 0;
    for (auto& fp : flows_) {
      if (fp->metrics.feedback_msgs == 0) continue;
      overhead += fp->metrics.feedback_overhead_kbps;
      ++receiving;
    }
    agg.feedback_overhead_kbps = receiving > 0 ? overhead / receiving : 0.0;
    agg.finalize();

    result_.idle_opportunities = link_.idle_opportunities();
    result_.air_losses = link_.air_losses();
    if (!link_.audit()) ++result_.audit_failures;
    for (auto& fp : flows_) result_.flows.push_back(std::move(fp->metrics));
    return std::move(result_);
  }

  const SimConfig& config_;
  TimeUs end_;
  TraceSchedule schedule_;
  Rng rng_;
  // Separate stream so probing never perturbs the loss draws.
  Rng probe_rng_;
  EventQueue queue_;
  PathModel path_;
  CellularLink link_;
  NetAssist netassist_;
  InBandChannel inband_;
  std::vector<UeReceiver> receivers_;
  std::vector<std::unique_ptr<FlowState>> flows_;
  std::vector<bool> flow_started_;
  bool uses_feedback_ = false;
  RunResult result_;
};

}  // namespace

RunResult run(const SimConfig& config) {
  config.validate();
  TraceSchedule schedule = config.load_schedule();
  schedule.validate();
  if (schedule.mtu != config.mtu) schedule.mtu = config.mtu;
  Simulation sim(config, std::move(schedule));
  return sim.run();
}

}  // namespace natsim
