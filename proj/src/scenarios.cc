#include "natsim/scenarios.h"

#include <algorithm>
#include <thread>

namespace natsim {

namespace {

int resolve_threads(int threads) {
  return threads > 0 ? threads : static_cast<int>(default_threads());
}

std::string mbps(double v) { return format_number(v); }

}  // namespace

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string trace_label(const SimConfig& config) {
  return config.schedule ? std::string("custom") : config.trace;
}

SummaryRow summarize(const SimConfig& config, const RunResult& result) {
  return make_summary_row(std::string(to_string(config.scheme)), trace_label(config),
                          config.duration_s, result.aggregate);
}

SummaryRow run_single(const SimConfig& config, RunResult* full) {
  RunResult r = run(config);
  SummaryRow row = summarize(config, r);
  if (full) *full = std::move(r);
  return row;
}

SingleFlowReport scenario_single_flow(const SimConfig& base, const std::vector<std::string>& traces,
                                      const std::vector<Scheme>& schemes, int threads) {
  if (traces.empty() || schemes.empty()) throw ConfigError("need at least one trace and scheme");
  std::vector<std::function<SummaryRow()>> jobs;
  for (Scheme scheme : schemes) {
    for (const std::string& trace : traces) {
      SimConfig c = base;
      c.scheme = scheme;
      c.trace = trace;
      c.schedule.reset();
      c.validate();
      jobs.emplace_back([c] { return run_single(c); });
    }
  }
  SingleFlowReport report;
  report.raw = run_parallel(jobs, resolve_threads(threads));
  const bool has_natcp = std::find(schemes.begin(), schemes.end(), Scheme::kNatcp) != schemes.end();
  const Scheme reference = has_natcp ? Scheme::kNatcp : schemes.front();
  report.normalized = normalize_to_reference(report.raw, to_string(reference));
  return report;
}

SimConfig fairness_config(const SimConfig& base, const std::set<std::string>& pinned) {
  SimConfig c = base;
  if (!pinned.count("flows")) c.flows = {FlowSpec{0.0, 0}, FlowSpec{base.duration_s / 4.0, 0}};
  return c;
}

FairnessRow summarize_fairness(const SimConfig& config, const RunResult& result) {
  FairnessRow row;
  row.scheme = std::string(to_string(config.scheme));
  TimeUs overlap = 0;
  for (const FlowMetrics& m : result.flows) overlap = std::max(overlap, m.start);
  row.overlap_start = overlap;
  const TimeUs end = config.duration_us();
  for (const FlowMetrics& m : result.flows) {
    const double g = m.goodput_between(overlap, end) / 1e6;
    row.flow_goodput_mbps.push_back(g);
    row.aggregate_goodput_mbps += g;
  }
  if (result.aggregate.p95_qdelay)
    row.p95_qdelay_ms = static_cast<double>(*result.aggregate.p95_qdelay) / 1000.0;
  row.retransmissions = result.aggregate.retransmissions;
  row.drops = result.aggregate.drops;
  return row;
}

std::vector<FairnessRow> scenario_fairness(const SimConfig& base, const std::vector<Scheme>& schemes,
                                           const std::set<std::string>& pinned, int threads) {
  std::vector<std::function<FairnessRow()>> jobs;
  for (Scheme scheme : schemes) {
    SimConfig c = fairness_config(base, pinned);
    c.scheme = scheme;
    c.validate();
    jobs.emplace_back([c] { return summarize_fairness(c, run(c)); });
  }
  return run_parallel(jobs, resolve_threads(threads));
}

std::string fairness_csv_header() {
  return "scheme,overlap_start_s,flow_goodputs_mbps,aggregate_goodput_mbps,p95_qdelay_ms,"
         "retrans,drops";
}

std::string to_csv(const FairnessRow& r) {
  std::string goodputs;
  for (std::size_t i = 0; i < r.flow_goodput_mbps.size(); ++i) {
    if (i) goodputs += ';';
    goodputs += mbps(r.flow_goodput_mbps[i]);
  }
  return r.scheme + ',' + format_number(to_seconds(r.overlap_start)) + ',' + goodputs + ',' +
         mbps(r.aggregate_goodput_mbps) + ',' + format_number(r.p95_qdelay_ms) + ',' +
         std::to_string(r.retransmissions) + ',' + std::to_string(r.drops);
}

std::vector<FeedbackModeCell> scenario_feedback_modes(const SimConfig& base,
                                                      const std::set<std::string>& pinned,
                                                      int threads) {
  struct Cell {
    Scheme scheme;
    FeedbackMode mode;
  };
  const Cell cells[] = {{Scheme::kTg, FeedbackMode::kIb},
                        {Scheme::kTg, FeedbackMode::kOob},
                        {Scheme::kNatcp, FeedbackMode::kIb},
                        {Scheme::kNatcp, FeedbackMode::kOob}};
  std::vector<std::function<SummaryRow()>> jobs;
  std::vector<FeedbackModeCell> out;
  for (const Cell& cell : cells) {
    SimConfig c = base;
    c.scheme = cell.scheme;
    c.netassist.mode = cell.mode;
    if (!pinned.count("feedback.period_us")) c.netassist.period = 10'000;
    c.validate();
    jobs.emplace_back([c] { return run_single(c); });
    FeedbackModeCell fc;
    fc.scheme = cell.scheme;
    fc.mode = cell.mode;
    fc.label = std::string(to_string(cell.scheme)) + "(" + std::string(to_string(cell.mode)) + ")";
    out.push_back(std::move(fc));
  }
  std::vector<SummaryRow> rows = run_parallel(jobs, resolve_threads(threads));
  const std::optional<double> ref = rows.front().power95;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].row = std::move(rows[i]);
    out[i].normalized_power95 = (ref && out[i].row.power95)
                                    ? *out[i].row.power95 / *ref
                                    : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::string feedback_modes_csv_header() {
  return "cell,scheme,mode,throughput_mbps,p95_qdelay_ms,power95,normalized_power95";
}

std::string to_csv(const FeedbackModeCell& c) {
  return c.label + ',' + std::string(to_string(c.scheme)) + ',' +
         std::string(to_string(c.mode)) + ',' + mbps(c.row.throughput_mbps) + ',' +
         format_number(c.row.p95_qdelay_ms) + ',' + format_number(c.row.power95) + ',' +
         format_number(c.normalized_power95);
}

std::vector<TimeUs> default_sweep_periods() {
  return {5'000, 10'000, 25'000, 50'000, 100'000, 250'000, 500'000};
}

std::vector<PeriodPoint> scenario_period_sweep(const SimConfig& base,
                                               const std::vector<TimeUs>& periods, int threads) {
  if (periods.empty()) throw ConfigError("period sweep needs at least one period");
  std::vector<std::function<SummaryRow()>> jobs;
  for (TimeUs period : periods) {
    SimConfig c = base;
    c.scheme = Scheme::kNatcp;
    c.netassist.period = period;
    c.validate();
    jobs.emplace_back([c] { return run_single(c); });
  }
  std::vector<SummaryRow> rows = run_parallel(jobs, resolve_threads(threads));
  std::vector<PeriodPoint> out;
  for (std::size_t i = 0; i < periods.size(); ++i) out.push_back({periods[i], std::move(rows[i])});
  return out;
}

std::string period_sweep_csv_header() {
  return "period_ms,throughput_mbps,avg_qdelay_ms,p95_qdelay_ms,power,power95";
}

std::string to_csv(const PeriodPoint& p) {
  return format_number(to_ms(p.period)) + ',' + mbps(p.row.throughput_mbps) + ',' +
         format_number(p.row.avg_qdelay_ms) + ',' + format_number(p.row.p95_qdelay_ms) + ',' +
         format_number(p.row.power) + ',' + format_number(p.row.power95);
}

}  // namespace natsim
