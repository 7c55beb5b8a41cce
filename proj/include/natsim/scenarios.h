#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "natsim/engine.h"
#include "natsim/metrics.h"

namespace natsim {

// Runs `jobs` on up to `threads` workers; results keep job order. The first
// failing job (in job order) has its exception rethrown.
template <typename T>
std::vector<T> run_parallel(const std::vector<std::function<T()>>& jobs, int threads);

unsigned default_threads();

// Label used in summary rows for a config's trace.
std::string trace_label(const SimConfig& config);

SummaryRow summarize(const SimConfig& config, const RunResult& result);

// One engine run, summarized.
SummaryRow run_single(const SimConfig& config, RunResult* full = nullptr);

struct SingleFlowReport {
  std::vector<SummaryRow> raw;  // ordered by (scheme, trace)
  std::vector<NormalizedRow> normalized;
};

// Every scheme on every trace, normalized to NATCP when it is among the
// schemes (otherwise to the first scheme).
SingleFlowReport scenario_single_flow(const SimConfig& base, const std::vector<std::string>& traces,
                                      const std::vector<Scheme>& schemes, int threads = 0);

struct FairnessRow {
  std::string scheme;
  TimeUs overlap_start = 0;
  std::vector<double> flow_goodput_mbps;  // over the overlap interval
  double aggregate_goodput_mbps = 0.0;
  std::optional<double> p95_qdelay_ms;    // shared queue
  std::int64_t retransmissions = 0;
  std::int64_t drops = 0;
};

// Two flows to UE 0, the second starting at a quarter of the run, unless
// `flows` is pinned.
SimConfig fairness_config(const SimConfig& base, const std::set<std::string>& pinned);
FairnessRow summarize_fairness(const SimConfig& config, const RunResult& result);
std::vector<FairnessRow> scenario_fairness(const SimConfig& base, const std::vector<Scheme>& schemes,
                                           const std::set<std::string>& pinned = {},
                                           int threads = 0);
std::string fairness_csv_header();
std::string to_csv(const FairnessRow& row);

struct FeedbackModeCell {
  std::string label;  // e.g. "natcp(oob)"
  Scheme scheme = Scheme::kNatcp;
  FeedbackMode mode = FeedbackMode::kOob;
  SummaryRow row;
  double normalized_power95 = 0.0;  // relative to tg(ib)
};

// TG and NATCP under in-band and out-of-band feedback with a 10 ms period
// unless the period is pinned. Cells: tg(ib), tg(oob), natcp(ib), natcp(oob).
std::vector<FeedbackModeCell> scenario_feedback_modes(const SimConfig& base,
                                                      const std::set<std::string>& pinned = {},
                                                      int threads = 0);
std::string feedback_modes_csv_header();
std::string to_csv(const FeedbackModeCell& cell);

struct PeriodPoint {
  TimeUs period = 0;
  SummaryRow row;
};

std::vector<TimeUs> default_sweep_periods();
std::vector<PeriodPoint> scenario_period_sweep(const SimConfig& base,
                                               const std::vector<TimeUs>& periods,
                                               int threads = 0);
std::string period_sweep_csv_header();
std::string to_csv(const PeriodPoint& point);

}  // namespace natsim

#include "natsim/detail/parallel.h"
