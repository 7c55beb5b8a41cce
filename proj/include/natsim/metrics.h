#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "natsim/types.h"

namespace natsim {

// Nearest-rank percentile: sorted[ceil(q * n)] (1-indexed), q in [0, 1].
// Empty input yields nullopt.
std::optional<TimeUs> percentile(std::span<const TimeUs> samples, double q);

// Throughput over delay in Mbit/s per ms. A zero delay gives infinity.
struct Power {
  double power = 0.0;
  double power95 = 0.0;
};
Power compute_power(BitsPerSec throughput, double avg_qdelay_us, double p95_qdelay_us);

struct FlowMetrics {
  int flow_id = -1;  // -1 for the run aggregate
  int ue_id = 0;
  TimeUs start = 0;
  TimeUs active = 0;  // measured duration
  Bytes delivered_bytes = 0;
  Bytes unique_bytes = 0;
  BitsPerSec throughput = 0.0;
  BitsPerSec goodput = 0.0;
  std::vector<TimeUs> qdelay_samples;
  std::optional<double> avg_qdelay;  // us
  std::optional<TimeUs> p95_qdelay;  // us
  std::optional<Power> power;
  std::int64_t retransmissions = 0;
  std::int64_t fast_retransmits = 0;
  std::int64_t rto_retransmits = 0;
  std::int64_t drops = 0;
  std::int64_t feedback_msgs = 0;
  double feedback_overhead_kbps = 0.0;
  // Unique bytes delivered per fixed-width bin, starting at t = 0.
  TimeUs bin_width = 0;
  std::vector<Bytes> goodput_bins;

  // Fills throughput, goodput, delay statistics and power.
  void finalize();

  // Unique-byte rate over [from, to), using whole bins.
  BitsPerSec goodput_between(TimeUs from, TimeUs to) const;
};

// One line of the summary CSV.
struct SummaryRow {
  std::string scheme;
  std::string trace;
  double duration_s = 0.0;
  double throughput_mbps = 0.0;
  double goodput_mbps = 0.0;
  std::optional<double> avg_qdelay_ms;
  std::optional<double> p95_qdelay_ms;
  std::optional<double> power;
  std::optional<double> power95;
  std::int64_t retrans = 0;
  std::int64_t drops = 0;
  double feedback_overhead_kbps = 0.0;
};

SummaryRow make_summary_row(std::string scheme, std::string trace, double duration_s,
                            const FlowMetrics& m);

std::string summary_csv_header();
std::string to_csv(const SummaryRow& row);

// Fixed-precision rendering used by every CSV writer: empty when absent,
// "inf" for infinity.
std::string format_number(std::optional<double> v);

// Quotes a text field if it holds a comma, quote or newline.
std::string csv_field(std::string_view text);

// Per-scheme metrics divided by the reference scheme's value on the same
// trace, then averaged over traces.
struct NormalizedRow {
  std::string scheme;
  double throughput = 0.0;
  double avg_qdelay = 0.0;
  double p95_qdelay = 0.0;
  double power = 0.0;
  double power95 = 0.0;
  int traces = 0;
};

// Throws ConfigError if some trace lacks a reference row. Schemes keep their
// order of first appearance.
std::vector<NormalizedRow> normalize_to_reference(std::span<const SummaryRow> rows,
                                                  std::string_view reference_scheme);

std::string normalized_csv_header();
std::string to_csv(const NormalizedRow& row);

}  // namespace natsim
