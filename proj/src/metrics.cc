#include "natsim/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

namespace natsim {

std::optional<TimeUs> percentile(std::span<const TimeUs> samples, double q) {
  if (samples.empty()) return std::nullopt;
  std::vector<TimeUs> sorted(samples.begin(), samples.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(std::clamp(q, 0.0, 1.0) * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

Power compute_power(BitsPerSec throughput, double avg_qdelay_us, double p95_qdelay_us) {
  const double mbps = throughput / 1e6;
  auto ratio = [mbps](double delay_us) {
    if (delay_us <= 0.0) return std::numeric_limits<double>::infinity();
    return mbps / (delay_us / 1000.0);
  };
  return {ratio(avg_qdelay_us), ratio(p95_qdelay_us)};
}

void FlowMetrics::finalize() {
  const double secs = to_seconds(active);
  throughput = secs > 0 ? static_cast<double>(delivered_bytes) * 8.0 / secs : 0.0;
  goodput = secs > 0 ? static_cast<double>(unique_bytes) * 8.0 / secs : 0.0;
  avg_qdelay.reset();
  p95_qdelay.reset();
  power.reset();
  if (!qdelay_samples.empty()) {
    const long double sum =
        std::accumulate(qdelay_samples.begin(), qdelay_samples.end(), 0.0L);
    avg_qdelay = static_cast<double>(sum / static_cast<long double>(qdelay_samples.size()));
    p95_qdelay = percentile(qdelay_samples, 0.95);
    power = compute_power(throughput, *avg_qdelay, static_cast<double>(*p95_qdelay));
  }
}

BitsPerSec FlowMetrics::goodput_between(TimeUs from, TimeUs to) const {
  if (bin_width <= 0 || to <= from) return 0.0;
  const auto first = static_cast<std::size_t>(std::max<TimeUs>(0, from / bin_width));
  const auto last = static_cast<std::size_t>(std::max<TimeUs>(0, to / bin_width));
  Bytes bytes = 0;
  for (std::size_t i = first; i < last && i < goodput_bins.size(); ++i) bytes += goodput_bins[i];
  const TimeUs span = static_cast<TimeUs>(last - first) * bin_width;
  return span > 0 ? static_cast<double>(bytes) * 8.0 / to_seconds(span) : 0.0;
}

SummaryRow make_summary_row(std::string scheme, std::string trace, double duration_s,
                            const FlowMetrics& m) {
  SummaryRow row;
  row.scheme = std::move(scheme);
  row.trace = std::move(trace);
  row.duration_s = duration_s;
  row.throughput_mbps = m.throughput / 1e6;
  row.goodput_mbps = m.goodput / 1e6;
  if (m.avg_qdelay) row.avg_qdelay_ms = *m.avg_qdelay / 1000.0;
  if (m.p95_qdelay) row.p95_qdelay_ms = static_cast<double>(*m.p95_qdelay) / 1000.0;
  if (m.power) {
    row.power = m.power->power;
    row.power95 = m.power->power95;
  }
  row.retrans = m.retransmissions;
  row.drops = m.drops;
  row.feedback_overhead_kbps = m.feedback_overhead_kbps;
  return row;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string format_number(std::optional<double> v) {
  if (!v) return "";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  if (std::isnan(*v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

std::string summary_csv_header() {
  return "scheme,trace,duration_s,throughput_mbps,goodput_mbps,avg_qdelay_ms,"
         "p95_qdelay_ms,power,power95,retrans,drops,feedback_overhead_kbps";
}

std::string to_csv(const SummaryRow& r) {
  std::string out;
  out += csv_field(r.scheme) + ',' + csv_field(r.trace) + ',';
  out += format_number(r.duration_s) + ',';
  out += format_number(r.throughput_mbps) + ',';
  out += format_number(r.goodput_mbps) + ',';
  out += format_number(r.avg_qdelay_ms) + ',';
  out += format_number(r.p95_qdelay_ms) + ',';
  out += format_number(r.power) + ',';
  out += format_number(r.power95) + ',';
  out += std::to_string(r.retrans) + ',';
  out += std::to_string(r.drops) + ',';
  out += format_number(r.feedback_overhead_kbps);
  return out;
}

std::vector<NormalizedRow> normalize_to_reference(std::span<const SummaryRow> rows,
                                                  std::string_view reference_scheme) {
  std::map<std::string, const SummaryRow*> reference;
  for (const SummaryRow& r : rows)
    if (r.scheme == reference_scheme) reference[r.trace] = &r;

  auto ratio = [](std::optional<double> v, std::optional<double> ref) {
    if (!v || !ref) return std::numeric_limits<double>::quiet_NaN();
    return *v / *ref;
  };

  std::vector<NormalizedRow> out;
  for (const SummaryRow& r : rows) {
    auto ref_it = reference.find(r.trace);
    if (ref_it == reference.end())
      throw ConfigError("no '" + std::string(reference_scheme) + "' row for trace '" +
                        r.trace + "'");
    const SummaryRow& ref = *ref_it->second;
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const NormalizedRow& n) { return n.scheme == r.scheme; });
    if (it == out.end()) {
      out.push_back({r.scheme, 0, 0, 0, 0, 0, 0});
      it = out.end() - 1;
    }
    it->throughput += ratio(r.throughput_mbps, ref.throughput_mbps);
    it->avg_qdelay += ratio(r.avg_qdelay_ms, ref.avg_qdelay_ms);
    it->p95_qdelay += ratio(r.p95_qdelay_ms, ref.p95_qdelay_ms);
    it->power += ratio(r.power, ref.power);
    it->power95 += ratio(r.power95, ref.power95);
    ++it->traces;
  }
  for (NormalizedRow& n : out) {
    const double k = n.traces;
    n.throughput /= k;
    n.avg_qdelay /= k;
    n.p95_qdelay /= k;
    n.power /= k;
    n.power95 /= k;
  }
  return out;
}

std::string normalized_csv_header() {
  return "scheme,traces,throughput,avg_qdelay,p95_qdelay,power,power95";
}

std::string to_csv(const NormalizedRow& r) {
  return r.scheme + ',' + std::to_string(r.traces) + ',' + format_number(r.throughput) +
         ',' + format_number(r.avg_qdelay) + ',' + format_number(r.p95_qdelay) + ',' +
         format_number(r.power) + ',' + format_number(r.power95);
}

}  // namespace natsim
