#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "natsim/types.h"

namespace natsim {

// Delivery opportunities of the cellular downlink. Each opportunity lets the
// base station transmit one MTU-sized packet. The schedule replays cyclically:
// an opportunity at t in cycle 0 recurs at t + k * cycle for every k >= 0.
struct TraceSchedule {
  std::vector<TimeUs> opportunities;  // non-decreasing, within [0, cycle]
  TimeUs cycle = 0;
  Bytes mtu = kDefaultMtu;

  // Throws TraceError if the schedule cannot be replayed (zero-length cycle,
  // unsorted or out-of-range opportunities, non-positive MTU).
  void validate() const;

  // Opportunity count x MTU over one cycle, in bits/s.
  BitsPerSec long_run_rate() const;

  // Number of opportunities with absolute time in (from, to].
  std::int64_t count_between(TimeUs from, TimeUs to) const;
};

class TraceError : public std::runtime_error {
 public:
  explicit TraceError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}
  // 1-based input line for parse errors, 0 otherwise.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Parses the Mahimahi raw format: one non-negative integer millisecond per
// line, non-decreasing; blank lines and '#' comments are ignored. The cycle is
// the last timestamp unless `cycle_override_ms` is given.
TraceSchedule parse_trace(std::string_view text,
                          std::optional<std::int64_t> cycle_override_ms = {},
                          Bytes mtu = kDefaultMtu);

// Reads and parses a trace file. Throws InputFileError if it cannot be opened.
TraceSchedule load_trace(const std::string& path, Bytes mtu = kDefaultMtu);

// Writes the schedule in the Mahimahi format (millisecond resolution).
std::string render_trace(const TraceSchedule& schedule);

struct RateSegment {
  BitsPerSec rate = 0;
  std::int64_t hold_ms = 0;
};

// Synthetic schedules are millisecond-quantized like recorded traces: the k-th
// opportunity sits at the first millisecond by which k packets' worth of
// capacity has accrued, so several opportunities may share a timestamp.
TraceSchedule synth_constant(BitsPerSec rate, std::int64_t duration_ms,
                             Bytes mtu = kDefaultMtu);
TraceSchedule synth_step(std::span<const RateSegment> segments,
                         Bytes mtu = kDefaultMtu);

// Bounded multiplicative random walk: every `step_ms` the rate moves by a
// random factor in log space and reflects off [min_rate, max_rate].
std::vector<RateSegment> walk_segments(BitsPerSec min_rate, BitsPerSec max_rate,
                                       std::int64_t step_ms,
                                       std::int64_t duration_ms,
                                       std::uint64_t seed);
TraceSchedule synth_walk(BitsPerSec min_rate, BitsPerSec max_rate,
                         std::int64_t step_ms, std::int64_t duration_ms,
                         std::uint64_t seed, Bytes mtu = kDefaultMtu);

// Average offered capacity over (t_start, t_start + window], in bits/s.
BitsPerSec avg_rate(const TraceSchedule& schedule, TimeUs window,
                    TimeUs t_start);

// "12mbps", "1.2Mbps", "500kbps", "12e6" (bits/s). Throws ConfigError.
BitsPerSec parse_rate(std::string_view text);

// Resolves a trace argument: `const:<rate>`, `step:<rate>@<ms>,...`,
// `walk:<min>-<max>@<step_ms>[:<seed>]`, `file:<path>` or a bare path.
// Synthetic specs without an explicit length span `duration_ms`; a walk with
// no seed uses `default_seed`.
TraceSchedule make_trace(std::string_view spec, std::int64_t duration_ms,
                         std::uint64_t default_seed, Bytes mtu = kDefaultMtu);

// Walks the cyclic replay of a schedule in time order.
class TraceCursor {
 public:
  explicit TraceCursor(const TraceSchedule& schedule);

  // Time of the next opportunity; advances the cursor.
  TimeUs next();
  TimeUs peek() const;

 private:
  const TraceSchedule* schedule_;
  std::size_t index_ = 0;
  std::int64_t cycle_index_ = 0;
};

}  // namespace natsim
