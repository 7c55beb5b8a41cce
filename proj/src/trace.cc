#include "natsim/trace.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace natsim {

namespace {

constexpr double kEpsilon = 1e-9;
// Largest per-step log-rate move as a fraction of the walk's log range.
constexpr double kWalkStepFraction = 0.35;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r' || s.front() == '\n'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::int64_t parse_ms(std::string_view text) {
  std::string t = lower(trim(text));
  if (t.size() > 2 && t.ends_with("ms")) t.resize(t.size() - 2);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || value < 0)
    throw ConfigError("invalid millisecond value '" + std::string(text) + "'");
  return value;
}

// Appends millisecond-quantized opportunities for one constant-rate stretch.
// `carry_bits` is capacity accrued but not yet spent on a whole packet.
void append_segment(std::vector<TimeUs>& out, std::int64_t start_ms,
                    const RateSegment& seg, Bytes mtu, double& carry_bits) {
  if (seg.rate < 0.0 || !std::isfinite(seg.rate))
    throw TraceError("segment rate must be finite and >= 0");
  if (seg.hold_ms < 0) throw TraceError("segment hold must be >= 0");
  if (seg.rate == 0.0 || seg.hold_ms == 0) return;
  const double packet_bits = static_cast<double>(mtu) * 8.0;
  const double bits_per_ms = seg.rate / 1000.0;
  std::int64_t emitted = 0;
  for (std::int64_t k = 1;; ++k) {
    double need = static_cast<double>(k) * packet_bits - carry_bits;
    auto at = static_cast<std::int64_t>(std::ceil(need / bits_per_ms - kEpsilon));
    at = std::max<std::int64_t>(at, 0);
    if (at > seg.hold_ms) break;
    out.push_back((start_ms + at) * kUsPerMs);
    ++emitted;
  }
  carry_bits += bits_per_ms * static_cast<double>(seg.hold_ms) -
                static_cast<double>(emitted) * packet_bits;
  if (carry_bits < 0.0) carry_bits = 0.0;
}

}  // namespace

void TraceSchedule::validate() const {
  if (mtu <= 0) throw TraceError("mtu must be positive");
  if (cycle <= 0) throw TraceError("zero-length cycle");
  for (std::size_t i = 0; i < opportunities.size(); ++i) {
    if (opportunities[i] < 0 || opportunities[i] > cycle)
      throw TraceError("opportunity outside [0, cycle]");
    if (i > 0 && opportunities[i] < opportunities[i - 1])
      throw TraceError("opportunities not sorted");
  }
}

BitsPerSec TraceSchedule::long_run_rate() const {
  if (cycle <= 0) return 0.0;
  return static_cast<double>(opportunities.size()) *
         static_cast<double>(mtu) * 8.0 / to_seconds(cycle);
}

std::int64_t TraceSchedule::count_between(TimeUs from, TimeUs to) const {
  auto upto = [this](TimeUs x) -> std::int64_t {
    if (x < 0 || cycle <= 0) return 0;
    const std::int64_t full = x / cycle;
    const TimeUs rem = x - full * cycle;
    auto partial = std::upper_bound(opportunities.begin(), opportunities.end(), rem) -
                   opportunities.begin();
    return full * static_cast<std::int64_t>(opportunities.size()) + partial;
  };
  if (to <= from) return 0;
  return upto(to) - upto(from);
}

TraceSchedule parse_trace(std::string_view text,
                          std::optional<std::int64_t> cycle_override_ms,
                          Bytes mtu) {
  TraceSchedule schedule;
  schedule.mtu = mtu;
  std::size_t line_no = 0;
  std::int64_t last = -1;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    std::int64_t ms = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), ms);
    if (ec != std::errc() || ptr != line.data() + line.size() || ms < 0)
      throw TraceError("line " + std::to_string(line_no) +
                           ": expected a non-negative integer millisecond, got '" +
                           std::string(line) + "'",
                       line_no);
    if (ms < last)
      throw TraceError("line " + std::to_string(line_no) +
                           ": timestamp decreases (" + std::to_string(ms) +
                           " after " + std::to_string(last) + ")",
                       line_no);
    last = ms;
    schedule.opportunities.push_back(ms * kUsPerMs);
  }
  if (schedule.opportunities.empty()) throw TraceError("empty trace");
  if (cycle_override_ms) {
    if (*cycle_override_ms * kUsPerMs < schedule.opportunities.back())
      throw TraceError("cycle override shorter than last timestamp");
    schedule.cycle = *cycle_override_ms * kUsPerMs;
  } else {
    schedule.cycle = schedule.opportunities.back();
  }
  if (schedule.cycle <= 0)
    throw TraceError("zero-length cycle; a cycle override is required");
  return schedule;
}

TraceSchedule load_trace(const std::string& path, Bytes mtu) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputFileError("cannot open trace file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str(), std::nullopt, mtu);
}

std::string render_trace(const TraceSchedule& schedule) {
  std::string out;
  out.reserve(schedule.opportunities.size() * 6);
  for (TimeUs t : schedule.opportunities) {
    out += std::to_string(t / kUsPerMs);
    out += '\n';
  }
  return out;
}

TraceSchedule synth_constant(BitsPerSec rate, std::int64_t duration_ms, Bytes mtu) {
  if (!(rate > 0.0)) throw TraceError("rate must be positive");
  const RateSegment seg{rate, duration_ms};
  return synth_step(std::span<const RateSegment>(&seg, 1), mtu);
}

TraceSchedule synth_step(std::span<const RateSegment> segments, Bytes mtu) {
  if (segments.empty()) throw TraceError("step trace needs at least one segment");
  TraceSchedule schedule;
  schedule.mtu = mtu;
  double carry = 0.0;
  std::int64_t start_ms = 0;
  for (const RateSegment& seg : segments) {
    append_segment(schedule.opportunities, start_ms, seg, mtu, carry);
    start_ms += seg.hold_ms;
  }
  schedule.cycle = start_ms * kUsPerMs;
  return schedule;
}

std::vector<RateSegment> walk_segments(BitsPerSec min_rate, BitsPerSec max_rate,
                                       std::int64_t step_ms,
                                       std::int64_t duration_ms,
                                       std::uint64_t seed) {
  if (!(min_rate > 0.0) || !(max_rate >= min_rate))
    throw TraceError("walk needs 0 < min <= max");
  if (step_ms <= 0) throw TraceError("walk step must be positive");
  Rng rng(seed);
  const double lo = std::log(min_rate);
  const double hi = std::log(max_rate);
  const double max_move = kWalkStepFraction * (hi - lo);
  double x = rng.uniform(lo, hi);
  std::vector<RateSegment> segments;
  for (std::int64_t t = 0; t < duration_ms; t += step_ms) {
    segments.push_back({std::exp(x), std::min(step_ms, duration_ms - t)});
    x += rng.uniform(-max_move, max_move);
    if (x > hi) x = 2 * hi - x;
    if (x < lo) x = 2 * lo - x;
    x = std::clamp(x, lo, hi);
  }
  return segments;
}

TraceSchedule synth_walk(BitsPerSec min_rate, BitsPerSec max_rate,
                         std::int64_t step_ms, std::int64_t duration_ms,
                         std::uint64_t seed, Bytes mtu) {
  auto segments = walk_segments(min_rate, max_rate, step_ms, duration_ms, seed);
  if (segments.empty()) {
    TraceSchedule empty;
    empty.mtu = mtu;
    return empty;
  }
  return synth_step(segments, mtu);
}

BitsPerSec avg_rate(const TraceSchedule& schedule, TimeUs window, TimeUs t_start) {
  if (window <= 0) throw TraceError("window must be positive");
  const auto n = schedule.count_between(t_start, t_start + window);
  return static_cast<double>(n) * static_cast<double>(schedule.mtu) * 8.0 /
         to_seconds(window);
}

BitsPerSec parse_rate(std::string_view text) {
  std::string t = lower(trim(text));
  double scale = 1.0;
  auto strip = [&t](std::string_view suffix) {
    if (t.size() > suffix.size() && t.ends_with(suffix)) {
      t.resize(t.size() - suffix.size());
      return true;
    }
    return false;
  };
  if (strip("gbps") || strip("g")) scale = 1e9;
  else if (strip("mbps") || strip("m")) scale = 1e6;
  else if (strip("kbps") || strip("k")) scale = 1e3;
  else strip("bps");
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value) ||
      value < 0.0)
    throw ConfigError("invalid rate '" + std::string(text) + "'");
  return value * scale;
}

TraceSchedule make_trace(std::string_view spec, std::int64_t duration_ms,
                         std::uint64_t default_seed, Bytes mtu) {
  spec = trim(spec);
  if (starts_with(spec, "const:")) {
    return synth_constant(parse_rate(spec.substr(6)), duration_ms, mtu);
  }
  if (starts_with(spec, "step:")) {
    std::vector<RateSegment> segments;
    std::string_view rest = spec.substr(5);
    while (!rest.empty()) {
      auto comma = rest.find(',');
      std::string_view item = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{}
                                             : rest.substr(comma + 1);
      auto at = item.find('@');
      if (at == std::string_view::npos)
        throw ConfigError("step segment '" + std::string(item) +
                          "' must be <rate>@<ms>");
      segments.push_back({parse_rate(item.substr(0, at)), parse_ms(item.substr(at + 1))});
    }
    if (segments.empty()) throw ConfigError("step trace needs at least one segment");
    return synth_step(segments, mtu);
  }
  if (starts_with(spec, "walk:")) {
    // walk:<min>-<max>@<step_ms>[:<seed>]
    std::string_view body = spec.substr(5);
    auto dash = body.find('-');
    auto at = body.find('@');
    if (dash == std::string_view::npos || at == std::string_view::npos || at < dash)
      throw ConfigError("walk trace must be walk:<min>-<max>@<step_ms>[:<seed>]");
    auto colon = body.find(':', at);
    std::uint64_t seed = default_seed;
    std::string_view step = body.substr(at + 1, colon == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : colon - at - 1);
    if (colon != std::string_view::npos) {
      std::string_view s = body.substr(colon + 1);
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError("invalid walk seed '" + std::string(s) + "'");
    }
    return synth_walk(parse_rate(body.substr(0, dash)),
                      parse_rate(body.substr(dash + 1, at - dash - 1)),
                      parse_ms(step), duration_ms, seed, mtu);
  }
  if (starts_with(spec, "file:")) return load_trace(std::string(spec.substr(5)), mtu);
  if (spec.find(':') != std::string_view::npos && spec.find('/') == std::string_view::npos &&
      spec.find('.') == std::string_view::npos)
    throw ConfigError("unknown trace kind '" + std::string(spec) + "'");
  return load_trace(std::string(spec), mtu);
}

TraceCursor::TraceCursor(const TraceSchedule& schedule) : schedule_(&schedule) {}

TimeUs TraceCursor::peek() const {
  if (schedule_->opportunities.empty() || schedule_->cycle <= 0)
    return std::numeric_limits<TimeUs>::max();
  return schedule_->opportunities[index_] + cycle_index_ * schedule_->cycle;
}

TimeUs TraceCursor::next() {
  TimeUs t = peek();
  if (t == std::numeric_limits<TimeUs>::max()) return t;
  if (++index_ == schedule_->opportunities.size()) {
    index_ = 0;
    ++cycle_index_;
  }
  return t;
}

}  // namespace natsim
