#include "natsim/config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace natsim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::int64_t parse_int(std::string_view key, std::string_view text) {
  text = trim(text);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
  return v;
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string s(trim(text));
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v))
    throw ConfigError(std::string(key) + ": expected a number, got '" + s + "'");
  return v;
}

BitsPerSec parse_rate_key(std::string_view key, std::string_view text) {
  try {
    return parse_rate(trim(text));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

using Setter = std::function<void(Settings&, std::string_view key, std::string_view value)>;

struct KeyDef {
  SettingKey key;
  Setter set;
};

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      {{"scheme", "natcp, nacubic, cubic or tg"},
       [](Settings& s, auto, auto v) { s.sim.scheme = parse_scheme(trim(v)); }},
      {{"trace", "trace file or synthetic spec (const:, step:, walk:)"},
       [](Settings& s, auto k, auto v) {
         if (trim(v).empty()) throw ConfigError(std::string(k) + ": empty");
         s.sim.trace = std::string(trim(v));
         s.sim.schedule.reset();
       }},
      {{"duration_s", "simulated seconds"},
       [](Settings& s, auto k, auto v) { s.sim.duration_s = parse_double(k, v); }},
      {{"seed", "random seed (non-zero)"},
       [](Settings& s, auto k, auto v) {
         const auto n = parse_int(k, v);
         if (n <= 0) throw ConfigError(std::string(k) + ": must be positive");
         s.sim.seed = static_cast<std::uint64_t>(n);
       }},
      {{"mtu", "packet size in bytes"},
       [](Settings& s, auto k, auto v) { s.sim.mtu = parse_int(k, v); }},
      {{"buffer_bytes", "per-UE base station buffer"},
       [](Settings& s, auto k, auto v) { s.sim.buffer_bytes = parse_int(k, v); }},
      {{"alpha", "window scaling factor"},
       [](Settings& s, auto k, auto v) { s.sim.cc.alpha = parse_double(k, v); }},
      {{"flows", "comma list of start_s@ue"},
       [](Settings& s, auto, auto v) { s.sim.flows = parse_flows(v); }},
      {{"goodput_bin_us", "goodput time-series bin width"},
       [](Settings& s, auto k, auto v) { s.sim.goodput_bin = parse_int(k, v); }},
      {{"feedback.enabled", "deliver feedback to servers"},
       [](Settings& s, auto, auto v) { s.sim.feedback_enabled = parse_bool(v); }},
      {{"feedback.period_us", "feedback period"},
       [](Settings& s, auto k, auto v) { s.sim.netassist.period = parse_int(k, v); }},
      {{"feedback.mode", "oob or ib"},
       [](Settings& s, auto, auto v) { s.sim.netassist.mode = parse_feedback_mode(trim(v)); }},
      {{"feedback.oob_delay_us", "control channel delay"},
       [](Settings& s, auto k, auto v) { s.sim.path.oob_delay = parse_int(k, v); }},
      {{"feedback.size_bytes", "feedback message size"},
       [](Settings& s, auto k, auto v) { s.sim.netassist.feedback_size = parse_int(k, v); }},
      {{"feedback.probe_interval_us", "network RTT probe interval"},
       [](Settings& s, auto k, auto v) { s.sim.netassist.probe_interval = parse_int(k, v); }},
      {{"feedback.cutoff_us", "stop dispatching feedback at this time"},
       [](Settings& s, auto k, auto v) { s.sim.feedback_cutoff = parse_int(k, v); }},
      {{"feedback.watchdog_us", "revert after this long without feedback"},
       [](Settings& s, auto k, auto v) { s.sim.watchdog_timeout = parse_int(k, v); }},
      {{"path.net_min_owd_us", "server to base station delay"},
       [](Settings& s, auto k, auto v) { s.sim.path.net_min_owd = parse_int(k, v); }},
      {{"path.uplink_owd_us", "base station to server delay"},
       [](Settings& s, auto k, auto v) { s.sim.path.uplink_owd = parse_int(k, v); }},
      {{"path.uplink_rate", "uplink rate for acks (0 = ideal)"},
       [](Settings& s, auto k, auto v) {
         s.sim.path.uplink_rate = trim(v) == "0" ? 0.0 : parse_rate_key(k, v);
       }},
      {{"path.radio_delay_us", "base station to UE delay"},
       [](Settings& s, auto k, auto v) { s.sim.path.radio_delay = parse_int(k, v); }},
      {{"path.probe_jitter_us", "probe RTT jitter"},
       [](Settings& s, auto k, auto v) { s.sim.path.probe_jitter = parse_int(k, v); }},
      {{"path.loss", "air-interface loss probability"},
       [](Settings& s, auto k, auto v) { s.sim.path.loss_prob = parse_double(k, v); }},
      {{"cc.cwnd_floor_bytes", "minimum window"},
       [](Settings& s, auto k, auto v) { s.sim.cc.cwnd_floor = parse_int(k, v); }},
      {{"cc.initial_cwnd_bytes", "initial window"},
       [](Settings& s, auto k, auto v) { s.sim.cc.initial_cwnd = parse_int(k, v); }},
      {{"cc.pacing_floor", "minimum pacing rate"},
       [](Settings& s, auto k, auto v) { s.sim.cc.pacing_floor = parse_rate_key(k, v); }},
      {{"cc.pace_by_beta", "divide the pacing rate by beta"},
       [](Settings& s, auto, auto v) { s.sim.cc.divide_pacing_by_beta = parse_bool(v); }},
      {{"cc.rtt_horizon_us", "min-RTT filter horizon (tg)"},
       [](Settings& s, auto k, auto v) { s.sim.cc.rtt_horizon = parse_int(k, v); }},
      {{"output.dir", "directory for relative output paths"},
       [](Settings& s, auto, auto v) { s.output.dir = std::string(trim(v)); }},
      {{"output.summary", "summary CSV (appended)"},
       [](Settings& s, auto, auto v) { s.output.summary = std::string(trim(v)); }},
      {{"output.events", "event log CSV"},
       [](Settings& s, auto, auto v) { s.output.events = std::string(trim(v)); }},
      {{"output.feedback", "feedback log CSV"},
       [](Settings& s, auto, auto v) { s.output.feedback = std::string(trim(v)); }},
  };
  return defs;
}

}  // namespace

std::string OutputPaths::resolve(const std::string& file) const {
  if (file.empty() || dir.empty() || std::filesystem::path(file).is_absolute()) return file;
  return (std::filesystem::path(dir) / file).string();
}

const std::vector<SettingKey>& setting_keys() {
  static const std::vector<SettingKey> keys = [] {
    std::vector<SettingKey> out;
    for (const KeyDef& d : key_defs()) out.push_back(d.key);
    return out;
  }();
  return keys;
}

void apply_setting(Settings& s, std::string_view key, std::string_view value) {
  key = trim(key);
  for (const KeyDef& d : key_defs()) {
    if (d.key.name != key) continue;
    d.set(s, key, value);
    s.pinned.insert(std::string(key));
    return;
  }
  throw ConfigError("unknown key '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> parse_ini(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string section;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    out.emplace_back(std::move(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

void apply_config_file(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputFileError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  for (const auto& [k, v] : parse_ini(buf.str())) {
    try {
      apply_setting(s, k, v);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
}

std::vector<FlowSpec> parse_flows(std::string_view text) {
  std::vector<FlowSpec> flows;
  text = trim(text);
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = trim(text.substr(0, comma));
    text.remove_prefix(comma == std::string_view::npos ? text.size() : comma + 1);
    FlowSpec f;
    const auto at = item.find('@');
    f.start_s = parse_double("flows", item.substr(0, at));
    if (at != std::string_view::npos)
      f.ue_id = static_cast<int>(parse_int("flows", item.substr(at + 1)));
    flows.push_back(f);
  }
  if (flows.empty()) throw ConfigError("flows: empty list");
  return flows;
}

bool parse_bool(std::string_view text) {
  const std::string v = lower(trim(text));
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("expected a boolean, got '" + std::string(trim(text)) + "'");
}

}  // namespace natsim
