#pragma once

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "natsim/engine.h"

namespace natsim {

struct OutputPaths {
  std::string dir;       // default directory for relative outputs
  std::string summary;   // summary CSV (appended)
  std::string events;    // optional event log
  std::string feedback;  // optional feedback log

  // Joins `file` onto `dir` unless it is absolute or `dir` is empty.
  std::string resolve(const std::string& file) const;
};

struct Settings {
  SimConfig sim;
  OutputPaths output;
  // Keys set by a config file or flag; presets leave these alone.
  std::set<std::string> pinned;
};

struct SettingKey {
  std::string_view name;
  std::string_view help;
};

// Every recognised key, in documentation order.
const std::vector<SettingKey>& setting_keys();

// Applies one `key = value` pair and pins the key. Throws ConfigError.
void apply_setting(Settings& s, std::string_view key, std::string_view value);

// Flat INI: `key = value` lines, '#' or ';' comments, optional `[section]`
// headers that prefix following keys with `section.`. Throws ConfigError.
std::vector<std::pair<std::string, std::string>> parse_ini(std::string_view text);

// Reads and applies a config file. Throws InputFileError if unreadable.
void apply_config_file(Settings& s, const std::string& path);

// "0@0,5@0" -> flows starting at 0 s and 5 s on UE 0.
std::vector<FlowSpec> parse_flows(std::string_view text);

bool parse_bool(std::string_view text);

}  // namespace natsim
