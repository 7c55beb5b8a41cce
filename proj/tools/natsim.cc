// natsim: command-line runner for the network-assisted congestion control
// simulator.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "natsim/config.h"
#include "natsim/engine.h"
#include "natsim/scenarios.h"
#include "natsim/trace.h"

namespace {

using namespace natsim;

enum Exit { kOk = 0, kRuntime = 1, kUsage = 2, kMissingFile = 3 };

// Per-subcommand setting flags; values are applied after the config file.
struct KeyFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::vector<std::string> order;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "INI config file")->check(CLI::ExistingFile);
    for (const SettingKey& k : setting_keys()) {
      const std::string name(k.name);
      app->add_option_function<std::string>(
          "--" + name, [this, name](const std::string& v) { set(name, v); }, std::string(k.help));
    }
    app->add_option_function<std::string>(
        "--duration", [this](const std::string& v) { set("duration_s", v); },
        "alias for --duration_s");
    app->add_option_function<std::string>(
        "--loss", [this](const std::string& v) { set("path.loss", v); }, "alias for --path.loss");
  }

  void set(const std::string& key, const std::string& value) {
    if (!values.count(key)) order.push_back(key);
    values[key] = value;
  }

  Settings resolve() const {
    Settings s;
    if (const char* dir = std::getenv("NATSIM_OUTPUT_DIR")) s.output.dir = dir;
    if (!config_file.empty()) apply_config_file(s, config_file);
    for (const std::string& k : order) apply_setting(s, k, values.at(k));
    s.sim.validate();
    return s;
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text + ",") {
    if (c == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (c != ' ') {
      item += c;
    }
  }
  return out;
}

std::vector<Scheme> parse_schemes(const std::string& text) {
  std::vector<Scheme> out;
  for (const std::string& s : split_list(text)) out.push_back(parse_scheme(s));
  if (out.empty()) throw ConfigError("empty scheme list");
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

void append_summary(const std::string& path, const std::vector<SummaryRow>& rows) {
  if (path.empty()) return;
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const bool fresh = !std::filesystem::exists(p) || std::filesystem::file_size(p) == 0;
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  if (fresh) out << summary_csv_header() << '\n';
  for (const SummaryRow& r : rows) out << to_csv(r) << '\n';
}

// Writes `text` to dir/name when an output directory is configured.
void emit_table(const Settings& s, const std::string& name, const std::string& text) {
  std::cout << text;
  if (!s.output.dir.empty()) write_file(s.output.resolve(name), text);
}

std::string opt(std::optional<double> v, const char* unit) {
  return v ? format_number(*v) + unit : std::string("n/a");
}

int cmd_run(const KeyFlags& flags) {
  Settings s = flags.resolve();
  s.sim.record_events = !s.output.events.empty();
  s.sim.record_feedback = !s.output.feedback.empty();
  RunResult result;
  const SummaryRow row = run_single(s.sim, &result);

  std::string summary = s.output.summary;
  if (summary.empty() && !s.output.dir.empty()) summary = "summary.csv";
  append_summary(s.output.resolve(summary), {row});
  if (s.sim.record_events)
    write_file(s.output.resolve(s.output.events), event_log_header() + "\n" + result.events_csv);
  if (s.sim.record_feedback)
    write_file(s.output.resolve(s.output.feedback),
               feedback_log_header() + "\n" + result.feedback_csv);

  std::printf("scheme      %s\n", row.scheme.c_str());
  std::printf("trace       %s\n", row.trace.c_str());
  std::printf("duration    %s s\n", format_number(row.duration_s).c_str());
  std::printf("throughput  %s Mbit/s\n", format_number(row.throughput_mbps).c_str());
  std::printf("goodput     %s Mbit/s\n", format_number(row.goodput_mbps).c_str());
  std::printf("avg qdelay  %s\n", opt(row.avg_qdelay_ms, " ms").c_str());
  std::printf("p95 qdelay  %s\n", opt(row.p95_qdelay_ms, " ms").c_str());
  std::printf("power       %s\n", opt(row.power, "").c_str());
  std::printf("power95     %s\n", opt(row.power95, "").c_str());
  std::printf("retrans     %lld\n", static_cast<long long>(row.retrans));
  std::printf("drops       %lld\n", static_cast<long long>(row.drops));
  std::printf("feedback    %s kbit/s\n", format_number(row.feedback_overhead_kbps).c_str());
  std::printf("\n%s\n%s\n", summary_csv_header().c_str(), to_csv(row).c_str());
  if (result.audit_failures > 0) {
    std::fprintf(stderr, "error: %lld audit failures\n",
                 static_cast<long long>(result.audit_failures));
    return kRuntime;
  }
  return kOk;
}

int run_app(int argc, char** argv) {
  CLI::App app{"Trace-driven simulator for network-assisted congestion control"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("-j,--threads", threads, "worker threads for scenarios (0 = all cores)");

  KeyFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run one simulation");
  run_flags.attach(run);

  CLI::App* scenario = app.add_subcommand("scenario", "run a preset experiment");
  scenario->require_subcommand(1);

  KeyFlags single_flags;
  std::string traces = "const:12mbps";
  std::string schemes = "natcp,nacubic,cubic,tg";
  CLI::App* single = scenario->add_subcommand("single-flow", "every scheme on every trace");
  single_flags.attach(single);
  single->add_option("--traces", traces, "comma-separated traces")->capture_default_str();
  single->add_option("--schemes", schemes, "comma-separated schemes")->capture_default_str();

  KeyFlags fair_flags;
  std::string fair_schemes = "natcp,nacubic,cubic";
  CLI::App* fair = scenario->add_subcommand("fairness", "two flows sharing one UE");
  fair_flags.attach(fair);
  fair->add_option("--schemes", fair_schemes, "comma-separated schemes")->capture_default_str();

  KeyFlags modes_flags;
  CLI::App* modes =
      scenario->add_subcommand("feedback-modes", "bandwidth-only vs full feedback, IB vs OoB");
  modes_flags.attach(modes);

  KeyFlags sweep_flags;
  std::string periods_ms = "5,10,25,50,100,250,500";
  CLI::App* sweep = scenario->add_subcommand("period-sweep", "NATCP across feedback periods");
  sweep_flags.attach(sweep);
  sweep->add_option("--periods", periods_ms, "comma-separated periods in ms")
      ->capture_default_str();

  CLI::App* trace_cmd = app.add_subcommand("trace", "trace utilities");
  trace_cmd->require_subcommand(1);
  std::string render_spec;
  double render_duration = 60.0;
  std::uint64_t render_seed = 1;
  std::string render_out;
  CLI::App* render = trace_cmd->add_subcommand("render", "write a trace in Mahimahi format");
  render->add_option("--trace", render_spec, "trace spec or file")->required();
  render->add_option("--duration", render_duration, "seconds for synthetic traces")
      ->capture_default_str();
  render->add_option("--seed", render_seed, "seed for walk traces")->capture_default_str();
  render->add_option("-o,--output", render_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (run->parsed()) return cmd_run(run_flags);

  if (single->parsed()) {
    Settings s = single_flags.resolve();
    const auto report =
        scenario_single_flow(s.sim, split_list(traces), parse_schemes(schemes), threads);
    std::string raw = summary_csv_header() + "\n";
    for (const SummaryRow& r : report.raw) raw += to_csv(r) + "\n";
    std::string norm = normalized_csv_header() + "\n";
    for (const NormalizedRow& r : report.normalized) norm += to_csv(r) + "\n";
    emit_table(s, "single_flow_raw.csv", raw);
    std::cout << '\n';
    emit_table(s, "single_flow_normalized.csv", norm);
    if (!s.output.summary.empty()) append_summary(s.output.resolve(s.output.summary), report.raw);
    return kOk;
  }

  if (fair->parsed()) {
    Settings s = fair_flags.resolve();
    const auto rows = scenario_fairness(s.sim, parse_schemes(fair_schemes), s.pinned, threads);
    std::string text = fairness_csv_header() + "\n";
    for (const FairnessRow& r : rows) text += to_csv(r) + "\n";
    emit_table(s, "fairness.csv", text);
    return kOk;
  }

  if (modes->parsed()) {
    Settings s = modes_flags.resolve();
    const auto cells = scenario_feedback_modes(s.sim, s.pinned, threads);
    std::string text = feedback_modes_csv_header() + "\n";
    for (const FeedbackModeCell& c : cells) text += to_csv(c) + "\n";
    emit_table(s, "feedback_modes.csv", text);
    return kOk;
  }

  if (sweep->parsed()) {
    Settings s = sweep_flags.resolve();
    std::vector<TimeUs> periods;
    for (const std::string& p : split_list(periods_ms)) {
      Settings scratch;
      apply_setting(scratch, "feedback.period_us", p);  // reuse integer validation
      periods.push_back(scratch.sim.netassist.period * kUsPerMs);
    }
    const auto points = scenario_period_sweep(s.sim, periods, threads);
    std::string text = period_sweep_csv_header() + "\n";
    for (const PeriodPoint& p : points) text += to_csv(p) + "\n";
    emit_table(s, "period_sweep.csv", text);
    return kOk;
  }

  if (render->parsed()) {
    const auto ms = static_cast<std::int64_t>(render_duration * 1000.0);
    if (ms <= 0) throw ConfigError("--duration must be positive");
    const std::string text = render_trace(make_trace(render_spec, ms, render_seed));
    if (render_out.empty()) std::cout << text;
    else write_file(render_out, text);
    return kOk;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const natsim::InputFileError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kMissingFile;
  } catch (const natsim::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const natsim::TraceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
}
