#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "hmsim/config.hpp"
#include "hmsim/errors.hpp"
#include "hmsim/simulator.hpp"
#include "hmsim/sweep.hpp"
#include "hmsim/trace.hpp"

namespace hmsim {

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) throw ConfigError("empty entry in list '" + text + "'");
    items.push_back(item);
  }
  if (items.empty()) throw ConfigError("empty list");
  return items;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

// report.json -> report.<tag>.json when several reports share one path.
std::string tagged_path(const std::string& path, const std::string& tag) {
  const std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + "." + tag + p.extension().string())).string();
}

void emit_report(const MetricsReport& report, const std::optional<std::string>& path,
                 std::ostream& out) {
  if (!path || *path == "-") {
    out << to_json(report);
    return;
  }
  open_output(*path) << to_json(report);
}

struct Options {
  std::string config_path;
  std::string schemes;
  std::string trace;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> report;
  std::optional<std::string> csv;
  std::string sweep;
  std::vector<std::string> sets;
  bool strict = false;
  bool dump = false;
  std::string emit_trace;
  unsigned workers = 0;
};

int run(const Options& opt, std::ostream& out, std::ostream& err) {
  Settings settings = opt.config_path.empty() ? Settings{} : Settings::load(opt.config_path);
  for (const std::string& kv : opt.sets) {
    if (kv.find('=') == std::string::npos) {
      throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    }
    std::istringstream line(kv);
    const Settings one = Settings::parse(line, "--set");
    for (const auto& [key, value] : one.values()) settings.set(key, value);
  }
  if (!opt.trace.empty()) settings.set("trace", opt.trace);
  if (opt.seed) settings.set("seed", std::to_string(*opt.seed));
  if (opt.strict) settings.set("strict", "true");

  const std::vector<std::string> schemes =
      opt.schemes.empty() ? std::vector<std::string>{settings.get("scheme").value_or("trimma_c")}
                          : split_list(opt.schemes);

  if (opt.dump) {
    for (const std::string& scheme : schemes) out << dump_config(make_run_config(settings, scheme));
    return 0;
  }

  if (!opt.emit_trace.empty()) {
    const RunConfig config = make_run_config(settings, schemes.front());
    auto source = open_trace(config.trace, config.seed, config.engine.slow_capacity,
                             config.engine.block_size);
    const std::vector<Request> requests = collect(*source);
    std::ofstream file = open_output(opt.emit_trace);
    if (std::filesystem::path(opt.emit_trace).extension() == ".bin") {
      write_binary_trace(file, requests);
    } else {
      write_text_trace(file, requests);
    }
    err << "wrote " << requests.size() << " records to " << opt.emit_trace << '\n';
    return 0;
  }

  if (!opt.sweep.empty()) {
    const SweepSpec sweep = parse_sweep(opt.sweep);
    const std::vector<SweepResult> results = run_sweep(settings, schemes, sweep, opt.workers);
    if (opt.csv && *opt.csv != "-") {
      std::ofstream file = open_output(*opt.csv);
      write_sweep_csv(file, sweep, results);
    } else {
      write_sweep_csv(out, sweep, results);
    }
    if (opt.report) {
      for (const SweepResult& r : results) {
        emit_report(r.report, tagged_path(*opt.report, r.scheme + "." + sweep.key + "-" + r.value),
                    out);
      }
    }
    return 0;
  }

  // Validate every scheme before running any.
  std::vector<RunConfig> configs;
  for (const std::string& scheme : schemes) configs.push_back(make_run_config(settings, scheme));
  std::vector<MetricsReport> reports;
  for (const RunConfig& config : configs) reports.push_back(run_config(config));

  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::optional<std::string> path = opt.report;
    if (path && *path != "-" && reports.size() > 1) path = tagged_path(*path, reports[i].scheme);
    if (path || !opt.csv) emit_report(reports[i], path, out);
  }
  if (opt.csv) {
    std::ostringstream rows;
    write_csv_line(rows, csv_header());
    for (const MetricsReport& r : reports) write_csv_line(rows, csv_row(r));
    if (*opt.csv == "-") {
      out << rows.str();
    } else {
      open_output(*opt.csv) << rows.str();
    }
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trace-driven hybrid-memory simulator", "hmsim"};
  Options opt;
  app.add_option("--config", opt.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--scheme", opt.schemes,
                 "preset or comma list: trimma_c, trimma_f, linear_cache, linear_flat, "
                 "alloy_direct, custom");
  app.add_option("--trace", opt.trace,
                 "text:PATH | binary:PATH | PATH | uniform|zipf|stride|hotset[:k=v,...]");
  app.add_option("--seed", opt.seed, "run seed");
  app.add_option("--report", opt.report, "JSON report path ('-' for stdout)");
  app.add_option("--csv", opt.csv, "CSV output path ('-' for stdout)");
  app.add_option("--sweep", opt.sweep,
                 "KEY=V1,V2,... over capacity_ratio, block_size, irt_levels, irc_partition");
  app.add_option("--set", opt.sets, "override one config key (KEY=VALUE); repeatable");
  app.add_option("--workers", opt.workers, "sweep worker threads (0 = all cores)");
  app.add_flag("--strict", opt.strict, "flat mode: reject accesses to never-allocated pages");
  app.add_flag("--dump-config", opt.dump, "print the fully specified configuration and exit");
  app.add_option("--emit-trace", opt.emit_trace,
                 "write the configured trace to PATH (.bin = binary) and exit");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "hmsim: " << e.what() << '\n';
    return 2;
  }

  try {
    return run(opt, out, err);
  } catch (const TraceError& e) {
    err << "hmsim: trace error: " << e.what() << '\n';
  } catch (const ConfigError& e) {
    err << "hmsim: configuration error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "hmsim: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace hmsim
