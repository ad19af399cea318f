#pragma once

// Run configuration: a `key = value` file, scheme presets, and the mapping
// onto engine and timing settings.
//
// Geometry keys: block_size, fast_capacity, slow_capacity, capacity_ratio,
// num_sets, mode. capacity_ratio derives slow_capacity when the latter is not
// given, and must agree with it otherwise.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hmsim/alloy_cache.hpp"
#include "hmsim/tiering_engine.hpp"
#include "hmsim/timing.hpp"
#include "hmsim/trace.hpp"

namespace hmsim {

enum class SystemKind : std::uint8_t { kTiering, kAlloy };

struct RunConfig {
  std::string scheme = "trimma_c";
  SystemKind system = SystemKind::kTiering;
  EngineConfig engine;
  IrcPartition irc_partition;
  TimingParams timing;
  std::string slow_tech = "ddr";
  bool bloat_includes_metadata = true;
  // Full invariant sweep every N requests (0 = never).
  std::uint64_t check_interval = 0;
  std::uint64_t seed = 1;
  TraceSpec trace = default_trace();

  AlloyConfig alloy() const {
    return {engine.block_size, engine.fast_capacity, engine.slow_capacity};
  }
  static TraceSpec default_trace();
};

// Ordered key/value settings as read from a file or the command line.
class Settings {
 public:
  // Parses `key = value` lines; `#` starts a comment. Throws ConfigError
  // naming the line on malformed input or unknown keys.
  static Settings parse(std::istream& in, const std::string& origin = "config");
  static Settings load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  void erase(const std::string& key);
  std::optional<std::string> get(const std::string& key) const;
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Every key a config file may contain.
const std::vector<std::string>& known_config_keys();

// Scheme presets: trimma_c, trimma_f, linear_cache, linear_flat,
// alloy_direct, plus `custom` (no preset fields).
const std::vector<std::string>& preset_names();

// Builds a fully specified configuration for `scheme` (or the file's
// `scheme` key, or trimma_c). Throws ConfigError on inconsistency.
RunConfig make_run_config(const Settings& settings, const std::string& scheme = "");

// Fully specified `key = value` listing; make_run_config(parse(dump)) == config.
std::string dump_config(const RunConfig& config);

bool parse_bool(const std::string& key, const std::string& value);

}  // namespace hmsim
