#include "hmsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "hmsim/errors.hpp"
#include "hmsim/units.hpp"

namespace hmsim {

// --- sizes -----------------------------------------------------------------

std::uint64_t parse_size(const std::string& text) {
  std::uint64_t value = 0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr == begin) throw ConfigError("bad size '" + text + "'");
  std::string suffix(ptr, end);
  if (!suffix.empty() && (suffix.back() == 'B' || suffix.back() == 'b') && suffix.size() > 1) {
    suffix.pop_back();
  }
  unsigned shift = 0;
  if (suffix.empty()) {
    shift = 0;
  } else if (suffix == "K" || suffix == "k" || suffix == "Ki") {
    shift = 10;
  } else if (suffix == "M" || suffix == "m" || suffix == "Mi") {
    shift = 20;
  } else if (suffix == "G" || suffix == "g" || suffix == "Gi") {
    shift = 30;
  } else if (suffix == "T" || suffix == "t" || suffix == "Ti") {
    shift = 40;
  } else {
    throw ConfigError("bad size suffix in '" + text + "' (expected K, M, G or T)");
  }
  if (shift && value > (UINT64_MAX >> shift)) throw ConfigError("size '" + text + "' overflows");
  return value << shift;
}

std::string format_size(std::uint64_t bytes) {
  static constexpr const char* kSuffix[] = {"T", "G", "M", "K"};
  static constexpr unsigned kShift[] = {40, 30, 20, 10};
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t unit = std::uint64_t{1} << kShift[i];
    if (bytes != 0 && bytes % unit == 0) return std::to_string(bytes / unit) + kSuffix[i];
  }
  return std::to_string(bytes);
}

// --- settings --------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": '" + value + "' is not a non-negative integer");
  }
  return out;
}

std::uint32_t parse_u32(const std::string& key, const std::string& value) {
  const std::uint64_t v = parse_uint(key, value);
  if (v > UINT32_MAX) throw ConfigError(key + ": " + value + " is too large");
  return static_cast<std::uint32_t>(v);
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": '" + value + "' is not a number");
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(key + ": '" + value + "' is not a boolean");
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "scheme",        "system",         "mode",          "block_size",
      "fast_capacity", "slow_capacity",  "capacity_ratio", "num_sets",
      "table",         "irt_levels",     "lend_saved_space", "reserve_blocks",
      "remap_cache",   "irc_partition",  "batch_fill",    "rc_hit_cycles",
      "policy",        "prefetch_bits",  "random_retries", "page_size",
      "strict",        "slow_tech",      "fast_read_ns",  "fast_write_ns",
      "slow_read_ns",  "slow_write_ns",  "core_ghz",      "bloat_includes_metadata",
      "check_interval", "seed",          "trace",
  };
  return keys;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"trimma_c",    "trimma_f",     "linear_cache",
                                                 "linear_flat", "alloy_direct", "custom"};
  return names;
}

void Settings::set(const std::string& key, const std::string& value) {
  const auto& keys = known_config_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  values_[key] = value;
}

void Settings::erase(const std::string& key) { values_.erase(key); }

std::optional<std::string> Settings::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

Settings Settings::parse(std::istream& in, const std::string& origin) {
  Settings settings;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": empty key or value");
    }
    try {
      settings.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return settings;
}

Settings Settings::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse(in, path);
}

// --- run config ------------------------------------------------------------

TraceSpec RunConfig::default_trace() {
  TraceSpec spec;
  spec.source = TraceSpec::Source::kSynthetic;
  spec.synthetic.kind = SyntheticKind::kZipf;
  spec.synthetic.alpha = 0.9;
  spec.synthetic.length = 10'000'000;
  return spec;
}

namespace {

struct Preset {
  std::optional<SystemKind> system;
  std::optional<UseMode> mode;
  std::optional<TableKind> table;
  std::optional<bool> lend;
  std::optional<RemapCacheKind> rcache;
};

Preset preset_for(const std::string& scheme) {
  if (scheme == "trimma_c") {
    return {SystemKind::kTiering, UseMode::kCache, TableKind::kRadix, true,
            RemapCacheKind::kIdentityAware};
  }
  if (scheme == "trimma_f") {
    return {SystemKind::kTiering, UseMode::kFlat, TableKind::kRadix, true,
            RemapCacheKind::kIdentityAware};
  }
  if (scheme == "linear_cache") {
    return {SystemKind::kTiering, UseMode::kCache, TableKind::kLinear, false,
            RemapCacheKind::kConventional};
  }
  if (scheme == "linear_flat") {
    return {SystemKind::kTiering, UseMode::kFlat, TableKind::kLinear, false,
            RemapCacheKind::kConventional};
  }
  if (scheme == "alloy_direct") {
    return {SystemKind::kAlloy, UseMode::kCache, std::nullopt, false, RemapCacheKind::kNone};
  }
  if (scheme == "custom") return {};
  throw ConfigError("unknown scheme '" + scheme + "' (expected trimma_c, trimma_f, linear_cache, "
                    "linear_flat, alloy_direct or custom)");
}

const char* system_name(SystemKind kind) { return kind == SystemKind::kTiering ? "tiering" : "alloy"; }

SystemKind system_from_string(const std::string& text) {
  if (text == "tiering") return SystemKind::kTiering;
  if (text == "alloy") return SystemKind::kAlloy;
  throw ConfigError("unknown system '" + text + "' (expected tiering|alloy)");
}

// Applies a preset-forced field, rejecting an explicit conflicting value.
template <typename T, typename Parse>
void force(const Settings& settings, const std::string& scheme, const char* key,
           const std::optional<T>& forced, T& field, Parse parse) {
  const auto given = settings.get(key);
  if (given) field = parse(*given);
  if (!forced) return;
  if (given && field != *forced) {
    throw ConfigError("scheme " + scheme + " fixes " + key + "; remove '" + key + " = " + *given +
                      "' or use scheme = custom");
  }
  field = *forced;
}

}  // namespace

RunConfig make_run_config(const Settings& settings, const std::string& scheme_arg) {
  RunConfig c;
  c.scheme = !scheme_arg.empty() ? scheme_arg : settings.get("scheme").value_or("trimma_c");
  const Preset preset = preset_for(c.scheme);
  EngineConfig& e = c.engine;
  const auto get = [&](const char* key) { return settings.get(key); };

  force(settings, c.scheme, "system", preset.system, c.system, system_from_string);
  force(settings, c.scheme, "mode", preset.mode, e.mode,
        [](const std::string& v) { return use_mode_from_string(v.c_str()); });
  force(settings, c.scheme, "table", preset.table, e.table, table_kind_from_string);
  force(settings, c.scheme, "lend_saved_space", preset.lend, e.lend_saved_space,
        [](const std::string& v) { return parse_bool("lend_saved_space", v); });
  force(settings, c.scheme, "remap_cache", preset.rcache, e.rcache, remap_cache_kind_from_string);

  if (auto v = get("block_size")) e.block_size = parse_size(*v);
  if (auto v = get("fast_capacity")) e.fast_capacity = parse_size(*v);
  if (auto v = get("num_sets")) e.num_sets = parse_u32("num_sets", *v);
  const auto ratio = get("capacity_ratio");
  if (auto v = get("slow_capacity")) {
    e.slow_capacity = parse_size(*v);
    if (ratio && e.slow_capacity != e.fast_capacity * parse_uint("capacity_ratio", *ratio)) {
      throw ConfigError("capacity_ratio " + *ratio + " disagrees with slow_capacity / fast_capacity");
    }
  } else if (ratio) {
    const std::uint64_t r = parse_uint("capacity_ratio", *ratio);
    if (r == 0) throw ConfigError("capacity_ratio must be >= 1");
    e.slow_capacity = e.fast_capacity * r;
  }

  if (auto v = get("irt_levels")) e.irt_levels = parse_u32("irt_levels", *v);
  if (auto v = get("reserve_blocks")) e.reserve_blocks_override = parse_u32("reserve_blocks", *v);
  if (auto v = get("irc_partition")) c.irc_partition = irc_partition_from_string(*v);
  e.rc_config = RemapCacheConfig::with_partition(c.irc_partition);
  if (auto v = get("batch_fill")) e.rc_config.batch_fill = parse_bool("batch_fill", *v);
  if (auto v = get("policy")) e.policy = replacement_policy_from_string(*v);
  if (auto v = get("prefetch_bits")) e.prefetch_bits = parse_u32("prefetch_bits", *v);
  if (auto v = get("random_retries")) e.random_retries = parse_u32("random_retries", *v);
  if (auto v = get("page_size")) e.page_size = parse_size(*v);
  if (auto v = get("strict")) e.strict_first_touch = parse_bool("strict", *v);

  if (auto v = get("slow_tech")) c.slow_tech = *v;
  if (c.slow_tech == "ddr") {
    c.timing = TimingParams::ddr();
  } else if (c.slow_tech == "nvm") {
    c.timing = TimingParams::nvm();
  } else {
    throw ConfigError("unknown slow_tech '" + c.slow_tech + "' (expected ddr|nvm)");
  }
  if (auto v = get("fast_read_ns")) c.timing.fast_read_ns = parse_double("fast_read_ns", *v);
  if (auto v = get("fast_write_ns")) c.timing.fast_write_ns = parse_double("fast_write_ns", *v);
  if (auto v = get("slow_read_ns")) c.timing.slow_read_ns = parse_double("slow_read_ns", *v);
  if (auto v = get("slow_write_ns")) c.timing.slow_write_ns = parse_double("slow_write_ns", *v);
  if (auto v = get("core_ghz")) c.timing.core_ghz = parse_double("core_ghz", *v);
  if (auto v = get("rc_hit_cycles")) c.timing.rc_hit_cycles = parse_u32("rc_hit_cycles", *v);
  e.rc_config.hit_latency_cycles = c.timing.rc_hit_cycles;

  if (auto v = get("bloat_includes_metadata")) {
    c.bloat_includes_metadata = parse_bool("bloat_includes_metadata", *v);
  }
  if (auto v = get("check_interval")) c.check_interval = parse_uint("check_interval", *v);
  if (auto v = get("seed")) c.seed = parse_uint("seed", *v);
  e.seed = c.seed;
  if (auto v = get("trace")) c.trace = parse_trace_spec(*v);

  // Validate everything that can be checked without simulating.
  c.timing.validate();
  if (c.system == SystemKind::kAlloy) {
    if (e.mode != UseMode::kCache) throw ConfigError("alloy_direct supports cache mode only");
    AlloyCache probe(c.alloy());
  } else {
    TieringEngine probe(e);
  }
  return c;
}

std::string dump_config(const RunConfig& c) {
  const EngineConfig& e = c.engine;
  std::ostringstream out;
  const auto kv = [&](const char* key, const std::string& value) {
    out << key << " = " << value << '\n';
  };
  kv("scheme", c.scheme);
  kv("system", system_name(c.system));
  kv("mode", to_string(e.mode));
  kv("block_size", std::to_string(e.block_size));
  kv("fast_capacity", format_size(e.fast_capacity));
  kv("slow_capacity", format_size(e.slow_capacity));
  if (e.fast_capacity != 0 && e.slow_capacity % e.fast_capacity == 0) {
    kv("capacity_ratio", std::to_string(e.slow_capacity / e.fast_capacity));
  }
  kv("num_sets", std::to_string(e.num_sets));
  kv("table", to_string(e.table));
  kv("irt_levels", std::to_string(e.irt_levels));
  kv("lend_saved_space", e.lend_saved_space ? "true" : "false");
  if (e.reserve_blocks_override) kv("reserve_blocks", std::to_string(*e.reserve_blocks_override));
  kv("remap_cache", to_string(e.rcache));
  kv("irc_partition", to_string(c.irc_partition));
  kv("batch_fill", e.rc_config.batch_fill ? "true" : "false");
  kv("rc_hit_cycles", std::to_string(c.timing.rc_hit_cycles));
  kv("policy", to_string(e.policy));
  kv("prefetch_bits", std::to_string(e.prefetch_bits));
  kv("random_retries", std::to_string(e.random_retries));
  kv("page_size", std::to_string(e.page_size));
  kv("strict", e.strict_first_touch ? "true" : "false");
  kv("slow_tech", c.slow_tech);
  kv("fast_read_ns", format_double(c.timing.fast_read_ns));
  kv("fast_write_ns", format_double(c.timing.fast_write_ns));
  kv("slow_read_ns", format_double(c.timing.slow_read_ns));
  kv("slow_write_ns", format_double(c.timing.slow_write_ns));
  kv("core_ghz", format_double(c.timing.core_ghz));
  kv("bloat_includes_metadata", c.bloat_includes_metadata ? "true" : "false");
  kv("check_interval", std::to_string(c.check_interval));
  kv("seed", std::to_string(c.seed));
  kv("trace", to_string(c.trace));
  return out.str();
}

}  // namespace hmsim
