#include "hmsim/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <ostream>

#include "hmsim/errors.hpp"
#include "json.hpp"

namespace hmsim {

void TimingParams::validate() const {
  if (!(fast_read_ns > 0 && fast_write_ns > 0 && slow_read_ns > 0 && slow_write_ns > 0 &&
        core_ghz > 0)) {
    throw ConfigError("timing parameters must be positive");
  }
  if (slow_read_ns < fast_read_ns || slow_write_ns < fast_write_ns) {
    throw ConfigError("slow-memory latency must not be below fast-memory latency");
  }
}

void LatencyTotals::charge(const AccessOutcome& outcome, bool write, const TimingParams& timing) {
  if (outcome.rc_probed) metadata_ns += timing.rc_ns();
  // Table levels are probed in parallel: one access regardless of depth.
  if (outcome.probe == MetadataProbe::kTableWalk) {
    metadata_ns += outcome.walk_hit_slow ? timing.slow_read_ns : timing.fast_read_ns;
  }
  if (outcome.served_by == ServedBy::kFast) {
    fast_data_ns += write ? timing.fast_write_ns : timing.fast_read_ns;
    return;
  }
  // An inline-tag miss has already spent one fast burst on the probe.
  if (outcome.probe == MetadataProbe::kInline) fast_data_ns += timing.fast_read_ns;
  slow_data_ns += write ? timing.slow_write_ns : timing.slow_read_ns;
}

double serve_rate(const EngineStats& stats) {
  if (stats.requests == 0) return 0.0;
  return static_cast<double>(stats.fast_served) / static_cast<double>(stats.requests);
}

double bloat(const Traffic& traffic, std::uint64_t requests, bool include_metadata) {
  if (requests == 0) return 0.0;
  const std::uint64_t total = traffic.demand + traffic.fill + traffic.writeback +
                              (include_metadata ? traffic.metadata : 0);
  return static_cast<double>(total) / static_cast<double>(requests * kDemandBytes);
}

AmatBreakdown amat(const LatencyTotals& totals, std::uint64_t requests) {
  AmatBreakdown b;
  if (requests == 0) return b;
  const auto n = static_cast<double>(requests);
  b.metadata_ns = totals.metadata_ns / n;
  b.fast_data_ns = totals.fast_data_ns / n;
  b.slow_data_ns = totals.slow_data_ns / n;
  return b;
}

namespace {

using Json = nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

Json counters_json(const EngineStats& s) {
  return Json{{"requests", s.requests},
              {"reads", s.reads},
              {"writes", s.writes},
              {"fast_served", s.fast_served},
              {"slow_served", s.slow_served},
              {"table_walks", s.table_walks},
              {"rc_identity_lookups", s.rc_identity_lookups},
              {"admissions", s.admissions},
              {"swaps", s.swaps},
              {"restores", s.restores},
              {"evictions", s.evictions},
              {"reclaims", s.reclaims},
              {"writebacks", s.writebacks},
              {"skipped_admissions", s.skipped_admissions},
              {"index_bit_fetches", s.index_bit_fetches},
              {"metadata_blocks_allocated", s.metadata_blocks_allocated},
              {"metadata_blocks_freed", s.metadata_blocks_freed},
              {"first_touch_fast_pages", s.first_touch_fast_pages},
              {"first_touch_slow_pages", s.first_touch_slow_pages}};
}

Json report_json(const MetricsReport& r) {
  Json config = Json::object();
  for (const auto& [key, value] : r.config) config[key] = value;

  const RemapCacheStats& rc = r.rcache.stats;
  return Json{
      {"scheme", r.scheme},
      {"config", config},
      {"serve_rate", r.serve_rate},
      {"bloat_factor", r.bloat_factor},
      {"bloat_includes_metadata", r.bloat_includes_metadata},
      {"remap_cache",
       {{"kind", r.rcache.kind},
        {"lookups", rc.lookups},
        {"id_hits", rc.id_hits},
        {"non_id_hits", rc.non_id_hits},
        {"misses", rc.misses},
        {"fills", rc.fills},
        {"invalidations", rc.invalidations},
        {"hit_rate", r.rcache.hit_rate},
        {"id_hit_rate", r.rcache.id_hit_rate},
        {"non_id_hit_rate", r.rcache.non_id_hit_rate}}},
      {"footprint",
       {{"intermediate_bytes", r.footprint.intermediate_bytes},
        {"allocated_leaf_blocks", r.footprint.allocated_leaf_blocks},
        {"leaf_bytes", r.footprint.leaf_bytes},
        {"metadata_fraction_of_fast", r.footprint.metadata_fraction_of_fast},
        {"reserved_fraction_of_fast", r.footprint.reserved_fraction_of_fast},
        {"degenerate", r.footprint.degenerate},
        {"table_overflow", r.footprint.table_overflow}}},
      {"amat_ns",
       {{"total", r.amat.total_ns()},
        {"metadata", r.amat.metadata_ns},
        {"fast_data", r.amat.fast_data_ns},
        {"slow_data", r.amat.slow_data_ns}}},
      {"traffic_bytes",
       {{"demand", r.traffic.demand},
        {"fill", r.traffic.fill},
        {"writeback", r.traffic.writeback},
        {"metadata", r.traffic.metadata}}},
      {"counters", counters_json(r.counters)},
      {"event_hash", hex64(r.event_hash)},
      {"placement_digest", hex64(r.placement_digest)},
  };
}

std::uint64_t hash_text(const std::string& text) {
  Fnv1a hash;
  hash.add_bytes(text.data(), text.size());
  return hash.value();
}

// Flattened (name, value) pairs in CSV column order.
std::vector<std::pair<std::string, std::string>> flatten(const MetricsReport& r) {
  std::vector<std::pair<std::string, std::string>> out;
  const auto num = [&](const char* name, std::uint64_t v) {
    out.emplace_back(name, std::to_string(v));
  };
  const auto real = [&](const char* name, double v) { out.emplace_back(name, format_double(v)); };
  out.emplace_back("scheme", r.scheme);
  real("serve_rate", r.serve_rate);
  real("bloat_factor", r.bloat_factor);
  out.emplace_back("rc_kind", r.rcache.kind);
  num("rc_lookups", r.rcache.stats.lookups);
  num("rc_id_hits", r.rcache.stats.id_hits);
  num("rc_non_id_hits", r.rcache.stats.non_id_hits);
  num("rc_misses", r.rcache.stats.misses);
  num("rc_fills", r.rcache.stats.fills);
  num("rc_invalidations", r.rcache.stats.invalidations);
  real("rc_hit_rate", r.rcache.hit_rate);
  real("rc_id_hit_rate", r.rcache.id_hit_rate);
  real("rc_non_id_hit_rate", r.rcache.non_id_hit_rate);
  num("intermediate_bytes", r.footprint.intermediate_bytes);
  num("allocated_leaf_blocks", r.footprint.allocated_leaf_blocks);
  num("leaf_bytes", r.footprint.leaf_bytes);
  real("metadata_fraction_of_fast", r.footprint.metadata_fraction_of_fast);
  real("reserved_fraction_of_fast", r.footprint.reserved_fraction_of_fast);
  out.emplace_back("degenerate", r.footprint.degenerate ? "1" : "0");
  out.emplace_back("table_overflow", r.footprint.table_overflow ? "1" : "0");
  real("amat_total_ns", r.amat.total_ns());
  real("amat_metadata_ns", r.amat.metadata_ns);
  real("amat_fast_data_ns", r.amat.fast_data_ns);
  real("amat_slow_data_ns", r.amat.slow_data_ns);
  num("traffic_demand", r.traffic.demand);
  num("traffic_fill", r.traffic.fill);
  num("traffic_writeback", r.traffic.writeback);
  num("traffic_metadata", r.traffic.metadata);
  const Json counters = counters_json(r.counters);
  for (const auto& [key, value] : counters.items()) {
    out.emplace_back(key, value.dump());
  }
  out.emplace_back("event_hash", hex64(r.event_hash));
  out.emplace_back("placement_digest", hex64(r.placement_digest));
  return out;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (const char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

}  // namespace

std::uint64_t report_hash(const MetricsReport& report) {
  return hash_text(report_json(report).dump());
}

std::string to_json(const MetricsReport& report) {
  Json doc = report_json(report);
  doc["report_hash"] = hex64(hash_text(doc.dump()));
  return doc.dump(2) + "\n";
}

std::vector<std::string> csv_header(const std::vector<std::string>& extra) {
  std::vector<std::string> header = extra;
  for (auto& [name, value] : flatten(MetricsReport{})) header.push_back(name);
  return header;
}

std::vector<std::string> csv_row(const MetricsReport& report,
                                 const std::vector<std::string>& extra) {
  std::vector<std::string> row = extra;
  for (auto& [name, value] : flatten(report)) row.push_back(value);
  return row;
}

void write_csv_line(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

}  // namespace hmsim
