#pragma once

// End-of-run metrics and their JSON / CSV encodings. Field names are stable;
// docs/report_schema.md lists them.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hmsim/memory_system.hpp"
#include "hmsim/timing.hpp"

namespace hmsim {

struct AmatBreakdown {
  double metadata_ns = 0.0;
  double fast_data_ns = 0.0;
  double slow_data_ns = 0.0;
  double total_ns() const { return metadata_ns + fast_data_ns + slow_data_ns; }
};

struct RemapCacheReport {
  std::string kind = "none";
  RemapCacheStats stats;
  double hit_rate = 0.0;
  double id_hit_rate = 0.0;
  double non_id_hit_rate = 0.0;
};

struct FootprintReport {
  std::uint64_t intermediate_bytes = 0;
  std::uint64_t allocated_leaf_blocks = 0;
  std::uint64_t leaf_bytes = 0;
  double metadata_fraction_of_fast = 0.0;  // end of run
  double reserved_fraction_of_fast = 0.0;  // whole table region
  bool degenerate = false;                 // region leaves no data space
  bool table_overflow = false;             // part of the table sits in slow memory
};

struct MetricsReport {
  std::string scheme;
  std::vector<std::pair<std::string, std::string>> config;  // echoed settings

  EngineStats counters;
  Traffic traffic;
  double serve_rate = 0.0;
  double bloat_factor = 0.0;
  bool bloat_includes_metadata = true;
  RemapCacheReport rcache;
  FootprintReport footprint;
  AmatBreakdown amat;  // per-request averages
  std::uint64_t event_hash = 0;
  std::uint64_t placement_digest = 0;
};

// Accumulated latency sums; divided by request count in finalize().
struct LatencyTotals {
  double metadata_ns = 0.0;
  double fast_data_ns = 0.0;
  double slow_data_ns = 0.0;

  void charge(const AccessOutcome& outcome, bool write, const TimingParams& timing);
};

double serve_rate(const EngineStats& stats);
// (demand + fill + writeback [+ metadata]) / (requests * 64); 0 with no requests.
double bloat(const Traffic& traffic, std::uint64_t requests, bool include_metadata);
AmatBreakdown amat(const LatencyTotals& totals, std::uint64_t requests);

// Serialized report, including "report_hash" (FNV-1a of the document
// serialized without it).
std::string to_json(const MetricsReport& report);
std::uint64_t report_hash(const MetricsReport& report);

// CSV with a fixed column order. `extra` columns go first.
std::vector<std::string> csv_header(const std::vector<std::string>& extra = {});
std::vector<std::string> csv_row(const MetricsReport& report,
                                 const std::vector<std::string>& extra = {});
void write_csv_line(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace hmsim
