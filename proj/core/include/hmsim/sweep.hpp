#pragma once

// Parameter sweeps: one run per (scheme, point), executed on a bounded
// worker pool and reported as a single CSV.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hmsim/config.hpp"
#include "hmsim/metrics.hpp"

namespace hmsim {

struct SweepSpec {
  std::string key;
  std::vector<std::string> values;
};

// Sweepable keys: capacity_ratio, block_size, irt_levels, irc_partition.
const std::vector<std::string>& sweep_keys();

// Parses `KEY=V1,V2,...`. Throws ConfigError.
SweepSpec parse_sweep(const std::string& text);

struct SweepResult {
  std::string scheme;
  std::string value;  // sweep point
  RunConfig config;
  MetricsReport report;
};

// Builds every configuration first (so a bad point fails before any run),
// then simulates. Results are ordered by scheme, then point. `workers` = 0
// uses the hardware concurrency.
std::vector<SweepResult> run_sweep(const Settings& base, const std::vector<std::string>& schemes,
                                   const SweepSpec& sweep, unsigned workers = 0);

void write_sweep_csv(std::ostream& out, const SweepSpec& sweep,
                     const std::vector<SweepResult>& results);

}  // namespace hmsim
