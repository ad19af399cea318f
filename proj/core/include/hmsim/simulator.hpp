#pragma once

// Drives a request stream through one memory system and assembles the
// end-of-run report.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "hmsim/config.hpp"
#include "hmsim/memory_system.hpp"
#include "hmsim/metrics.hpp"
#include "hmsim/trace.hpp"

namespace hmsim {

struct RunOptions {
  // Flat mode: first-touch every page of [0, bytes) in address order before
  // the run, as if the program had allocated that much up front.
  std::optional<std::uint64_t> preallocate_bytes;
  bool record_events = false;
  // Called after every access; used by tests to inspect outcomes.
  std::function<void(const Request&, const AccessOutcome&)> observer;
};

std::unique_ptr<MemorySystem> make_memory_system(const RunConfig& config,
                                                 bool record_events = false);

// Runs `trace` from its current position to the end. Malformed records and
// out-of-range addresses surface as TraceError carrying the record number.
MetricsReport run_trace(const RunConfig& config, TraceSource& trace,
                        const RunOptions& options = {});

// Same, on a memory system the caller keeps (for inspecting end state).
MetricsReport run_trace(const RunConfig& config, MemorySystem& system, TraceSource& trace,
                        const RunOptions& options = {});

// Opens `config.trace` (synthetic footprint defaults to the slow capacity)
// and runs it. In strict flat mode a synthetic footprint is preallocated.
MetricsReport run_config(const RunConfig& config);

// Report fields that depend only on the end state of `system`.
MetricsReport snapshot(const RunConfig& config, const MemorySystem& system,
                       const LatencyTotals& latency);

}  // namespace hmsim
