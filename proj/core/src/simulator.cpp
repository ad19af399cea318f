#include "hmsim/simulator.hpp"

#include <algorithm>
#include <sstream>
#include <string>

#include "hmsim/alloy_cache.hpp"
#include "hmsim/errors.hpp"
#include "hmsim/tiering_engine.hpp"

namespace hmsim {

namespace {

std::vector<std::pair<std::string, std::string>> config_pairs(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::istringstream in(dump_config(config));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    pairs.emplace_back(line.substr(0, eq), line.substr(eq + 3));
  }
  return pairs;
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::unique_ptr<MemorySystem> make_memory_system(const RunConfig& config, bool record_events) {
  if (config.system == SystemKind::kAlloy) return std::make_unique<AlloyCache>(config.alloy());
  EngineConfig engine = config.engine;
  engine.record_events = engine.record_events || record_events;
  return std::make_unique<TieringEngine>(engine);
}

MetricsReport snapshot(const RunConfig& config, const MemorySystem& system,
                       const LatencyTotals& latency) {
  MetricsReport r;
  r.scheme = config.scheme;
  r.config = config_pairs(config);
  r.counters = system.stats();
  r.traffic = system.traffic();
  r.serve_rate = serve_rate(r.counters);
  r.bloat_includes_metadata = config.bloat_includes_metadata;
  r.bloat_factor = bloat(r.traffic, r.counters.requests, r.bloat_includes_metadata);
  r.amat = amat(latency, r.counters.requests);

  if (const RemapCache* rc = system.remap_cache()) {
    r.rcache.kind = to_string(config.engine.rcache);
    const RemapCacheStats& s = rc->stats();
    r.rcache.stats = s;
    const std::uint64_t identity = r.counters.rc_identity_lookups;
    r.rcache.hit_rate = ratio(s.id_hits + s.non_id_hits, s.lookups);
    r.rcache.id_hit_rate = ratio(s.id_hits, identity);
    r.rcache.non_id_hit_rate = ratio(s.non_id_hits, s.lookups - identity);
  }

  const IrtFootprint fp = system.footprint();
  r.footprint.intermediate_bytes = fp.intermediate_bytes;
  r.footprint.allocated_leaf_blocks = fp.allocated_leaf_blocks;
  r.footprint.leaf_bytes = fp.leaf_bytes;
  r.footprint.metadata_fraction_of_fast = fp.fraction_of_fast;
  if (const auto* engine = dynamic_cast<const TieringEngine*>(&system)) {
    const auto fast_blocks = engine->layout().fast_blocks_per_set();
    r.footprint.reserved_fraction_of_fast =
        ratio(engine->table_region_blocks_per_set(), fast_blocks);
    r.footprint.degenerate = engine->degenerate();
    r.footprint.table_overflow = engine->table_overflow();
  }
  r.event_hash = system.event_hash();
  r.placement_digest = system.placement_digest();
  return r;
}

MetricsReport run_trace(const RunConfig& config, TraceSource& trace, const RunOptions& options) {
  auto system = make_memory_system(config, options.record_events);
  return run_trace(config, *system, trace, options);
}

MetricsReport run_trace(const RunConfig& config, MemorySystem& system, TraceSource& trace,
                        const RunOptions& options) {
  auto* engine = dynamic_cast<TieringEngine*>(&system);
  if (options.preallocate_bytes && engine && config.engine.mode == UseMode::kFlat) {
    const std::uint64_t step = std::max<std::uint64_t>(
        config.engine.page_size, config.engine.block_size * config.engine.num_sets);
    for (std::uint64_t a = 0; a < *options.preallocate_bytes; a += step) {
      engine->first_touch_allocate(a);
    }
  }

  LatencyTotals latency;
  std::uint64_t since_check = 0;
  while (auto request = trace.next()) {
    AccessOutcome outcome;
    try {
      outcome = system.access(*request);
    } catch (const TraceError& e) {
      throw TraceError("record " + std::to_string(trace.position()) + ": " + e.what(),
                       trace.position());
    } catch (const RangeError& e) {
      throw TraceError("record " + std::to_string(trace.position()) + ": " + e.what(),
                       trace.position());
    }
    latency.charge(outcome, request->is_write(), config.timing);
    if (options.observer) options.observer(*request, outcome);
    if (config.check_interval != 0 && ++since_check == config.check_interval) {
      since_check = 0;
      system.check_invariants();
    }
  }
  if (config.check_interval != 0) system.check_invariants();
  return snapshot(config, system, latency);
}

MetricsReport run_config(const RunConfig& config) {
  auto trace = open_trace(config.trace, config.seed, config.engine.slow_capacity,
                          config.engine.block_size);
  RunOptions options;
  if (config.engine.strict_first_touch && config.trace.source == TraceSpec::Source::kSynthetic) {
    options.preallocate_bytes =
        config.trace.synthetic.footprint.value_or(config.engine.slow_capacity);
  }
  return run_trace(config, *trace, options);
}

}  // namespace hmsim
