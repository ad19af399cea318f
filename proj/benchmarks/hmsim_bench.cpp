#include <benchmark/benchmark.h>

#include <vector>

#include "hmsim/config.hpp"
#include "hmsim/remap_cache.hpp"
#include "hmsim/remap_table.hpp"
#include "hmsim/rng.hpp"
#include "hmsim/simulator.hpp"
#include "hmsim/tiering_engine.hpp"

using namespace hmsim;

namespace {

// Per-set key count of the default 16 MiB / 512 MiB system.
constexpr std::uint64_t kKeys = 540672;

std::vector<std::uint32_t> random_keys(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint32_t> keys(n);
  for (auto& k : keys) k = static_cast<std::uint32_t>(uniform_below(rng, kKeys));
  return keys;
}

void BM_RadixLookup(benchmark::State& state) {
  RadixRemapTable table(IrtConfig{static_cast<std::uint32_t>(state.range(0)), 256}, kKeys);
  // Populate roughly one leaf in eight.
  for (std::uint32_t k = 0; k < kKeys; k += 8 * 64) {
    for (std::uint32_t j = 0; j < 32; ++j) table.insert(k + j, (k + j + 1) % kKeys);
  }
  const auto keys = random_keys(1 << 16, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(table.lookup(keys[i++ & 0xffff]));
  }
}
BENCHMARK(BM_RadixLookup)->Arg(2)->Arg(3);

void BM_LinearLookup(benchmark::State& state) {
  LinearRemapTable table(256, kKeys, 16ull << 20);
  const auto keys = random_keys(1 << 16, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(table.lookup(keys[i++ & 0xffff]));
  }
}
BENCHMARK(BM_LinearLookup);

void BM_RadixInsertRemove(benchmark::State& state) {
  RadixRemapTable table(IrtConfig{2, 256}, kKeys);
  const auto keys = random_keys(1 << 16, 2);
  std::size_t i = 0;
  for (auto _ : state) {
    const std::uint32_t k = keys[i++ & 0xffff];
    if (table.lookup(k).mapping.is_identity()) {
      table.insert(k, 7);
    } else {
      table.remove(k);
    }
  }
}
BENCHMARK(BM_RadixInsertRemove);

void BM_RemapCacheLookup(benchmark::State& state) {
  const auto kind = static_cast<RemapCacheKind>(state.range(0));
  RadixRemapTable table(IrtConfig{2, 256}, kKeys);
  auto rc = make_remap_cache(kind, RemapCacheConfig::with_partition({1, 3}), 1, kKeys);
  // Skewed keys so the cache sees a mix of hits and misses.
  Rng rng(3);
  ZipfSampler zipf(kKeys, 0.9);
  std::vector<std::uint32_t> keys(1 << 16);
  for (auto& k : keys) k = static_cast<std::uint32_t>(zipf(rng) - 1);
  std::size_t i = 0;
  for (auto _ : state) {
    const std::uint32_t k = keys[i++ & 0xffff];
    if (!rc->lookup(0, k).hit()) {
      const RemapLookupResult walk = table.lookup(k);
      rc->fill(0, k, walk, table.leaf_view(walk.leaf_block));
    }
  }
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_RemapCacheLookup)
    ->Arg(static_cast<int>(RemapCacheKind::kConventional))
    ->Arg(static_cast<int>(RemapCacheKind::kIdentityAware));

// Whole-system throughput on a 10^5-request zipf trace, reported as
// requests per second.
void BM_EngineThroughput(benchmark::State& state, const char* scheme) {
  Settings s;
  s.set("trace", "zipf:length=100000");
  const RunConfig config = make_run_config(s, scheme);
  auto source = open_trace(config.trace, config.seed, config.engine.slow_capacity,
                           config.engine.block_size);
  const std::vector<Request> requests = collect(*source);
  for (auto _ : state) {
    VectorTrace trace(requests);
    benchmark::DoNotOptimize(run_trace(config, trace));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(requests.size()));
}
BENCHMARK_CAPTURE(BM_EngineThroughput, trimma_c, "trimma_c")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EngineThroughput, trimma_f, "trimma_f")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EngineThroughput, linear_cache, "linear_cache")
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EngineThroughput, alloy_direct, "alloy_direct")
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
