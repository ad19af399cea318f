#pragma once

// On-chip remap caches.
//
// ConventionalRemapCache keeps one full entry per key, identity or not.
// IdentityAwareRemapCache splits the same SRAM budget into a NonIdCache of
// pointer entries and an IdCache of per-super-block identity bit vectors.
// An IdCache bit of 1 asserts "this block is identity-mapped"; 0 asserts
// nothing. Both caches only ever hold physical keys and are invalidated on
// every mapping change, so they never influence placement.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hmsim/remap_table.hpp"

namespace hmsim {

enum class RemapCacheKind : std::uint8_t { kNone, kConventional, kIdentityAware };

const char* to_string(RemapCacheKind kind);
RemapCacheKind remap_cache_kind_from_string(const std::string& text);

struct CacheShape {
  std::uint32_t sets = 0;
  std::uint32_t ways = 0;
  std::uint64_t entries() const { return static_cast<std::uint64_t>(sets) * ways; }
};

// Id:NonId split of the iRC payload budget, e.g. {1, 3}.
struct IrcPartition {
  std::uint32_t id_share = 1;
  std::uint32_t non_id_share = 3;
  bool operator==(const IrcPartition&) const = default;
};
IrcPartition irc_partition_from_string(const std::string& text);
std::string to_string(const IrcPartition& partition);

struct RemapCacheConfig {
  static constexpr std::uint32_t kPayloadBytes = 4;
  static constexpr std::uint32_t kBitsPerIdLine = 32;

  CacheShape conventional{2048, 8};
  CacheShape non_id{2048, 6};
  CacheShape id{256, 16};
  std::uint32_t hit_latency_cycles = 3;
  bool batch_fill = true;

  std::uint64_t conventional_bytes() const { return conventional.entries() * kPayloadBytes; }
  std::uint64_t non_id_bytes() const { return non_id.entries() * kPayloadBytes; }
  std::uint64_t id_bytes() const { return id.entries() * kPayloadBytes; }
  // Identity assertions the IdCache can hold at once.
  std::uint64_t id_coverage() const { return id.entries() * kBitsPerIdLine; }

  // Splits the conventional cache's payload budget by `partition`. NonIdCache
  // keeps the conventional set count; IdCache keeps 16 ways.
  static RemapCacheConfig with_partition(IrcPartition partition);
};

struct RcLookupResult {
  enum class Outcome : std::uint8_t { kIdentityHit, kRemapHit, kMiss };
  enum class Which : std::uint8_t { kNone, kId, kNonId, kConventional };

  Outcome outcome = Outcome::kMiss;
  Which which = Which::kNone;
  std::uint32_t device_block = 0;

  bool hit() const { return outcome != Outcome::kMiss; }
};

struct RemapCacheStats {
  std::uint64_t lookups = 0;
  std::uint64_t id_hits = 0;
  std::uint64_t non_id_hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t fills = 0;
  std::uint64_t invalidations = 0;
};

class RemapCache {
 public:
  virtual ~RemapCache() = default;

  virtual RcLookupResult lookup(std::uint32_t set_id, std::uint32_t key) = 0;
  // Records a table resolution. `leaf` is the fetched leaf block when batch
  // filling is allowed.
  virtual void fill(std::uint32_t set_id, std::uint32_t key, const RemapLookupResult& resolution,
                    const std::optional<LeafView>& leaf) = 0;
  // Drops whatever the cache asserts about `key`. No-op for uncached keys.
  virtual void update(std::uint32_t set_id, std::uint32_t key) = 0;

  // Visits every cached assertion as (set, key, mapping); used by debug sweeps.
  virtual void for_each_assertion(
      const std::function<void(std::uint32_t, std::uint32_t, Mapping)>& fn) const = 0;

  const RemapCacheStats& stats() const { return stats_; }
  std::uint32_t hit_latency_cycles() const { return hit_latency_cycles_; }

 protected:
  explicit RemapCache(std::uint32_t hit_latency_cycles) : hit_latency_cycles_(hit_latency_cycles) {}

  RemapCacheStats stats_;
  std::uint32_t hit_latency_cycles_;
};

// XOR-folds the two lowest `index_bits`-wide fields of a super-block number.
std::uint32_t id_index(std::uint64_t superblock, unsigned index_bits);

class ConventionalRemapCache final : public RemapCache {
 public:
  ConventionalRemapCache(const RemapCacheConfig& config, std::uint32_t num_sets);

  RcLookupResult lookup(std::uint32_t set_id, std::uint32_t key) override;
  void fill(std::uint32_t set_id, std::uint32_t key, const RemapLookupResult& resolution,
            const std::optional<LeafView>& leaf) override;
  void update(std::uint32_t set_id, std::uint32_t key) override;
  void for_each_assertion(
      const std::function<void(std::uint32_t, std::uint32_t, Mapping)>& fn) const override;

 private:
  struct Line {
    bool valid = false;
    std::uint64_t block = 0;  // global block number (key * num_sets + set)
    Mapping mapping;
  };

  Line* find(std::uint64_t block);

  CacheShape shape_;
  unsigned set_shift_;
  std::vector<Line> lines_;
  std::vector<std::uint32_t> fifo_;
};

class IdentityAwareRemapCache final : public RemapCache {
 public:
  // `physical_keys` bounds which set-local keys an IdCache fill may assert.
  IdentityAwareRemapCache(const RemapCacheConfig& config, std::uint32_t num_sets,
                          std::uint32_t physical_keys);

  RcLookupResult lookup(std::uint32_t set_id, std::uint32_t key) override;
  void fill(std::uint32_t set_id, std::uint32_t key, const RemapLookupResult& resolution,
            const std::optional<LeafView>& leaf) override;
  void update(std::uint32_t set_id, std::uint32_t key) override;
  void for_each_assertion(
      const std::function<void(std::uint32_t, std::uint32_t, Mapping)>& fn) const override;

  // Identity bit vector of the line covering `key`, if cached.
  std::optional<std::uint32_t> id_line_bits(std::uint32_t set_id, std::uint32_t key) const;

 private:
  struct NonIdLine {
    bool valid = false;
    std::uint64_t block = 0;
    std::uint32_t device_block = 0;
  };
  struct IdLine {
    bool valid = false;
    std::uint64_t superblock = 0;
    std::uint32_t bits = 0;
  };

  std::uint64_t superblock_of(std::uint32_t set_id, std::uint32_t key) const;
  NonIdLine* find_non_id(std::uint64_t block);
  IdLine* find_id(std::uint64_t superblock);
  const IdLine* find_id(std::uint64_t superblock) const;
  IdLine& allocate_id(std::uint64_t superblock);

  RemapCacheConfig config_;
  std::uint32_t num_sets_;
  unsigned set_shift_;
  std::uint32_t physical_keys_;
  unsigned id_index_bits_;
  std::vector<NonIdLine> non_id_;
  std::vector<std::uint32_t> non_id_fifo_;
  std::vector<IdLine> id_;
  std::vector<std::uint32_t> id_fifo_;
};

std::unique_ptr<RemapCache> make_remap_cache(RemapCacheKind kind, const RemapCacheConfig& config,
                                             std::uint32_t num_sets, std::uint32_t physical_keys);

}  // namespace hmsim
