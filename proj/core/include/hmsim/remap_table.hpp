#pragma once

// Set-local remap tables.
//
// RadixRemapTable is the hardware-managed multi-level table: a resident top
// level of presence bit vectors, optional demand-allocated middle levels, and
// demand-allocated leaf blocks of 4-byte entries. Every block has a fixed
// slot in the set's metadata region, so allocation never moves anything.
//
// LinearRemapTable is the dense one-entry-per-key baseline. It doubles as the
// reference model for the radix table in tests.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hmsim/geometry.hpp"

namespace hmsim {

struct Mapping {
  enum class Kind : std::uint8_t { kIdentity, kRemapped };

  Kind kind = Kind::kIdentity;
  std::uint32_t device_block = 0;

  static Mapping identity() { return {}; }
  static Mapping remapped(std::uint32_t block) { return {Kind::kRemapped, block}; }

  bool is_identity() const { return kind == Kind::kIdentity; }
  // Device block this key resolves to.
  std::uint32_t resolve(std::uint32_t key) const {
    return is_identity() ? key : device_block;
  }
  bool operator==(const Mapping&) const = default;
};

struct RemapLookupResult {
  Mapping mapping;
  std::uint32_t levels_touched = 0;
  std::uint32_t leaf_block = 0;  // leaf index covering the key
};

struct InsertResult {
  std::optional<std::uint32_t> allocated_leaf;  // slot of a freshly claimed leaf
  std::vector<std::uint32_t> allocated;         // every claimed slot, top-down
};

struct RemoveResult {
  std::optional<std::uint32_t> freed_leaf;
  std::vector<std::uint32_t> freed;  // every released slot, bottom-up
};

struct IrtFootprint {
  std::uint64_t intermediate_bytes = 0;
  std::uint64_t allocated_leaf_blocks = 0;
  std::uint64_t leaf_bytes = 0;
  std::uint64_t fast_capacity = 0;  // denominator for fraction_of_fast
  double fraction_of_fast = 0.0;

  IrtFootprint& operator+=(const IrtFootprint& other);
};

// View of one leaf block as fetched from fast memory.
struct LeafView {
  bool allocated = false;
  std::uint32_t first_key = 0;
  std::uint32_t keys = 0;  // keys the leaf covers, allocated or not
  std::span<const std::uint32_t> entries;  // empty when not allocated
};

class RemapTable {
 public:
  virtual ~RemapTable() = default;

  virtual RemapLookupResult lookup(std::uint32_t key) const = 0;
  virtual InsertResult insert(std::uint32_t key, std::uint32_t device_block) = 0;
  // Throws ContractViolation if the key is currently identity-mapped.
  virtual RemoveResult remove(std::uint32_t key) = 0;

  // Slots insert(key) would claim, top-down. Empty if the path is allocated.
  virtual std::vector<std::uint32_t> missing_slots(std::uint32_t key) const = 0;
  // True when `slot` currently holds metadata (resident or allocated).
  virtual bool slot_holds_metadata(std::uint32_t slot) const = 0;

  virtual LeafView leaf_view(std::uint32_t leaf_block) const = 0;
  virtual IrtFootprint footprint() const = 0;

  // Verifies the internal bookkeeping (presence bits vs. live entries).
  virtual void check_consistency() const = 0;

  // Visits every non-sentinel entry in key order.
  template <typename Fn>
  void for_each_entry(Fn&& fn) const {
    const std::uint64_t keys = region().key_count;
    const std::uint32_t per_leaf = config().leaf_entries_per_block();
    for (std::uint32_t leaf = 0; leaf < region().leaf_blocks; ++leaf) {
      const LeafView view = leaf_view(leaf);
      if (!view.allocated) continue;
      for (std::uint32_t i = 0; i < per_leaf; ++i) {
        const std::uint64_t key = static_cast<std::uint64_t>(leaf) * per_leaf + i;
        if (key >= keys) break;
        if (view.entries[i] != kInvalidEntry) fn(static_cast<std::uint32_t>(key), view.entries[i]);
      }
    }
  }

  // One `key -> device_block` line per entry, grouped by allocated leaf.
  void dump(std::ostream& out) const;

  const MetadataRegion& region() const { return region_; }
  const IrtConfig& config() const { return config_; }
  std::uint32_t levels() const { return config_.levels; }
  std::uint64_t key_count() const { return region_.key_count; }

 protected:
  RemapTable(IrtConfig config, MetadataRegion region, std::uint64_t fast_bytes_per_set)
      : config_(config), region_(std::move(region)), fast_bytes_per_set_(fast_bytes_per_set) {}

  void check_key(std::uint32_t key) const;
  void check_device(std::uint32_t device_block) const;

  IrtConfig config_;
  MetadataRegion region_;
  std::uint64_t fast_bytes_per_set_;
};

class RadixRemapTable final : public RemapTable {
 public:
  // Requires config.levels >= 2. See metadata_region() for `allow_overflow`.
  RadixRemapTable(const HybridLayout& layout, const IrtConfig& config,
                  bool allow_overflow = false);
  // Table over an explicit key count with no data area (tests and sizing).
  RadixRemapTable(const IrtConfig& config, std::uint64_t key_count);

  RemapLookupResult lookup(std::uint32_t key) const override;
  InsertResult insert(std::uint32_t key, std::uint32_t device_block) override;
  RemoveResult remove(std::uint32_t key) override;
  std::vector<std::uint32_t> missing_slots(std::uint32_t key) const override;
  bool slot_holds_metadata(std::uint32_t slot) const override;
  LeafView leaf_view(std::uint32_t leaf_block) const override;
  IrtFootprint footprint() const override;
  void check_consistency() const override;

  bool block_allocated(std::uint32_t level, std::uint32_t index) const;
  std::uint64_t allocated_blocks(std::uint32_t level) const { return allocated_count_[level]; }

 private:
  void init();
  // Index of the block at `level` on the path to `key`.
  std::uint32_t path_index(std::uint32_t key, std::uint32_t level) const;

  std::vector<std::uint32_t> entries_;
  std::vector<std::uint16_t> leaf_live_;
  // presence_[level][index] for levels >= 1; the top level is always resident.
  std::vector<std::vector<std::uint8_t>> presence_;
  // child_count_[level][index]: allocated children of a middle-level block.
  std::vector<std::vector<std::uint32_t>> child_count_;
  std::vector<std::uint64_t> allocated_count_;
};

class LinearRemapTable final : public RemapTable {
 public:
  explicit LinearRemapTable(const HybridLayout& layout);
  // The whole table is resident even when it does not fit in fast memory;
  // such a configuration is degenerate and the caller flags it.
  LinearRemapTable(std::uint32_t block_size, std::uint64_t key_count,
                   std::uint64_t fast_bytes_per_set);

  RemapLookupResult lookup(std::uint32_t key) const override;
  InsertResult insert(std::uint32_t key, std::uint32_t device_block) override;
  RemoveResult remove(std::uint32_t key) override;
  std::vector<std::uint32_t> missing_slots(std::uint32_t) const override { return {}; }
  bool slot_holds_metadata(std::uint32_t slot) const override;
  LeafView leaf_view(std::uint32_t leaf_block) const override;
  IrtFootprint footprint() const override;
  void check_consistency() const override {}

  // Dense-array update; returns the previous mapping.
  Mapping update(std::uint32_t key, Mapping mapping);

 private:
  std::vector<std::uint32_t> entries_;
};

// Linear table region for a layout, in blocks per set (may exceed fast memory).
std::uint64_t linear_table_blocks(const HybridLayout& layout);

// Fraction of fast memory the linear table occupies (>= 1.0 is degenerate).
double linear_table_fraction(const HybridLayout& layout);

}  // namespace hmsim
