#pragma once

// Remap-table-driven hybrid memory: the access flow, slow-swap admission and
// eviction, lending of unallocated metadata slots to data, and flat-mode
// first-touch allocation.
//
// Fast slots of a set are laid out as
//
//   [flat area | cache area][demand-allocated table blocks][resident top level]
//
// Replacement scans the data area followed by the lendable range. A slot that
// the table needs back for metadata is reclaimed at once; its cached block is
// sent home.
//
// When the complete table does not fit (very high capacity ratios) there is
// no data area: the top level comes first, the lower levels fill the rest of
// fast memory, and the remaining table blocks sit in slow memory.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "hmsim/geometry.hpp"
#include "hmsim/memory_system.hpp"
#include "hmsim/rng.hpp"

namespace hmsim {

enum class TableKind : std::uint8_t { kRadix, kLinear };
enum class ReplacementPolicy : std::uint8_t { kFifo, kRandom };

const char* to_string(TableKind kind);
TableKind table_kind_from_string(const std::string& text);
const char* to_string(ReplacementPolicy policy);
ReplacementPolicy replacement_policy_from_string(const std::string& text);

struct EngineConfig {
  std::uint64_t block_size = 256;
  std::uint64_t fast_capacity = 16ull << 20;
  std::uint64_t slow_capacity = 512ull << 20;
  std::uint32_t num_sets = 4;
  UseMode mode = UseMode::kCache;

  TableKind table = TableKind::kRadix;
  std::uint32_t irt_levels = 2;
  bool lend_saved_space = true;
  // Linear table only: reserve this many blocks per set instead of the dense
  // table size. Used to line a linear baseline up with a radix region.
  std::optional<std::uint32_t> reserve_blocks_override;

  RemapCacheKind rcache = RemapCacheKind::kIdentityAware;
  RemapCacheConfig rc_config;

  ReplacementPolicy policy = ReplacementPolicy::kFifo;
  std::uint32_t prefetch_bits = 64;
  std::uint32_t random_retries = 64;
  std::uint64_t seed = 1;

  // Flat mode: first-touch granularity (rounded up to block_size * num_sets).
  std::uint64_t page_size = 4096;
  // Flat mode: reject accesses to pages that were never first-touched.
  bool strict_first_touch = false;

  bool record_events = false;
};

enum class SlotKind : std::uint8_t {
  kFree,      // empty data or lendable slot
  kFlat,      // OS-visible fast block; may host a swapped-in guest
  kCached,    // holds a copy of a slow block
  kMetadata,  // allocated table block
  kPinned,    // resident table region
};
const char* to_string(SlotKind kind);

struct SlotState {
  SlotKind kind = SlotKind::kFree;
  bool dirty = false;
  bool touched = false;  // flat slots: owner page was first-touched
  std::uint32_t guest = kInvalidEntry;  // home block of the cached or swapped-in block

  bool has_guest() const { return guest != kInvalidEntry; }
};

enum class EventKind : std::uint8_t { kAdmit, kEvict, kReclaim, kSwap, kRestore };
const char* to_string(EventKind kind);

struct MigrationEvent {
  EventKind kind;
  std::uint32_t set_id;
  std::uint32_t block;  // home block moved
  std::uint32_t slot;   // fast slot involved
  bool operator==(const MigrationEvent&) const = default;
};

class TieringEngine final : public MemorySystem {
 public:
  explicit TieringEngine(const EngineConfig& config);
  ~TieringEngine() override;

  AccessOutcome access(const Request& request) override;

  // Flat mode: maps the page holding `address` to the next free fast page,
  // or to the next slow page once fast pages run out. No-op if already mapped.
  void first_touch_allocate(std::uint64_t address);
  bool touched(std::uint64_t address) const;
  // Trace address to physical address (identity in cache mode).
  std::uint64_t translate(std::uint64_t address) const;

  // Next replacement victim for admitting `home` into `set_id`, advancing the
  // policy state. Exposed for tests.
  std::optional<std::uint32_t> next_victim(std::uint32_t set_id, std::uint32_t home);

  const EngineStats& stats() const override { return stats_; }
  const Traffic& traffic() const override { return traffic_; }
  IrtFootprint footprint() const override;
  const RemapCache* remap_cache() const override { return rc_.get(); }
  std::uint64_t fast_capacity() const override { return layout_.fast_capacity(); }
  std::uint32_t block_size() const override {
    return static_cast<std::uint32_t>(layout_.block_size());
  }
  std::uint64_t event_hash() const override { return events_hash_.value(); }
  std::uint64_t placement_digest() const override;
  void check_invariants() const override;

  const EngineConfig& config() const { return config_; }
  const HybridLayout& layout() const { return layout_; }
  const RemapTable& table(std::uint32_t set_id) const { return *sets_.at(set_id).table; }
  const SlotState& slot(std::uint32_t set_id, std::uint32_t slot) const {
    return sets_.at(set_id).slots.at(slot);
  }
  // Current device block of `key` per the table.
  std::uint32_t resolve(std::uint32_t set_id, std::uint32_t key) const;

  std::uint32_t data_blocks_per_set() const { return data_blocks_; }
  std::uint32_t candidate_slots_per_set() const { return candidates_; }
  std::uint32_t lendable_base() const { return lendable_base_; }
  std::uint32_t lendable_blocks() const { return lendable_blocks_; }
  std::uint64_t table_region_blocks_per_set() const { return region_blocks_; }
  // The resident table leaves no room for data.
  bool degenerate() const { return candidates_ == 0; }
  // Part of the table region had to be placed in slow memory.
  bool table_overflow() const { return table_overflow_; }
  const std::vector<MigrationEvent>& events() const { return events_; }

 private:
  struct SetState {
    std::unique_ptr<RemapTable> table;
    std::vector<SlotState> slots;
    std::uint32_t cursor = 0;
    std::uint64_t prefetched_chunk = UINT64_MAX;
  };

  std::uint32_t slot_key(std::uint32_t slot) const { return layout_.slow_blocks_per_set() + slot; }
  std::uint32_t candidate_slot(std::uint32_t position) const {
    return position < data_blocks_ ? position : lendable_base_ + (position - data_blocks_);
  }
  bool in_fast(std::uint32_t slot) const { return slot < layout_.fast_blocks_per_set(); }
  bool is_lendable(std::uint32_t slot) const {
    return slot >= lendable_base_ && slot - lendable_base_ < lendable_blocks_;
  }

  bool eligible(SetState& set, std::uint32_t slot, std::uint32_t home);
  bool lendable_is_metadata(SetState& set, std::uint32_t slot, bool use_buffer);
  std::optional<std::uint32_t> fifo_victim(SetState& set, std::uint32_t home);
  std::optional<std::uint32_t> random_victim(SetState& set, std::uint32_t home);

  void admit(std::uint32_t set_id, std::uint32_t home, AccessOutcome& outcome);
  void restore(std::uint32_t set_id, std::uint32_t slot);
  void evict(std::uint32_t set_id, std::uint32_t slot, EventKind kind);
  void write_entry(std::uint32_t set_id, std::uint32_t key, std::uint32_t value);
  void remove_entry(std::uint32_t set_id, std::uint32_t key);
  void rc_update(std::uint32_t set_id, std::uint32_t key);
  void record(EventKind kind, std::uint32_t set_id, std::uint32_t block, std::uint32_t slot);

  EngineConfig config_;
  HybridLayout layout_;
  std::vector<SetState> sets_;
  std::unique_ptr<RemapCache> rc_;
  Rng rng_;

  std::uint32_t data_blocks_ = 0;
  std::uint32_t lendable_base_ = 0;
  std::uint32_t lendable_blocks_ = 0;
  std::uint32_t candidates_ = 0;
  std::uint64_t region_blocks_ = 0;
  bool table_overflow_ = false;

  // Flat-mode page table: trace page -> physical page.
  std::uint64_t page_bytes_ = 0;
  std::vector<std::uint32_t> page_table_;
  std::uint64_t next_fast_page_ = 0;
  std::uint64_t fast_page_end_ = 0;
  std::uint64_t next_slow_page_ = 0;

  EngineStats stats_;
  Traffic traffic_;
  Fnv1a events_hash_;
  std::vector<MigrationEvent> events_;
  std::uint32_t reclaims_this_access_ = 0;
};

}  // namespace hmsim
