#include "hmsim/tiering_engine.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <string>

#include "hmsim/errors.hpp"

namespace hmsim {

const char* to_string(MigrationKind kind) {
  switch (kind) {
    case MigrationKind::kNone: return "none";
    case MigrationKind::kAdmit: return "admit";
    case MigrationKind::kAdmitWithEviction: return "admit_with_eviction";
    case MigrationKind::kSwap: return "swap";
    case MigrationKind::kRestore: return "restore";
    case MigrationKind::kSkipped: return "skipped";
  }
  return "?";
}

const char* to_string(MetadataProbe probe) {
  switch (probe) {
    case MetadataProbe::kNone: return "none";
    case MetadataProbe::kRcHitId: return "rc_hit_id";
    case MetadataProbe::kRcHitNonId: return "rc_hit_nonid";
    case MetadataProbe::kTableWalk: return "table_walk";
    case MetadataProbe::kInline: return "inline";
  }
  return "?";
}

const char* to_string(TableKind kind) {
  return kind == TableKind::kRadix ? "irt" : "linear";
}

TableKind table_kind_from_string(const std::string& text) {
  if (text == "irt") return TableKind::kRadix;
  if (text == "linear") return TableKind::kLinear;
  throw ConfigError("unknown table '" + text + "' (expected irt|linear)");
}

const char* to_string(ReplacementPolicy policy) {
  return policy == ReplacementPolicy::kFifo ? "fifo" : "random";
}

ReplacementPolicy replacement_policy_from_string(const std::string& text) {
  if (text == "fifo") return ReplacementPolicy::kFifo;
  if (text == "random") return ReplacementPolicy::kRandom;
  throw ConfigError("unknown replacement policy '" + text + "' (expected fifo|random)");
}

const char* to_string(SlotKind kind) {
  switch (kind) {
    case SlotKind::kFree: return "free";
    case SlotKind::kFlat: return "flat";
    case SlotKind::kCached: return "cached";
    case SlotKind::kMetadata: return "metadata";
    case SlotKind::kPinned: return "pinned";
  }
  return "?";
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kAdmit: return "admit";
    case EventKind::kEvict: return "evict";
    case EventKind::kReclaim: return "reclaim";
    case EventKind::kSwap: return "swap";
    case EventKind::kRestore: return "restore";
  }
  return "?";
}

namespace {

constexpr std::uint32_t kUnmapped = UINT32_MAX;

std::unique_ptr<RemapTable> make_table(const EngineConfig& config, const HybridLayout& layout) {
  const IrtConfig irt{config.irt_levels, static_cast<std::uint32_t>(config.block_size)};
  if (config.table == TableKind::kRadix && config.irt_levels >= 2) {
    return std::make_unique<RadixRemapTable>(layout, irt, /*allow_overflow=*/true);
  }
  return std::make_unique<LinearRemapTable>(layout);
}

}  // namespace

TieringEngine::TieringEngine(const EngineConfig& config)
    : config_(config),
      layout_(config.block_size, config.fast_capacity, config.slow_capacity, config.num_sets,
              config.mode),
      rng_(config.seed) {
  if (config_.irt_levels == 0) throw ConfigError("irt_levels must be >= 1");
  if (config_.prefetch_bits == 0) throw ConfigError("prefetch_bits must be >= 1");
  if (config_.irt_levels == 1) config_.table = TableKind::kLinear;

  const std::uint32_t fast_blocks = layout_.fast_blocks_per_set();
  sets_.resize(layout_.num_sets());
  for (auto& set : sets_) set.table = make_table(config_, layout_);
  const MetadataRegion& region = sets_[0].table->region();

  if (config_.table == TableKind::kRadix) {
    data_blocks_ = region.data_blocks;
    lendable_base_ = region.lendable_base;
    lendable_blocks_ =
        config_.lend_saved_space ? std::min(region.lendable_blocks, fast_blocks - lendable_base_) : 0;
    region_blocks_ = region.total_blocks();
    table_overflow_ = region.overflow;
  } else {
    region_blocks_ = config_.reserve_blocks_override.value_or(region.level_blocks[0]);
    if (config_.reserve_blocks_override && region_blocks_ > fast_blocks) {
      throw ConfigError("reserve_blocks_override exceeds fast blocks per set");
    }
    data_blocks_ =
        region_blocks_ >= fast_blocks ? 0 : fast_blocks - static_cast<std::uint32_t>(region_blocks_);
    lendable_base_ = data_blocks_;
    lendable_blocks_ = 0;
  }
  candidates_ = data_blocks_ + lendable_blocks_;

  std::uint32_t flat_blocks = 0;
  if (layout_.mode() == UseMode::kFlat) {
    if (!std::has_single_bit(config_.page_size)) {
      throw ConfigError("page_size must be a power of two");
    }
    page_bytes_ = std::max<std::uint64_t>(config_.page_size,
                                          layout_.block_size() * layout_.num_sets());
    if (layout_.slow_capacity() % page_bytes_ != 0) {
      throw ConfigError("slow_capacity must be a multiple of the first-touch page size");
    }
    const std::uint32_t per_page =
        static_cast<std::uint32_t>(page_bytes_ / (layout_.block_size() * layout_.num_sets()));
    flat_blocks = data_blocks_ / per_page * per_page;
    layout_.set_flat_blocks_per_set(flat_blocks);
    next_fast_page_ = layout_.slow_capacity() / page_bytes_;
    fast_page_end_ = next_fast_page_ + flat_blocks / per_page;
    page_table_.assign(layout_.physical_capacity() / page_bytes_, kUnmapped);
  }

  for (auto& set : sets_) {
    set.slots.resize(fast_blocks);
    for (std::uint32_t j = 0; j < fast_blocks; ++j) {
      SlotState& s = set.slots[j];
      if (j < flat_blocks) {
        s.kind = SlotKind::kFlat;
      } else if (j >= data_blocks_ && config_.table == TableKind::kLinear) {
        s.kind = SlotKind::kPinned;
      } else if (config_.table == TableKind::kRadix && j >= region.level_base[0] &&
                 j - region.level_base[0] < region.level_blocks[0]) {
        s.kind = SlotKind::kPinned;
      }
    }
  }

  rc_ = make_remap_cache(config_.rcache, config_.rc_config, layout_.num_sets(),
                         layout_.physical_blocks_per_set());
}

TieringEngine::~TieringEngine() = default;

// --- first touch -----------------------------------------------------------

bool TieringEngine::touched(std::uint64_t address) const {
  if (layout_.mode() == UseMode::kCache) return true;
  const std::uint64_t page = address / page_bytes_;
  if (page >= page_table_.size()) {
    throw RangeError("address 0x" + [&] {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(address));
      return std::string(buf);
    }() + " >= physical capacity " + std::to_string(layout_.physical_capacity()));
  }
  return page_table_[page] != kUnmapped;
}

void TieringEngine::first_touch_allocate(std::uint64_t address) {
  if (layout_.mode() == UseMode::kCache || touched(address)) return;
  const std::uint64_t page = address / page_bytes_;
  std::uint64_t physical;
  if (next_fast_page_ < fast_page_end_) {
    physical = next_fast_page_++;
    ++stats_.first_touch_fast_pages;
    const std::uint64_t per_page = page_bytes_ / (layout_.block_size() * layout_.num_sets());
    const std::uint64_t first_slot =
        physical * per_page - layout_.slow_blocks_per_set();
    for (auto& set : sets_) {
      for (std::uint64_t i = 0; i < per_page; ++i) set.slots[first_slot + i].touched = true;
    }
  } else {
    physical = next_slow_page_++;
    ++stats_.first_touch_slow_pages;
  }
  page_table_[page] = static_cast<std::uint32_t>(physical);
}

std::uint64_t TieringEngine::translate(std::uint64_t address) const {
  if (layout_.mode() == UseMode::kCache) return address;
  if (!touched(address)) {
    throw TraceError("flat-mode access to a page that was never first-touched", 0);
  }
  return static_cast<std::uint64_t>(page_table_[address / page_bytes_]) * page_bytes_ +
         address % page_bytes_;
}

// --- access flow -----------------------------------------------------------

AccessOutcome TieringEngine::access(const Request& request) {
  if (layout_.mode() == UseMode::kFlat && !touched(request.address)) {
    if (config_.strict_first_touch) {
      throw TraceError("flat-mode access to a page that was never first-touched", 0);
    }
    first_touch_allocate(request.address);
  }
  const AddressParts parts = decompose_physical(translate(request.address), layout_);
  const std::uint32_t set_id = parts.set_id;
  const std::uint32_t key = parts.local_block;
  SetState& set = sets_[set_id];

  ++stats_.requests;
  ++(request.is_write() ? stats_.writes : stats_.reads);
  traffic_.demand += kDemandBytes;
  reclaims_this_access_ = 0;

  AccessOutcome outcome;
  outcome.set_id = set_id;
  std::uint32_t device = key;
  bool resolved = false;
  if (rc_) {
    outcome.rc_probed = true;
    const RcLookupResult hit = rc_->lookup(set_id, key);
    if (hit.hit()) {
      device = hit.device_block;
      outcome.probe = hit.outcome == RcLookupResult::Outcome::kIdentityHit
                          ? MetadataProbe::kRcHitId
                          : MetadataProbe::kRcHitNonId;
      resolved = true;
    }
  }
  if (!resolved) {
    const RemapLookupResult walk = set.table->lookup(key);
    ++stats_.table_walks;
    outcome.probe = MetadataProbe::kTableWalk;
    outcome.walk_levels = walk.levels_touched;
    outcome.walk_hit_slow =
        table_overflow_ &&
        !in_fast(set.table->region().slot_of(set.table->levels() - 1, walk.leaf_block));
    traffic_.metadata += kDemandBytes * walk.levels_touched;
    device = walk.mapping.resolve(key);
    if (rc_) {
      std::optional<LeafView> leaf;
      if (config_.rcache == RemapCacheKind::kIdentityAware && config_.rc_config.batch_fill &&
          walk.mapping.is_identity()) {
        leaf = set.table->leaf_view(walk.leaf_block);
        // The walk fetched one burst of the leaf; the rest of the super-block
        // needs a second one.
        if (leaf->allocated) traffic_.metadata += kDemandBytes;
      }
      rc_->fill(set_id, key, walk, leaf);
    }
  }
  outcome.device_block = device;
  if (outcome.rc_probed && device == key) ++stats_.rc_identity_lookups;

  const std::uint32_t slow_blocks = layout_.slow_blocks_per_set();
  if (device >= slow_blocks) {
    outcome.served_by = ServedBy::kFast;
    ++stats_.fast_served;
    SlotState& s = set.slots[device - slow_blocks];
    if (request.is_write() && s.kind == SlotKind::kCached) s.dirty = true;
  } else {
    outcome.served_by = ServedBy::kSlow;
    ++stats_.slow_served;
    if (key < slow_blocks) {
      admit(set_id, key, outcome);
    } else {
      // A flat-area owner displaced by a swap comes back to its slot.
      outcome.victim = set.slots[key - slow_blocks].guest;
      restore(set_id, key - slow_blocks);
      outcome.migration = MigrationKind::kRestore;
    }
  }
  outcome.reclaims = reclaims_this_access_;
  return outcome;
}

// --- replacement -----------------------------------------------------------

bool TieringEngine::lendable_is_metadata(SetState& set, std::uint32_t slot, bool use_buffer) {
  const std::uint64_t chunk = (slot - lendable_base_) / config_.prefetch_bits;
  if (!use_buffer || set.prefetched_chunk != chunk) {
    ++stats_.index_bit_fetches;
    traffic_.metadata += kDemandBytes;
    if (use_buffer) set.prefetched_chunk = chunk;
  }
  return set.slots[slot].kind == SlotKind::kMetadata;
}

bool TieringEngine::eligible(SetState& set, std::uint32_t slot, std::uint32_t home) {
  const SlotState& s = set.slots[slot];
  if (s.kind == SlotKind::kMetadata || s.kind == SlotKind::kPinned) return false;
  if (s.kind == SlotKind::kFlat && !s.touched) return false;
  if (is_lendable(slot)) {
    // The slot must not be one the new entries are about to claim.
    const auto contains = [slot](const std::vector<std::uint32_t>& v) {
      return std::find(v.begin(), v.end(), slot) != v.end();
    };
    if (contains(set.table->missing_slots(home))) return false;
    if (contains(set.table->missing_slots(slot_key(slot)))) return false;
  }
  return true;
}

std::optional<std::uint32_t> TieringEngine::fifo_victim(SetState& set, std::uint32_t home) {
  for (std::uint32_t step = 0; step < candidates_; ++step) {
    const std::uint32_t slot = candidate_slot(set.cursor);
    set.cursor = set.cursor + 1 == candidates_ ? 0 : set.cursor + 1;
    if (is_lendable(slot) && lendable_is_metadata(set, slot, true)) continue;
    if (eligible(set, slot, home)) return slot;
  }
  return std::nullopt;
}

std::optional<std::uint32_t> TieringEngine::random_victim(SetState& set, std::uint32_t home) {
  for (std::uint32_t attempt = 0; attempt < config_.random_retries; ++attempt) {
    const auto slot = candidate_slot(static_cast<std::uint32_t>(uniform_below(rng_, candidates_)));
    if (is_lendable(slot) && lendable_is_metadata(set, slot, false)) continue;
    if (eligible(set, slot, home)) return slot;
  }
  return fifo_victim(set, home);
}

std::optional<std::uint32_t> TieringEngine::next_victim(std::uint32_t set_id, std::uint32_t home) {
  if (candidates_ == 0) return std::nullopt;
  SetState& set = sets_.at(set_id);
  return config_.policy == ReplacementPolicy::kFifo ? fifo_victim(set, home)
                                                    : random_victim(set, home);
}

// --- migrations ------------------------------------------------------------

void TieringEngine::admit(std::uint32_t set_id, std::uint32_t home, AccessOutcome& outcome) {
  const std::optional<std::uint32_t> victim = next_victim(set_id, home);
  if (!victim) {
    ++stats_.skipped_admissions;
    outcome.migration = MigrationKind::kSkipped;
    return;
  }
  const std::uint32_t j = *victim;
  SlotState& s = sets_[set_id].slots[j];
  const std::uint64_t block = layout_.block_size();

  MigrationKind kind = MigrationKind::kAdmit;
  if (s.kind == SlotKind::kCached) {
    outcome.victim = s.guest;
    evict(set_id, j, EventKind::kEvict);
    kind = MigrationKind::kAdmitWithEviction;
  } else if (s.kind == SlotKind::kFlat && s.has_guest()) {
    outcome.victim = s.guest;
    restore(set_id, j);
  }

  if (s.kind == SlotKind::kFlat) {
    // Exchange with the owner: both now hold forward entries to each other.
    s.guest = home;
    write_entry(set_id, home, slot_key(j));
    write_entry(set_id, slot_key(j), home);
    traffic_.fill += block;
    traffic_.writeback += block;
    ++stats_.swaps;
    ++stats_.writebacks;
    rc_update(set_id, home);
    rc_update(set_id, slot_key(j));
    record(EventKind::kSwap, set_id, home, j);
    outcome.migration = MigrationKind::kSwap;
    return;
  }

  s.kind = SlotKind::kCached;
  s.guest = home;
  s.dirty = false;
  write_entry(set_id, home, slot_key(j));
  write_entry(set_id, slot_key(j), home);
  if (sets_[set_id].slots[j].kind != SlotKind::kCached) {
    throw InvariantViolation("slot " + std::to_string(j) + " was reclaimed during its own fill");
  }
  traffic_.fill += block;
  ++stats_.admissions;
  rc_update(set_id, home);
  record(EventKind::kAdmit, set_id, home, j);
  outcome.migration = kind;
}

void TieringEngine::evict(std::uint32_t set_id, std::uint32_t slot, EventKind kind) {
  SlotState& s = sets_[set_id].slots[slot];
  if (s.kind != SlotKind::kCached) {
    throw InvariantViolation("evicting slot " + std::to_string(slot) + " that holds " +
                             to_string(s.kind));
  }
  const std::uint32_t home = s.guest;
  if (s.dirty) {
    traffic_.writeback += layout_.block_size();
    ++stats_.writebacks;
  }
  s.kind = SlotKind::kFree;
  s.guest = kInvalidEntry;
  s.dirty = false;
  remove_entry(set_id, home);
  remove_entry(set_id, slot_key(slot));
  rc_update(set_id, home);
  if (kind == EventKind::kReclaim) {
    ++stats_.reclaims;
    ++reclaims_this_access_;
  } else {
    ++stats_.evictions;
  }
  record(kind, set_id, home, slot);
}

void TieringEngine::restore(std::uint32_t set_id, std::uint32_t slot) {
  SlotState& s = sets_[set_id].slots[slot];
  if (s.kind != SlotKind::kFlat || !s.has_guest()) {
    throw InvariantViolation("restore of slot " + std::to_string(slot) + " with no guest");
  }
  const std::uint32_t guest = s.guest;
  s.guest = kInvalidEntry;
  s.dirty = false;
  remove_entry(set_id, guest);
  remove_entry(set_id, slot_key(slot));
  traffic_.writeback += layout_.block_size();
  traffic_.fill += layout_.block_size();
  ++stats_.restores;
  ++stats_.writebacks;
  rc_update(set_id, guest);
  rc_update(set_id, slot_key(slot));
  record(EventKind::kRestore, set_id, guest, slot);
}

void TieringEngine::write_entry(std::uint32_t set_id, std::uint32_t key, std::uint32_t value) {
  SetState& set = sets_[set_id];
  // Metadata has priority: data cached in a slot the path needs goes home.
  for (bool again = true; again;) {
    again = false;
    for (const std::uint32_t m : set.table->missing_slots(key)) {
      if (!in_fast(m)) continue;
      const SlotKind kind = set.slots[m].kind;
      if (kind == SlotKind::kCached) {
        evict(set_id, m, EventKind::kReclaim);
        again = true;
        break;
      }
      if (kind != SlotKind::kFree) {
        throw InvariantViolation("table block slot " + std::to_string(m) + " holds " +
                                 to_string(kind));
      }
    }
  }
  const InsertResult inserted = set.table->insert(key, value);
  traffic_.metadata += kDemandBytes;
  for (const std::uint32_t m : inserted.allocated) {
    if (in_fast(m)) set.slots[m].kind = SlotKind::kMetadata;
    ++stats_.metadata_blocks_allocated;
    // Initialize the block and set its bit in the parent.
    traffic_.metadata += layout_.block_size() + kDemandBytes;
  }
}

void TieringEngine::remove_entry(std::uint32_t set_id, std::uint32_t key) {
  SetState& set = sets_[set_id];
  const RemoveResult removed = set.table->remove(key);
  traffic_.metadata += kDemandBytes;
  for (const std::uint32_t m : removed.freed) {
    ++stats_.metadata_blocks_freed;
    traffic_.metadata += kDemandBytes;
    if (!in_fast(m)) continue;
    if (set.slots[m].kind != SlotKind::kMetadata) {
      throw InvariantViolation("freed table block slot " + std::to_string(m) + " holds " +
                               to_string(set.slots[m].kind));
    }
    set.slots[m].kind = SlotKind::kFree;
  }
}

void TieringEngine::rc_update(std::uint32_t set_id, std::uint32_t key) {
  if (rc_ && key < layout_.physical_blocks_per_set()) rc_->update(set_id, key);
}

void TieringEngine::record(EventKind kind, std::uint32_t set_id, std::uint32_t block,
                           std::uint32_t slot) {
  events_hash_.add(static_cast<std::uint64_t>(kind), 1);
  events_hash_.add(set_id, 4);
  events_hash_.add(block, 4);
  events_hash_.add(slot, 4);
  if (config_.record_events) events_.push_back({kind, set_id, block, slot});
}

// --- inspection ------------------------------------------------------------

std::uint32_t TieringEngine::resolve(std::uint32_t set_id, std::uint32_t key) const {
  return sets_.at(set_id).table->lookup(key).mapping.resolve(key);
}

IrtFootprint TieringEngine::footprint() const {
  IrtFootprint total;
  for (const auto& set : sets_) total += set.table->footprint();
  return total;
}

std::uint64_t TieringEngine::placement_digest() const {
  Fnv1a hash;
  for (const auto& set : sets_) {
    for (const SlotState& s : set.slots) {
      hash.add(static_cast<std::uint64_t>(s.kind), 1);
      hash.add(s.guest, 4);
    }
  }
  return hash.value();
}

void TieringEngine::check_invariants() const {
  const std::uint32_t slow_blocks = layout_.slow_blocks_per_set();
  const std::uint32_t flat_blocks = layout_.flat_blocks_per_set();
  for (std::uint32_t set_id = 0; set_id < sets_.size(); ++set_id) {
    const SetState& set = sets_[set_id];
    const RemapTable& table = *set.table;
    table.check_consistency();
    const auto fail = [set_id](std::uint32_t slot, const std::string& what) {
      throw InvariantViolation("set " + std::to_string(set_id) + " slot " + std::to_string(slot) +
                               ": " + what);
    };

    std::uint64_t guests = 0;
    for (std::uint32_t j = 0; j < set.slots.size(); ++j) {
      const SlotState& s = set.slots[j];
      const Mapping inverse = table.lookup(slot_key(j)).mapping;
      const bool metadata = config_.table == TableKind::kRadix && table.slot_holds_metadata(j);
      if ((s.kind == SlotKind::kMetadata) != (metadata && s.kind != SlotKind::kPinned)) {
        fail(j, std::string("slot kind ") + to_string(s.kind) + " disagrees with the table");
      }
      if (s.kind == SlotKind::kPinned && j < data_blocks_) fail(j, "pinned slot in the data area");
      if ((s.kind == SlotKind::kFlat) != (j < flat_blocks)) fail(j, "flat-area mismatch");
      if (s.kind == SlotKind::kCached || (s.kind == SlotKind::kFlat && s.has_guest())) {
        ++guests;
        if (s.guest >= slow_blocks) fail(j, "guest is not a slow-memory block");
        if (table.lookup(s.guest).mapping != Mapping::remapped(slot_key(j))) {
          fail(j, "forward entry of guest " + std::to_string(s.guest) + " does not point here");
        }
        if (inverse != Mapping::remapped(s.guest)) fail(j, "inverse entry missing or wrong");
      } else {
        if (s.has_guest()) fail(j, "stale guest");
        if (!inverse.is_identity()) fail(j, "entry present for an empty slot");
      }
      if (s.dirty && s.kind != SlotKind::kCached) fail(j, "dirty bit on a non-cached slot");
    }

    std::uint64_t entries = 0;
    table.for_each_entry([&](std::uint32_t key, std::uint32_t value) {
      ++entries;
      const bool forward = key < slow_blocks;
      const std::uint32_t slot = forward ? value - slow_blocks : key - slow_blocks;
      const std::uint32_t home = forward ? key : value;
      if (forward && value < slow_blocks) fail(slot, "slow block remapped to slow memory");
      if (slot >= set.slots.size() || set.slots[slot].guest != home) {
        fail(slot, "entry " + std::to_string(key) + " -> " + std::to_string(value) +
                       " has no matching slot");
      }
    });
    if (entries != 2 * guests) {
      throw InvariantViolation("set " + std::to_string(set_id) + ": " + std::to_string(entries) +
                               " entries for " + std::to_string(guests) + " relocated blocks");
    }
  }

  if (rc_) {
    rc_->for_each_assertion([this](std::uint32_t set_id, std::uint32_t key, Mapping mapping) {
      if (sets_[set_id].table->lookup(key).mapping != mapping) {
        throw InvariantViolation("remap cache holds a stale assertion for set " +
                                 std::to_string(set_id) + " key " + std::to_string(key));
      }
    });
  }
}

}  // namespace hmsim
