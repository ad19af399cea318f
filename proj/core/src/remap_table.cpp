#include "hmsim/remap_table.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "hmsim/errors.hpp"

namespace hmsim {

IrtFootprint& IrtFootprint::operator+=(const IrtFootprint& other) {
  intermediate_bytes += other.intermediate_bytes;
  allocated_leaf_blocks += other.allocated_leaf_blocks;
  leaf_bytes += other.leaf_bytes;
  fast_capacity += other.fast_capacity;
  fraction_of_fast = fast_capacity == 0
                         ? 0.0
                         : static_cast<double>(intermediate_bytes + leaf_bytes) /
                               static_cast<double>(fast_capacity);
  return *this;
}

void RemapTable::check_key(std::uint32_t key) const {
  if (key >= region_.key_count) {
    throw RangeError("remap key " + std::to_string(key) + " >= key space " +
                     std::to_string(region_.key_count));
  }
}

void RemapTable::check_device(std::uint32_t device_block) const {
  if (device_block >= region_.key_count) {
    throw RangeError("device block " + std::to_string(device_block) + " >= per-set limit " +
                     std::to_string(region_.key_count));
  }
}

void RemapTable::dump(std::ostream& out) const {
  const std::uint32_t per_leaf = config_.leaf_entries_per_block();
  for (std::uint32_t leaf = 0; leaf < region_.leaf_blocks; ++leaf) {
    const LeafView view = leaf_view(leaf);
    if (!view.allocated) continue;
    bool header = false;
    for (std::uint32_t i = 0; i < view.entries.size(); ++i) {
      if (view.entries[i] == kInvalidEntry) continue;
      if (!header) {
        out << "leaf " << leaf << " slot " << region_.slot_of(region_.levels - 1, leaf) << '\n';
        header = true;
      }
      out << (static_cast<std::uint64_t>(leaf) * per_leaf + i) << " -> " << view.entries[i]
          << '\n';
    }
  }
}

// --- RadixRemapTable -------------------------------------------------------

RadixRemapTable::RadixRemapTable(const HybridLayout& layout, const IrtConfig& config,
                                 bool allow_overflow)
    : RemapTable(config, metadata_region(layout, config, allow_overflow),
                 static_cast<std::uint64_t>(layout.fast_blocks_per_set()) * layout.block_size()) {
  init();
}

namespace {

MetadataRegion standalone_region(const IrtConfig& config, std::uint64_t key_count) {
  MetadataRegion region;
  region.levels = config.levels;
  region.key_count = key_count;
  region.level_blocks = table_level_blocks(key_count, config);
  region.level_base.resize(config.levels);
  std::uint32_t cursor = 0;
  for (std::uint32_t level = 1; level < config.levels; ++level) {
    region.level_base[level] = cursor;
    cursor += region.level_blocks[level];
  }
  region.lendable_blocks = cursor;
  region.level_base[0] = cursor;
  region.intermediate_base = cursor;
  region.intermediate_blocks = region.level_blocks[0];
  region.leaf_base = region.level_base[config.levels - 1];
  region.leaf_blocks = region.level_blocks[config.levels - 1];
  region.fast_slots = region.total_blocks();
  return region;
}

}  // namespace

RadixRemapTable::RadixRemapTable(const IrtConfig& config, std::uint64_t key_count)
    : RemapTable(config, standalone_region(config, key_count), 0) {
  fast_bytes_per_set_ = static_cast<std::uint64_t>(region_.total_blocks()) * config.block_size;
  init();
}

void RadixRemapTable::init() {
  if (config_.levels < 2) throw ConfigError("radix remap table needs at least 2 levels");
  if (region_.key_count > kInvalidEntry) throw ConfigError("remap key space exceeds 32 bits");
  const std::uint32_t levels = config_.levels;
  const std::uint32_t per_leaf = config_.leaf_entries_per_block();
  entries_.assign(static_cast<std::size_t>(region_.leaf_blocks) * per_leaf, kInvalidEntry);
  leaf_live_.assign(region_.leaf_blocks, 0);
  presence_.assign(levels, {});
  child_count_.assign(levels, {});
  for (std::uint32_t level = 1; level < levels; ++level) {
    presence_[level].assign(region_.level_blocks[level], 0);
    if (level + 1 < levels) child_count_[level].assign(region_.level_blocks[level], 0);
  }
  allocated_count_.assign(levels, 0);
  allocated_count_[0] = region_.level_blocks[0];
}

std::uint32_t RadixRemapTable::path_index(std::uint32_t key, std::uint32_t level) const {
  std::uint64_t index = key / config_.leaf_entries_per_block();
  for (std::uint32_t l = config_.levels - 1; l > level; --l) index /= config_.intermediate_fanout();
  return static_cast<std::uint32_t>(index);
}

bool RadixRemapTable::block_allocated(std::uint32_t level, std::uint32_t index) const {
  if (level == 0) return true;
  return presence_[level][index] != 0;
}

RemapLookupResult RadixRemapTable::lookup(std::uint32_t key) const {
  check_key(key);
  RemapLookupResult result;
  // All levels sit at fixed addresses and are probed in parallel.
  result.levels_touched = config_.levels;
  result.leaf_block = key / config_.leaf_entries_per_block();
  for (std::uint32_t level = 1; level < config_.levels; ++level) {
    if (!presence_[level][path_index(key, level)]) return result;
  }
  const std::uint32_t entry = entries_[key];
  if (entry != kInvalidEntry) result.mapping = Mapping::remapped(entry);
  return result;
}

InsertResult RadixRemapTable::insert(std::uint32_t key, std::uint32_t device_block) {
  check_key(key);
  check_device(device_block);
  InsertResult result;
  const std::uint32_t leaf_level = config_.levels - 1;
  for (std::uint32_t level = 1; level < config_.levels; ++level) {
    const std::uint32_t index = path_index(key, level);
    if (presence_[level][index]) continue;
    presence_[level][index] = 1;
    ++allocated_count_[level];
    if (level >= 2) ++child_count_[level - 1][path_index(key, level - 1)];
    const std::uint32_t slot = region_.slot_of(level, index);
    result.allocated.push_back(slot);
    if (level == leaf_level) result.allocated_leaf = slot;
  }
  std::uint32_t& entry = entries_[key];
  if (entry == kInvalidEntry) ++leaf_live_[key / config_.leaf_entries_per_block()];
  entry = device_block;
  return result;
}

RemoveResult RadixRemapTable::remove(std::uint32_t key) {
  check_key(key);
  if (lookup(key).mapping.is_identity()) {
    throw ContractViolation("remove of identity-mapped key " + std::to_string(key));
  }
  RemoveResult result;
  entries_[key] = kInvalidEntry;
  const std::uint32_t leaf = key / config_.leaf_entries_per_block();
  if (--leaf_live_[leaf] != 0) return result;

  const std::uint32_t leaf_level = config_.levels - 1;
  presence_[leaf_level][leaf] = 0;
  --allocated_count_[leaf_level];
  result.freed_leaf = region_.slot_of(leaf_level, leaf);
  result.freed.push_back(*result.freed_leaf);
  for (std::uint32_t level = leaf_level - 1; level >= 1; --level) {
    const std::uint32_t index = path_index(key, level);
    if (--child_count_[level][index] != 0) break;
    presence_[level][index] = 0;
    --allocated_count_[level];
    result.freed.push_back(region_.slot_of(level, index));
  }
  return result;
}

std::vector<std::uint32_t> RadixRemapTable::missing_slots(std::uint32_t key) const {
  check_key(key);
  std::vector<std::uint32_t> slots;
  for (std::uint32_t level = 1; level < config_.levels; ++level) {
    const std::uint32_t index = path_index(key, level);
    if (!presence_[level][index]) slots.push_back(region_.slot_of(level, index));
  }
  return slots;
}

bool RadixRemapTable::slot_holds_metadata(std::uint32_t slot) const {
  for (std::uint32_t level = 0; level < config_.levels; ++level) {
    const std::uint32_t base = region_.level_base[level];
    if (slot >= base && slot - base < region_.level_blocks[level]) {
      return block_allocated(level, slot - base);
    }
  }
  return false;
}

LeafView RadixRemapTable::leaf_view(std::uint32_t leaf_block) const {
  LeafView view;
  const std::uint32_t per_leaf = config_.leaf_entries_per_block();
  view.first_key = leaf_block * per_leaf;
  view.keys = per_leaf;
  view.allocated = presence_[config_.levels - 1][leaf_block] != 0;
  if (view.allocated) {
    view.entries = std::span<const std::uint32_t>(entries_).subspan(
        static_cast<std::size_t>(leaf_block) * per_leaf, per_leaf);
  }
  return view;
}

IrtFootprint RadixRemapTable::footprint() const {
  IrtFootprint fp;
  std::uint64_t index_blocks = region_.level_blocks[0];
  for (std::uint32_t level = 1; level + 1 < config_.levels; ++level) {
    index_blocks += allocated_count_[level];
  }
  fp.intermediate_bytes = index_blocks * config_.block_size;
  fp.allocated_leaf_blocks = allocated_count_[config_.levels - 1];
  fp.leaf_bytes = fp.allocated_leaf_blocks * config_.block_size;
  fp.fast_capacity = fast_bytes_per_set_;
  fp.fraction_of_fast = fast_bytes_per_set_ == 0
                            ? 0.0
                            : static_cast<double>(fp.intermediate_bytes + fp.leaf_bytes) /
                                  static_cast<double>(fast_bytes_per_set_);
  return fp;
}

void RadixRemapTable::check_consistency() const {
  const std::uint32_t levels = config_.levels;
  const std::uint32_t leaf_level = levels - 1;
  const std::uint32_t per_leaf = config_.leaf_entries_per_block();
  const std::uint32_t fanout = config_.intermediate_fanout();

  std::vector<std::uint64_t> counted(levels, 0);
  for (std::uint32_t leaf = 0; leaf < region_.leaf_blocks; ++leaf) {
    const auto first = entries_.begin() + static_cast<std::ptrdiff_t>(leaf) * per_leaf;
    const auto live = static_cast<std::uint32_t>(
        std::count_if(first, first + per_leaf, [](std::uint32_t e) { return e != kInvalidEntry; }));
    if (live != leaf_live_[leaf]) {
      throw InvariantViolation("leaf " + std::to_string(leaf) + " live count mismatch");
    }
    if ((live > 0) != (presence_[leaf_level][leaf] != 0)) {
      throw InvariantViolation("leaf " + std::to_string(leaf) +
                               " presence bit disagrees with its entries");
    }
    counted[leaf_level] += live > 0;
  }
  for (std::uint32_t level = leaf_level - 1; level >= 1; --level) {
    std::vector<std::uint32_t> children(region_.level_blocks[level], 0);
    for (std::uint32_t child = 0; child < region_.level_blocks[level + 1]; ++child) {
      children[child / fanout] += presence_[level + 1][child] != 0;
    }
    for (std::uint32_t index = 0; index < children.size(); ++index) {
      if (children[index] != child_count_[level][index] ||
          (children[index] > 0) != (presence_[level][index] != 0)) {
        throw InvariantViolation("index block " + std::to_string(index) + " at level " +
                                 std::to_string(level) + " disagrees with its children");
      }
      counted[level] += children[index] > 0;
    }
  }
  for (std::uint32_t level = 1; level < levels; ++level) {
    if (counted[level] != allocated_count_[level]) {
      throw InvariantViolation("allocated block count mismatch at level " + std::to_string(level));
    }
  }
}

// --- LinearRemapTable ------------------------------------------------------

namespace {

MetadataRegion linear_region(std::uint32_t block_size, std::uint64_t key_count,
                             std::uint64_t fast_blocks) {
  IrtConfig config{1, block_size};
  MetadataRegion region;
  region.levels = 1;
  region.key_count = key_count;
  region.level_blocks = table_level_blocks(key_count, config);
  const std::uint64_t blocks = region.level_blocks[0];
  region.data_blocks = blocks >= fast_blocks ? 0 : static_cast<std::uint32_t>(fast_blocks - blocks);
  region.level_base = {region.data_blocks};
  region.leaf_base = region.data_blocks;
  region.leaf_blocks = region.level_blocks[0];
  region.lendable_base = region.data_blocks;
  region.fast_slots = static_cast<std::uint32_t>(fast_blocks);
  return region;
}

}  // namespace

LinearRemapTable::LinearRemapTable(const HybridLayout& layout)
    : LinearRemapTable(static_cast<std::uint32_t>(layout.block_size()),
                       layout.device_blocks_per_set(),
                       static_cast<std::uint64_t>(layout.fast_blocks_per_set()) *
                           layout.block_size()) {}

LinearRemapTable::LinearRemapTable(std::uint32_t block_size, std::uint64_t key_count,
                                   std::uint64_t fast_bytes_per_set)
    : RemapTable(IrtConfig{1, block_size},
                 linear_region(block_size, key_count, fast_bytes_per_set / block_size),
                 fast_bytes_per_set) {
  if (key_count > kInvalidEntry) throw ConfigError("remap key space exceeds 32 bits");
  entries_.assign(static_cast<std::size_t>(region_.leaf_blocks) *
                      config_.leaf_entries_per_block(),
                  kInvalidEntry);
}

RemapLookupResult LinearRemapTable::lookup(std::uint32_t key) const {
  check_key(key);
  RemapLookupResult result;
  result.levels_touched = 1;
  result.leaf_block = key / config_.leaf_entries_per_block();
  if (entries_[key] != kInvalidEntry) result.mapping = Mapping::remapped(entries_[key]);
  return result;
}

InsertResult LinearRemapTable::insert(std::uint32_t key, std::uint32_t device_block) {
  check_key(key);
  check_device(device_block);
  entries_[key] = device_block;
  return {};
}

RemoveResult LinearRemapTable::remove(std::uint32_t key) {
  check_key(key);
  if (entries_[key] == kInvalidEntry) {
    throw ContractViolation("remove of identity-mapped key " + std::to_string(key));
  }
  entries_[key] = kInvalidEntry;
  return {};
}

Mapping LinearRemapTable::update(std::uint32_t key, Mapping mapping) {
  const Mapping previous = lookup(key).mapping;
  if (mapping.is_identity()) {
    entries_[key] = kInvalidEntry;
  } else {
    check_device(mapping.device_block);
    entries_[key] = mapping.device_block;
  }
  return previous;
}

bool LinearRemapTable::slot_holds_metadata(std::uint32_t slot) const {
  return slot >= region_.leaf_base;
}

LeafView LinearRemapTable::leaf_view(std::uint32_t leaf_block) const {
  const std::uint32_t per_leaf = config_.leaf_entries_per_block();
  LeafView view;
  view.allocated = true;
  view.first_key = leaf_block * per_leaf;
  view.keys = per_leaf;
  view.entries = std::span<const std::uint32_t>(entries_).subspan(
      static_cast<std::size_t>(leaf_block) * per_leaf, per_leaf);
  return view;
}

IrtFootprint LinearRemapTable::footprint() const {
  IrtFootprint fp;
  fp.allocated_leaf_blocks = region_.leaf_blocks;
  fp.leaf_bytes = fp.allocated_leaf_blocks * config_.block_size;
  fp.fast_capacity = fast_bytes_per_set_;
  fp.fraction_of_fast =
      static_cast<double>(fp.leaf_bytes) / static_cast<double>(fast_bytes_per_set_);
  return fp;
}

std::uint64_t linear_table_blocks(const HybridLayout& layout) {
  return table_level_blocks(layout.device_blocks_per_set(),
                            IrtConfig{1, static_cast<std::uint32_t>(layout.block_size())})[0];
}

double linear_table_fraction(const HybridLayout& layout) {
  return static_cast<double>(linear_table_blocks(layout)) /
         static_cast<double>(layout.fast_blocks_per_set());
}

}  // namespace hmsim
