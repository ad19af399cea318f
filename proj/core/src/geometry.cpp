#include "hmsim/geometry.hpp"

#include <bit>
#include <cstring>
#include <numeric>
#include <sstream>
#include <string>

#include "hmsim/errors.hpp"

namespace hmsim {

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

const char* to_string(UseMode mode) { return mode == UseMode::kCache ? "cache" : "flat"; }

UseMode use_mode_from_string(const char* text) {
  if (std::strcmp(text, "cache") == 0) return UseMode::kCache;
  if (std::strcmp(text, "flat") == 0) return UseMode::kFlat;
  throw ConfigError(std::string("unknown mode '") + text + "' (expected cache|flat)");
}

HybridLayout::HybridLayout(std::uint64_t block_size, std::uint64_t fast_capacity,
                           std::uint64_t slow_capacity, std::uint32_t num_sets,
                           UseMode mode)
    : block_size_(block_size),
      fast_capacity_(fast_capacity),
      slow_capacity_(slow_capacity),
      num_sets_(num_sets),
      mode_(mode) {
  if (block_size_ == 0 || !std::has_single_bit(block_size_)) {
    throw ConfigError("block_size must be a power of two, got " + std::to_string(block_size_));
  }
  if (block_size_ < 2 * kEntrySize) {
    throw ConfigError("block_size must hold at least two 4-byte remap entries");
  }
  if (num_sets_ == 0 || !std::has_single_bit(num_sets_)) {
    throw ConfigError("num_sets must be a power of two, got " + std::to_string(num_sets_));
  }
  const std::uint64_t stripe = block_size_ * num_sets_;
  if (fast_capacity_ == 0 || fast_capacity_ % stripe != 0) {
    throw ConfigError("fast_capacity must be a non-zero multiple of block_size x num_sets (" +
                      std::to_string(stripe) + ")");
  }
  if (slow_capacity_ == 0 || slow_capacity_ % stripe != 0) {
    throw ConfigError("slow_capacity must be a non-zero multiple of block_size x num_sets (" +
                      std::to_string(stripe) + ")");
  }
  const std::uint64_t slow_blocks = slow_capacity_ / stripe;
  const std::uint64_t fast_blocks = fast_capacity_ / stripe;
  // The all-ones entry is the invalid sentinel, so the top ID stays unused.
  if (slow_blocks + fast_blocks > kInvalidEntry) {
    throw ConfigError("per-set device block IDs exceed 32 bits; use more sets");
  }
  offset_bits_ = static_cast<unsigned>(std::countr_zero(block_size_));
  set_bits_ = static_cast<unsigned>(std::countr_zero(num_sets_));
  slow_blocks_per_set_ = static_cast<std::uint32_t>(slow_blocks);
  fast_blocks_per_set_ = static_cast<std::uint32_t>(fast_blocks);
}

void HybridLayout::set_flat_blocks_per_set(std::uint32_t blocks) {
  if (blocks != 0 && mode_ != UseMode::kFlat) {
    throw ConfigError("a flat fast area only exists in flat mode");
  }
  if (blocks > fast_blocks_per_set_) {
    throw ConfigError("flat area larger than fast memory");
  }
  flat_blocks_per_set_ = blocks;
}

std::uint64_t HybridLayout::physical_capacity() const {
  return static_cast<std::uint64_t>(physical_blocks_per_set()) * num_sets_ * block_size_;
}

AddressParts decompose_physical(std::uint64_t addr, const HybridLayout& layout) {
  const std::uint64_t limit = layout.physical_capacity();
  if (addr >= limit) {
    throw RangeError("physical address " + hex(addr) + " out of range (limit " + hex(limit) + ")");
  }
  AddressParts parts;
  parts.offset = static_cast<std::uint32_t>(addr & (layout.block_size() - 1));
  const std::uint64_t block = addr >> layout.offset_bits();
  parts.set_id = static_cast<std::uint32_t>(block & (layout.num_sets() - 1));
  parts.local_block = static_cast<std::uint32_t>(block >> layout.set_bits());
  return parts;
}

std::uint64_t compose_device(std::uint32_t set_id, std::uint32_t device_block,
                             std::uint32_t offset, const HybridLayout& layout) {
  if (set_id >= layout.num_sets()) {
    throw RangeError("set " + std::to_string(set_id) + " >= num_sets " +
                     std::to_string(layout.num_sets()));
  }
  if (device_block >= layout.device_blocks_per_set()) {
    throw RangeError("device block " + std::to_string(device_block) + " >= per-set limit " +
                     std::to_string(layout.device_blocks_per_set()));
  }
  if (offset >= layout.block_size()) {
    throw RangeError("offset " + std::to_string(offset) + " >= block_size");
  }
  const std::uint64_t block =
      (static_cast<std::uint64_t>(device_block) << layout.set_bits()) | set_id;
  return (block << layout.offset_bits()) | offset;
}

std::uint32_t MetadataRegion::total_blocks() const {
  return std::accumulate(level_blocks.begin(), level_blocks.end(), std::uint32_t{0});
}

std::vector<std::uint32_t> table_level_blocks(std::uint64_t key_count, const IrtConfig& irt) {
  if (irt.levels == 0) throw ConfigError("irt levels must be >= 1");
  std::vector<std::uint32_t> blocks(irt.levels);
  std::uint64_t count = ceil_div(key_count, irt.leaf_entries_per_block());
  for (std::uint32_t level = irt.levels; level-- > 0;) {
    blocks[level] = static_cast<std::uint32_t>(count);
    count = ceil_div(count, irt.intermediate_fanout());
  }
  return blocks;
}

std::uint64_t metadata_region_blocks(const HybridLayout& layout, const IrtConfig& irt) {
  const auto blocks = table_level_blocks(layout.device_blocks_per_set(), irt);
  return std::accumulate(blocks.begin(), blocks.end(), std::uint64_t{0});
}

MetadataRegion metadata_region(const HybridLayout& layout, const IrtConfig& irt,
                               bool allow_overflow) {
  if (irt.block_size != layout.block_size()) {
    throw ConfigError("remap table block size differs from the layout block size");
  }
  MetadataRegion region;
  region.levels = irt.levels;
  region.key_count = layout.device_blocks_per_set();
  region.level_blocks = table_level_blocks(region.key_count, irt);
  region.fast_slots = layout.fast_blocks_per_set();
  region.level_base.resize(irt.levels);

  const std::uint64_t total = region.total_blocks();
  if (total > layout.fast_blocks_per_set()) {
    if (!allow_overflow || irt.levels == 1 ||
        region.level_blocks[0] > layout.fast_blocks_per_set()) {
      throw ConfigError("metadata region (" + std::to_string(total) +
                        " blocks per set) larger than fast memory (" +
                        std::to_string(layout.fast_blocks_per_set()) + " blocks per set)");
    }
    region.overflow = true;
    region.data_blocks = 0;
    region.level_base[0] = 0;
    region.intermediate_base = 0;
    region.intermediate_blocks = region.level_blocks[0];
    std::uint32_t cursor = region.level_blocks[0];
    region.lendable_base = cursor;
    for (std::uint32_t level = 1; level < irt.levels; ++level) {
      region.level_base[level] = cursor;
      cursor += region.level_blocks[level];
    }
    region.lendable_blocks = cursor - region.lendable_base;
    region.leaf_base = region.level_base[irt.levels - 1];
    region.leaf_blocks = region.level_blocks[irt.levels - 1];
    return region;
  }

  region.data_blocks = layout.fast_blocks_per_set() - static_cast<std::uint32_t>(total);

  if (irt.levels == 1) {
    region.level_base[0] = region.data_blocks;
    region.leaf_base = region.data_blocks;
    region.leaf_blocks = region.level_blocks[0];
    region.lendable_base = region.data_blocks;
    return region;
  }

  std::uint32_t cursor = region.data_blocks;
  region.lendable_base = cursor;
  for (std::uint32_t level = 1; level < irt.levels; ++level) {
    region.level_base[level] = cursor;
    cursor += region.level_blocks[level];
  }
  region.lendable_blocks = cursor - region.lendable_base;
  region.level_base[0] = cursor;
  region.intermediate_base = cursor;
  region.intermediate_blocks = region.level_blocks[0];
  region.leaf_base = region.level_base[irt.levels - 1];
  region.leaf_blocks = region.level_blocks[irt.levels - 1];
  return region;
}

}  // namespace hmsim
