#pragma once

// Address arithmetic for a two-tier hybrid memory.
//
// Physical addresses are split as | local_block | set_id | offset | with the
// set bits directly above the block offset. Within a set, device blocks are
// numbered with slow-memory blocks first and fast-memory slots after them:
//
//   [0, slow_blocks_per_set)                    slow memory
//   [slow_blocks_per_set, device_blocks_per_set) fast memory slots
//
// so an identity-mapped block's device block ID equals its set-local physical
// block ID in both use modes. In flat mode the OS-visible fast area occupies
// the first fast slots of every set.
//
// The same set-local device ID space doubles as the remap-table key space.

#include <cstdint>
#include <compare>
#include <vector>

namespace hmsim {

enum class UseMode : std::uint8_t { kCache, kFlat };

const char* to_string(UseMode mode);
UseMode use_mode_from_string(const char* text);

inline constexpr std::uint32_t kEntrySize = 4;
inline constexpr std::uint32_t kInvalidEntry = 0xFFFFFFFFu;

class HybridLayout {
 public:
  HybridLayout(std::uint64_t block_size, std::uint64_t fast_capacity,
               std::uint64_t slow_capacity, std::uint32_t num_sets,
               UseMode mode);

  std::uint64_t block_size() const { return block_size_; }
  std::uint64_t fast_capacity() const { return fast_capacity_; }
  std::uint64_t slow_capacity() const { return slow_capacity_; }
  std::uint32_t num_sets() const { return num_sets_; }
  UseMode mode() const { return mode_; }
  double capacity_ratio() const {
    return static_cast<double>(slow_capacity_) / static_cast<double>(fast_capacity_);
  }

  unsigned offset_bits() const { return offset_bits_; }
  unsigned set_bits() const { return set_bits_; }

  std::uint32_t slow_blocks_per_set() const { return slow_blocks_per_set_; }
  std::uint32_t fast_blocks_per_set() const { return fast_blocks_per_set_; }
  std::uint32_t device_blocks_per_set() const {
    return slow_blocks_per_set_ + fast_blocks_per_set_;
  }

  // Number of OS-visible fast slots per set (flat mode only; 0 in cache mode).
  std::uint32_t flat_blocks_per_set() const { return flat_blocks_per_set_; }
  void set_flat_blocks_per_set(std::uint32_t blocks);

  // Set-local physical keys: slow homes plus the flat fast area.
  std::uint32_t physical_blocks_per_set() const {
    return slow_blocks_per_set_ + flat_blocks_per_set_;
  }
  std::uint64_t physical_capacity() const;

  bool operator==(const HybridLayout&) const = default;

 private:
  std::uint64_t block_size_;
  std::uint64_t fast_capacity_;
  std::uint64_t slow_capacity_;
  std::uint32_t num_sets_;
  UseMode mode_;
  unsigned offset_bits_ = 0;
  unsigned set_bits_ = 0;
  std::uint32_t slow_blocks_per_set_ = 0;
  std::uint32_t fast_blocks_per_set_ = 0;
  std::uint32_t flat_blocks_per_set_ = 0;
};

struct AddressParts {
  std::uint32_t set_id = 0;
  std::uint32_t local_block = 0;
  std::uint32_t offset = 0;

  auto operator<=>(const AddressParts&) const = default;
};

// Throws RangeError when addr >= layout.physical_capacity().
AddressParts decompose_physical(std::uint64_t addr, const HybridLayout& layout);

// Byte address in the unified device space (slow memory first, then fast).
// Throws RangeError for out-of-range components.
std::uint64_t compose_device(std::uint32_t set_id, std::uint32_t device_block,
                             std::uint32_t offset, const HybridLayout& layout);

// Shape of one set's remap table. levels == 1 is the dense linear table.
struct IrtConfig {
  std::uint32_t levels = 2;
  std::uint32_t block_size = 256;

  std::uint32_t intermediate_fanout() const { return block_size * 8; }
  std::uint32_t leaf_entries_per_block() const { return block_size / kEntrySize; }
  static constexpr std::uint32_t invalid_sentinel() { return kInvalidEntry; }
};

// Per-set placement of the metadata region inside fast memory, in set-local
// fast slot indices (0 = first fast slot of the set).
//
// Level 0 is the always-resident top of the tree; level levels-1 holds the
// leaf entry blocks. Levels 1.. are demand-allocated and, together, form the
// lendable range. For the linear table the single level is resident.
struct MetadataRegion {
  std::uint32_t levels = 0;
  std::uint64_t key_count = 0;
  std::uint32_t data_blocks = 0;

  std::uint32_t intermediate_base = 0;
  std::uint32_t intermediate_blocks = 0;
  std::uint32_t leaf_base = 0;
  std::uint32_t leaf_blocks = 0;

  std::uint32_t lendable_base = 0;
  std::uint32_t lendable_blocks = 0;

  std::vector<std::uint32_t> level_base;
  std::vector<std::uint32_t> level_blocks;

  // Slots at or past this index are outside fast memory.
  std::uint32_t fast_slots = 0;
  bool overflow = false;

  std::uint32_t total_blocks() const;
  // Slot index of block `index` at `level`.
  std::uint32_t slot_of(std::uint32_t level, std::uint32_t index) const {
    return level_base[level] + index;
  }
  bool operator==(const MetadataRegion&) const = default;
};

// Blocks per level, top first, for a table covering `key_count` keys.
std::vector<std::uint32_t> table_level_blocks(std::uint64_t key_count,
                                              const IrtConfig& irt);

// Throws ConfigError if the region does not fit in a set's fast memory,
// unless `allow_overflow`. An overflowing region has no data area, puts the
// top level first, and numbers the blocks past the fast slots as if they
// continued there; those live in a reserved slow-memory area.
MetadataRegion metadata_region(const HybridLayout& layout, const IrtConfig& irt,
                               bool allow_overflow = false);

// Region size in blocks regardless of fit (used to flag degenerate configs).
std::uint64_t metadata_region_blocks(const HybridLayout& layout, const IrtConfig& irt);

// Location of the presence bit for `child` in the level above it.
struct IndexBitLocation {
  std::uint32_t parent_block = 0;
  std::uint32_t bit = 0;
};
inline IndexBitLocation index_bit_location(std::uint32_t child, const IrtConfig& irt) {
  return {child / irt.intermediate_fanout(), child % irt.intermediate_fanout()};
}

}  // namespace hmsim
