#pragma once

// Common surface of every simulated memory organization.

#include <cstdint>
#include <optional>
#include <string>

#include "hmsim/remap_cache.hpp"
#include "hmsim/remap_table.hpp"
#include "hmsim/request.hpp"

namespace hmsim {

enum class ServedBy : std::uint8_t { kFast, kSlow };

enum class MigrationKind : std::uint8_t {
  kNone,
  kAdmit,              // block copied into a free fast slot
  kAdmitWithEviction,  // a cached block was sent home first
  kSwap,               // flat mode: exchanged with a fast-area owner
  kRestore,            // flat mode: a displaced owner came back
  kSkipped,            // no eligible fast slot
};

enum class MetadataProbe : std::uint8_t { kNone, kRcHitId, kRcHitNonId, kTableWalk, kInline };

const char* to_string(MigrationKind kind);
const char* to_string(MetadataProbe probe);

struct AccessOutcome {
  ServedBy served_by = ServedBy::kSlow;
  std::uint32_t set_id = 0;
  std::uint32_t device_block = 0;
  MigrationKind migration = MigrationKind::kNone;
  std::optional<std::uint32_t> victim;  // home block sent back by this access
  std::uint32_t reclaims = 0;           // data blocks evicted for metadata
  MetadataProbe probe = MetadataProbe::kNone;
  bool rc_probed = false;
  std::uint32_t walk_levels = 0;
  bool walk_hit_slow = false;  // the leaf probed lives in slow memory
};

// Bytes moved to or from fast memory.
struct Traffic {
  std::uint64_t demand = 0;
  std::uint64_t fill = 0;
  std::uint64_t writeback = 0;
  std::uint64_t metadata = 0;
};

struct EngineStats {
  std::uint64_t requests = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t fast_served = 0;
  std::uint64_t slow_served = 0;
  std::uint64_t table_walks = 0;
  std::uint64_t rc_identity_lookups = 0;  // remap-cache probes of identity-mapped blocks
  std::uint64_t admissions = 0;
  std::uint64_t swaps = 0;
  std::uint64_t restores = 0;
  std::uint64_t evictions = 0;
  std::uint64_t reclaims = 0;
  std::uint64_t writebacks = 0;
  std::uint64_t skipped_admissions = 0;
  std::uint64_t index_bit_fetches = 0;
  std::uint64_t metadata_blocks_allocated = 0;
  std::uint64_t metadata_blocks_freed = 0;
  std::uint64_t first_touch_fast_pages = 0;
  std::uint64_t first_touch_slow_pages = 0;
};

class MemorySystem {
 public:
  virtual ~MemorySystem() = default;

  virtual AccessOutcome access(const Request& request) = 0;

  virtual const EngineStats& stats() const = 0;
  virtual const Traffic& traffic() const = 0;
  // Summed over all sets.
  virtual IrtFootprint footprint() const = 0;
  virtual const RemapCache* remap_cache() const = 0;
  virtual std::uint64_t fast_capacity() const = 0;
  virtual std::uint32_t block_size() const = 0;

  // FNV-1a over every migration event in order.
  virtual std::uint64_t event_hash() const = 0;
  // FNV-1a over the final content of every fast slot.
  virtual std::uint64_t placement_digest() const = 0;

  // Full state sweep; throws InvariantViolation.
  virtual void check_invariants() const = 0;
};

// 64-bit FNV-1a, fed one integer at a time (little-endian bytes).
class Fnv1a {
 public:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ull;
  static constexpr std::uint64_t kPrime = 0x100000001b3ull;

  void add(std::uint64_t value, unsigned bytes = 8) {
    for (unsigned i = 0; i < bytes; ++i) {
      hash_ ^= (value >> (8 * i)) & 0xff;
      hash_ *= kPrime;
    }
  }
  void add_bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash_ ^= p[i];
      hash_ *= kPrime;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = kOffset;
};

}  // namespace hmsim
