#include "hmsim/alloy_cache.hpp"

#include <bit>
#include <string>

#include "hmsim/errors.hpp"
#include "hmsim/tiering_engine.hpp"

namespace hmsim {

AlloyCache::AlloyCache(const AlloyConfig& config) : config_(config) {
  if (!std::has_single_bit(config_.block_size) || config_.block_size < kDemandBytes) {
    throw ConfigError("alloy block_size must be a power of two >= 64");
  }
  if (config_.fast_capacity == 0 || config_.fast_capacity % config_.block_size != 0 ||
      config_.slow_capacity % config_.block_size != 0) {
    throw ConfigError("alloy capacities must be non-zero multiples of block_size");
  }
  offset_bits_ = static_cast<unsigned>(std::countr_zero(config_.block_size));
  tags_.assign(config_.fast_capacity / config_.block_size, kEmpty);
  dirty_.assign(tags_.size(), 0);
}

AccessOutcome AlloyCache::access(const Request& request) {
  if (request.address >= config_.slow_capacity) {
    throw RangeError("physical address " + std::to_string(request.address) +
                     " out of range (limit " + std::to_string(config_.slow_capacity) + ")");
  }
  ++stats_.requests;
  ++(request.is_write() ? stats_.writes : stats_.reads);
  traffic_.demand += kDemandBytes;

  const std::uint64_t block = request.address >> offset_bits_;
  const std::uint64_t frame = block % tags_.size();
  AccessOutcome outcome;
  outcome.probe = MetadataProbe::kInline;

  if (tags_[frame] == block) {
    outcome.served_by = ServedBy::kFast;
    outcome.device_block = static_cast<std::uint32_t>(frame);
    ++stats_.fast_served;
    if (request.is_write()) dirty_[frame] = 1;
    return outcome;
  }

  outcome.served_by = ServedBy::kSlow;
  outcome.device_block = static_cast<std::uint32_t>(block);
  ++stats_.slow_served;
  outcome.migration = MigrationKind::kAdmit;
  if (tags_[frame] != kEmpty) {
    outcome.victim = static_cast<std::uint32_t>(tags_[frame]);
    outcome.migration = MigrationKind::kAdmitWithEviction;
    if (dirty_[frame]) {
      traffic_.writeback += config_.block_size;
      ++stats_.writebacks;
    }
    ++stats_.evictions;
    events_hash_.add(static_cast<std::uint64_t>(EventKind::kEvict), 1);
    events_hash_.add(0, 4);
    events_hash_.add(tags_[frame], 4);
    events_hash_.add(frame, 4);
  }
  tags_[frame] = block;
  dirty_[frame] = 0;
  traffic_.fill += config_.block_size;
  ++stats_.admissions;
  events_hash_.add(static_cast<std::uint64_t>(EventKind::kAdmit), 1);
  events_hash_.add(0, 4);
  events_hash_.add(block, 4);
  events_hash_.add(frame, 4);
  return outcome;
}

IrtFootprint AlloyCache::footprint() const {
  IrtFootprint fp;
  fp.fast_capacity = config_.fast_capacity;
  return fp;
}

std::uint64_t AlloyCache::placement_digest() const {
  Fnv1a hash;
  for (const std::uint64_t tag : tags_) hash.add(tag);
  return hash.value();
}

void AlloyCache::check_invariants() const {
  const std::uint64_t slow_blocks = config_.slow_capacity >> offset_bits_;
  for (std::uint64_t frame = 0; frame < tags_.size(); ++frame) {
    const std::uint64_t tag = tags_[frame];
    if (tag == kEmpty) {
      if (dirty_[frame]) throw InvariantViolation("dirty empty frame " + std::to_string(frame));
      continue;
    }
    if (tag >= slow_blocks || tag % tags_.size() != frame) {
      throw InvariantViolation("frame " + std::to_string(frame) + " holds foreign block " +
                               std::to_string(tag));
    }
  }
}

}  // namespace hmsim
