#pragma once

// Direct-mapped DRAM cache with tags stored next to the data, so one fast
// burst returns both and no separate metadata is kept. Cache mode only.

#include <cstdint>
#include <vector>

#include "hmsim/memory_system.hpp"

namespace hmsim {

struct AlloyConfig {
  std::uint64_t block_size = 256;
  std::uint64_t fast_capacity = 16ull << 20;
  std::uint64_t slow_capacity = 512ull << 20;
};

class AlloyCache final : public MemorySystem {
 public:
  explicit AlloyCache(const AlloyConfig& config);

  AccessOutcome access(const Request& request) override;

  const EngineStats& stats() const override { return stats_; }
  const Traffic& traffic() const override { return traffic_; }
  IrtFootprint footprint() const override;
  const RemapCache* remap_cache() const override { return nullptr; }
  std::uint64_t fast_capacity() const override { return config_.fast_capacity; }
  std::uint32_t block_size() const override {
    return static_cast<std::uint32_t>(config_.block_size);
  }
  std::uint64_t event_hash() const override { return events_hash_.value(); }
  std::uint64_t placement_digest() const override;
  void check_invariants() const override;

  std::uint64_t frames() const { return tags_.size(); }

 private:
  static constexpr std::uint64_t kEmpty = UINT64_MAX;

  AlloyConfig config_;
  unsigned offset_bits_ = 0;
  std::vector<std::uint64_t> tags_;  // slow block held by each frame
  std::vector<std::uint8_t> dirty_;
  EngineStats stats_;
  Traffic traffic_;
  Fnv1a events_hash_;
};

}  // namespace hmsim
