#include <gtest/gtest.h>

#include "hmsim/errors.hpp"
#include "hmsim/geometry.hpp"
#include "hmsim/remap_table.hpp"
#include "hmsim/rng.hpp"

using namespace hmsim;

namespace {

HybridLayout default_layout(UseMode mode = UseMode::kCache) {
  return HybridLayout(256, 16ull << 20, 512ull << 20, 4, mode);
}

}  // namespace

TEST(Geometry, DecomposesByShiftAndMask) {
  const auto layout = default_layout();
  const AddressParts p = decompose_physical(0x12345, layout);
  EXPECT_EQ(p.set_id, 3u);
  EXPECT_EQ(p.local_block, 0x48u);
  EXPECT_EQ(p.offset, 0x45u);
  EXPECT_EQ(compose_device(3, 0x48, 0x45, layout), 0x12345u);
}

TEST(Geometry, FirstAndLastAddress) {
  const auto layout = default_layout();
  EXPECT_EQ(decompose_physical(0, layout), (AddressParts{0, 0, 0}));
  const AddressParts last = decompose_physical(layout.slow_capacity() - 1, layout);
  EXPECT_EQ(last.set_id, 3u);
  EXPECT_EQ(last.local_block, layout.slow_blocks_per_set() - 1);
  EXPECT_EQ(last.offset, 255u);
  EXPECT_THROW(decompose_physical(layout.slow_capacity(), layout), RangeError);
}

TEST(Geometry, RoundTripsRandomAddresses) {
  const auto layout = default_layout();
  Rng rng(7);
  for (int i = 0; i < 100000; ++i) {
    const std::uint64_t a = uniform_below(rng, layout.slow_capacity());
    const AddressParts p = decompose_physical(a, layout);
    ASSERT_EQ(compose_device(p.set_id, p.local_block, p.offset, layout), a);
  }
}

TEST(Geometry, BlockCounts) {
  const auto layout = default_layout();
  EXPECT_EQ(layout.fast_blocks_per_set(), 16384u);
  EXPECT_EQ(layout.slow_blocks_per_set(), 524288u);
  EXPECT_EQ(layout.device_blocks_per_set(), 540672u);
  EXPECT_EQ(layout.capacity_ratio(), 32.0);
  EXPECT_EQ(layout.physical_blocks_per_set(), layout.slow_blocks_per_set());
}

TEST(Geometry, RejectsBadShapes) {
  EXPECT_THROW(HybridLayout(100, 16ull << 20, 512ull << 20, 4, UseMode::kCache), ConfigError);
  EXPECT_THROW(HybridLayout(256, 16ull << 20, 512ull << 20, 3, UseMode::kCache), ConfigError);
  EXPECT_THROW(HybridLayout(256, 0, 512ull << 20, 4, UseMode::kCache), ConfigError);
}

TEST(Geometry, FlatAreaExtendsPhysicalSpace) {
  auto layout = default_layout(UseMode::kFlat);
  layout.set_flat_blocks_per_set(1024);
  EXPECT_EQ(layout.physical_capacity(), layout.slow_capacity() + 1024ull * 4 * 256);
  auto cache = default_layout();
  EXPECT_THROW(cache.set_flat_blocks_per_set(1), ConfigError);
}

TEST(StorageArithmetic, LinearTableIsExactly51_5625PercentAt32To1) {
  const auto layout = default_layout();
  // (32 + 1) * 4 / 256
  EXPECT_EQ(linear_table_blocks(layout) * 256 * 4, 33ull * 4 * (16ull << 20) / 256);
  EXPECT_EQ(linear_table_fraction(layout), 0.515625);
}

TEST(StorageArithmetic, IntermediateBitsAre1Of2048OfLeafRegion) {
  const auto layout = default_layout();
  const MetadataRegion r = metadata_region(layout, IrtConfig{2, 256});
  ASSERT_EQ(r.level_blocks.size(), 2u);
  EXPECT_EQ(r.level_blocks[1], 540672u / 64);
  // One presence bit per leaf block: bytes of bits vs bytes of leaves.
  const std::uint64_t index_bits = r.level_blocks[1];
  const std::uint64_t leaf_bytes = std::uint64_t{r.level_blocks[1]} * 256;
  EXPECT_EQ(index_bits / 8 * 2048, leaf_bytes);
  EXPECT_EQ(r.level_blocks[0], (r.level_blocks[1] + 2047) / 2048);
}

TEST(StorageArithmetic, LinearFractionGrowsWithRatio) {
  for (std::uint64_t ratio : {8, 16, 32, 64}) {
    const HybridLayout layout(256, 16ull << 20, (16ull << 20) * ratio, 4, UseMode::kCache);
    EXPECT_EQ(linear_table_fraction(layout), static_cast<double>(ratio + 1) * 4 / 256);
  }
  const HybridLayout l64(256, 16ull << 20, 1ull << 30, 4, UseMode::kCache);
  EXPECT_GE(linear_table_fraction(l64), 1.0);
}

TEST(MetadataRegion, NormalLayoutPutsTopLevelLast) {
  const auto layout = default_layout();
  const MetadataRegion r = metadata_region(layout, IrtConfig{2, 256});
  EXPECT_FALSE(r.overflow);
  EXPECT_EQ(r.data_blocks + r.total_blocks(), layout.fast_blocks_per_set());
  EXPECT_EQ(r.lendable_base, r.data_blocks);
  EXPECT_EQ(r.lendable_blocks, r.level_blocks[1]);
  EXPECT_EQ(r.level_base[0] + r.level_blocks[0], layout.fast_blocks_per_set());
}

TEST(MetadataRegion, OverflowOnlyWhenAllowed) {
  const HybridLayout l64(256, 16ull << 20, 1ull << 30, 4, UseMode::kCache);
  EXPECT_THROW(metadata_region(l64, IrtConfig{2, 256}), ConfigError);
  const MetadataRegion r = metadata_region(l64, IrtConfig{2, 256}, true);
  EXPECT_TRUE(r.overflow);
  EXPECT_EQ(r.data_blocks, 0u);
  EXPECT_EQ(r.level_base[0], 0u);
  EXPECT_GT(r.total_blocks(), l64.fast_blocks_per_set());
}

TEST(MetadataRegion, ThreeLevels) {
  const auto layout = default_layout();
  const MetadataRegion r = metadata_region(layout, IrtConfig{3, 256});
  ASSERT_EQ(r.level_blocks.size(), 3u);
  EXPECT_EQ(r.level_blocks[2], 8448u);
  EXPECT_EQ(r.level_blocks[1], 5u);
  EXPECT_EQ(r.level_blocks[0], 1u);
  EXPECT_EQ(r.lendable_blocks, 8453u);
}

TEST(IndexBits, Location) {
  const IrtConfig irt{2, 256};
  EXPECT_EQ(index_bit_location(0, irt).parent_block, 0u);
  EXPECT_EQ(index_bit_location(2047, irt).bit, 2047u);
  EXPECT_EQ(index_bit_location(2048, irt).parent_block, 1u);
  EXPECT_EQ(index_bit_location(2048, irt).bit, 0u);
}
