#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "hmsim/errors.hpp"
#include "hmsim/rng.hpp"
#include "hmsim/tiering_engine.hpp"

using namespace hmsim;

namespace {

// One set, 256 fast slots, 8192 slow blocks. The radix table has 132 leaves
// (slots 123..254) and one resident top block (slot 255).
EngineConfig small_config(UseMode mode = UseMode::kCache) {
  EngineConfig c;
  c.block_size = 256;
  c.fast_capacity = 64 << 10;
  c.slow_capacity = 2 << 20;
  c.num_sets = 1;
  c.mode = mode;
  return c;
}

Request read(std::uint64_t block) { return {Op::kRead, block * 256}; }
Request write(std::uint64_t block) { return {Op::kWrite, block * 256}; }

std::uint32_t leaf_slot(const TieringEngine& e, std::uint32_t key) {
  const RemapTable& t = e.table(0);
  return t.region().slot_of(t.levels() - 1, key / t.config().leaf_entries_per_block());
}

}  // namespace

TEST(Engine, SmallLayoutShape) {
  TieringEngine e(small_config());
  EXPECT_EQ(e.data_blocks_per_set(), 123u);
  EXPECT_EQ(e.lendable_base(), 123u);
  EXPECT_EQ(e.lendable_blocks(), 132u);
  EXPECT_EQ(e.candidate_slots_per_set(), 255u);
  EXPECT_EQ(e.slot(0, 255).kind, SlotKind::kPinned);
  EXPECT_FALSE(e.degenerate());
  EXPECT_FALSE(e.table_overflow());
}

TEST(Engine, MissAdmitsIntoFreeSlotWithTwoEntries) {
  TieringEngine e(small_config());
  const AccessOutcome first = e.access(read(42));
  EXPECT_EQ(first.served_by, ServedBy::kSlow);
  EXPECT_EQ(first.migration, MigrationKind::kAdmit);
  EXPECT_FALSE(first.victim);
  EXPECT_EQ(first.probe, MetadataProbe::kTableWalk);
  EXPECT_EQ(first.walk_levels, 2u);
  EXPECT_EQ(e.resolve(0, 42), 8192u);
  EXPECT_EQ(e.resolve(0, 8192), 42u);
  EXPECT_EQ(e.slot(0, 0).kind, SlotKind::kCached);
  EXPECT_EQ(e.slot(0, 0).guest, 42u);

  // The admission invalidated the cached identity, so the next access walks
  // and the one after hits the NonIdCache.
  const AccessOutcome second = e.access(read(42));
  EXPECT_EQ(second.served_by, ServedBy::kFast);
  EXPECT_EQ(second.probe, MetadataProbe::kTableWalk);
  EXPECT_EQ(second.device_block, 8192u);
  EXPECT_EQ(e.access(read(42)).probe, MetadataProbe::kRcHitNonId);
  EXPECT_EQ(e.stats().admissions, 1u);
  EXPECT_EQ(e.traffic().fill, 256u);
  e.check_invariants();
}

TEST(Engine, DirtyEvictionWritesBack) {
  EngineConfig c = small_config();
  c.lend_saved_space = false;
  TieringEngine e(c);
  e.access(read(1));
  e.access(write(1));
  EXPECT_TRUE(e.slot(0, 0).dirty);
  // 123 more distinct blocks wrap the FIFO back to slot 0.
  for (std::uint64_t b = 2; b <= 123; ++b) e.access(read(b));
  EXPECT_EQ(e.stats().evictions, 0u);
  const AccessOutcome o = e.access(read(500));
  EXPECT_EQ(o.migration, MigrationKind::kAdmitWithEviction);
  EXPECT_EQ(o.victim, 1u);
  EXPECT_EQ(e.stats().writebacks, 1u);
  EXPECT_EQ(e.traffic().writeback, 256u);
  EXPECT_EQ(e.resolve(0, 1), 1u);
  e.check_invariants();
}

TEST(Engine, FifoSkipsMetadataAndClaimedSlots) {
  EngineConfig c = small_config();
  c.rcache = RemapCacheKind::kNone;
  TieringEngine e(c);
  for (std::uint64_t b = 0; b < 123; ++b) e.access(read(b));
  EXPECT_EQ(e.stats().index_bit_fetches, 0u);
  // Homes 0..122 use leaves 0 and 1; inverse keys 8192..8314 use leaves 128
  // and 129. Home 5000 would claim leaf 78; slot 254's own inverse key lives
  // in leaf 131, which is slot 254.
  const std::set<std::uint32_t> metadata = {123, 124, 251, 252};
  const std::set<std::uint32_t> claimed = {123 + 78, 254};
  std::vector<std::uint32_t> expected;
  for (std::uint32_t s = 123; s < 255; ++s) {
    if (!metadata.count(s) && !claimed.count(s)) expected.push_back(s);
  }
  std::vector<std::uint32_t> got;
  for (std::size_t i = 0; i < expected.size(); ++i) got.push_back(*e.next_victim(0, 5000));
  EXPECT_EQ(got, expected);
  // 132 lendable slots in 64-bit chunks: three index-bit fetches.
  EXPECT_EQ(e.stats().index_bit_fetches, 3u);
  EXPECT_EQ(e.next_victim(0, 5000), 0u);
  for (std::uint32_t s : metadata) EXPECT_EQ(e.slot(0, s).kind, SlotKind::kMetadata);
}

TEST(Engine, PrefetchWidthSetsIndexFetchCount) {
  EngineConfig c = small_config();
  c.prefetch_bits = 1;
  TieringEngine e(c);
  for (std::uint64_t b = 0; b < 123; ++b) e.access(read(b));
  const std::uint64_t before = e.stats().index_bit_fetches;
  for (int i = 0; i < 126; ++i) e.next_victim(0, 5000);
  // Every lendable slot visited costs a fetch: slots 123..253.
  EXPECT_EQ(e.stats().index_bit_fetches - before, 131u);
}

TEST(Engine, RandomPolicyNeverPicksMetadata) {
  EngineConfig c = small_config();
  c.policy = ReplacementPolicy::kRandom;
  c.seed = 99;
  TieringEngine e(c);
  for (std::uint64_t b = 0; b < 123; ++b) e.access(read(b));
  for (int i = 0; i < 20000; ++i) {
    const auto v = e.next_victim(0, 5000);
    ASSERT_TRUE(v);
    const SlotKind k = e.slot(0, *v).kind;
    ASSERT_NE(k, SlotKind::kMetadata);
    ASSERT_NE(k, SlotKind::kPinned);
    ASSERT_NE(*v, 123u + 78);
  }
}

TEST(Engine, MetadataReclaimsLentSlot) {
  EngineConfig c = small_config();
  c.record_events = true;
  TieringEngine e(c);
  for (std::uint64_t b = 0; b < 123; ++b) e.access(read(b));
  // Data area full: home 200 (leaf 3) lands in the first free lendable slot.
  e.access(read(200));
  const std::uint32_t lent = e.events().back().slot;
  ASSERT_GE(lent, e.lendable_base());
  ASSERT_EQ(e.slot(0, lent).guest, 200u);
  // Find a home whose leaf is exactly that slot.
  const std::uint32_t home = (lent - e.lendable_base()) * 64 + 1;
  ASSERT_EQ(leaf_slot(e, home), lent);

  const AccessOutcome o = e.access(read(home));
  EXPECT_EQ(o.reclaims, 1u);
  EXPECT_EQ(e.stats().reclaims, 1u);
  EXPECT_EQ(e.slot(0, lent).kind, SlotKind::kMetadata);
  EXPECT_EQ(e.resolve(0, 200), 200u);  // sent home
  const auto& ev = e.events();
  const auto reclaim = std::find_if(ev.begin(), ev.end(), [](const MigrationEvent& m) {
    return m.kind == EventKind::kReclaim;
  });
  ASSERT_NE(reclaim, ev.end());
  EXPECT_EQ(reclaim->block, 200u);
  EXPECT_EQ(reclaim->slot, lent);
  e.check_invariants();
}

TEST(Engine, LendingOffLeavesMetadataAreaUnused) {
  EngineConfig c = small_config();
  c.lend_saved_space = false;
  TieringEngine e(c);
  EXPECT_EQ(e.candidate_slots_per_set(), 123u);
  Rng rng(3);
  for (int i = 0; i < 5000; ++i) e.access(read(uniform_below(rng, 8192)));
  for (std::uint32_t s = 123; s < 256; ++s) {
    EXPECT_NE(e.slot(0, s).kind, SlotKind::kCached);
  }
  EXPECT_EQ(e.stats().reclaims, 0u);
  e.check_invariants();
}

TEST(Engine, ConservationOfCachedBlocks) {
  TieringEngine e(small_config());
  Rng rng(4);
  for (int i = 0; i < 20000; ++i) {
    const std::uint64_t b = uniform_below(rng, 8192);
    e.access(uniform_below(rng, 4) == 0 ? write(b) : read(b));
  }
  const EngineStats& s = e.stats();
  EXPECT_EQ(s.fast_served + s.slow_served, s.requests);
  std::uint64_t cached = 0;
  for (std::uint32_t j = 0; j < 256; ++j) cached += e.slot(0, j).kind == SlotKind::kCached;
  EXPECT_EQ(s.admissions, s.evictions + s.reclaims + cached);
  EXPECT_EQ(s.metadata_blocks_allocated - s.metadata_blocks_freed,
            e.footprint().allocated_leaf_blocks);
  e.check_invariants();
}

TEST(Engine, OutOfRangeAddressIsRejected) {
  TieringEngine e(small_config());
  EXPECT_THROW(e.access(read(8192)), RangeError);
}

TEST(Engine, ModeEquivalenceWithReservedLinearTable) {
  EngineConfig radix = small_config();
  radix.lend_saved_space = false;
  radix.record_events = true;
  TieringEngine a(radix);

  EngineConfig linear = radix;
  linear.table = TableKind::kLinear;
  linear.rcache = RemapCacheKind::kConventional;
  linear.reserve_blocks_override = static_cast<std::uint32_t>(a.table_region_blocks_per_set());
  TieringEngine b(linear);
  ASSERT_EQ(a.data_blocks_per_set(), b.data_blocks_per_set());

  Rng rng(8);
  for (int i = 0; i < 30000; ++i) {
    const Request r = read(uniform_below(rng, 8192));
    a.access(r);
    b.access(r);
  }
  EXPECT_EQ(a.events(), b.events());
  EXPECT_EQ(a.event_hash(), b.event_hash());
  EXPECT_EQ(a.stats().admissions, b.stats().admissions);
  EXPECT_EQ(a.stats().evictions, b.stats().evictions);
  EXPECT_NE(a.footprint().fraction_of_fast, b.footprint().fraction_of_fast);
}

TEST(Engine, LinearTableAt64To1IsDegenerate) {
  EngineConfig c;
  c.slow_capacity = 1ull << 30;
  c.table = TableKind::kLinear;
  c.rcache = RemapCacheKind::kConventional;
  c.lend_saved_space = false;
  TieringEngine e(c);
  EXPECT_TRUE(e.degenerate());
  const AccessOutcome o = e.access(read(5));
  EXPECT_EQ(o.migration, MigrationKind::kSkipped);
  EXPECT_EQ(e.stats().skipped_admissions, 1u);
}

TEST(Engine, RadixTableAt64To1SpillsToSlowMemory) {
  EngineConfig c;
  c.slow_capacity = 1ull << 30;
  TieringEngine e(c);
  EXPECT_TRUE(e.table_overflow());
  EXPECT_FALSE(e.degenerate());
  EXPECT_EQ(e.data_blocks_per_set(), 0u);
  const std::uint32_t fast = e.layout().fast_blocks_per_set();
  // A key whose leaf sits past the fast slots is walked at slow latency.
  const std::uint32_t far_key = e.layout().slow_blocks_per_set() - 1;
  EXPECT_GE(leaf_slot(e, far_key), fast);
  const AccessOutcome o = e.access(read(std::uint64_t{far_key} * 4));
  EXPECT_TRUE(o.walk_hit_slow);
  const AccessOutcome near = e.access(read(0));
  EXPECT_FALSE(near.walk_hit_slow);
  e.check_invariants();
}

TEST(Engine, ThreeLevelTableLendsMiddleBlocks) {
  EngineConfig c = small_config();
  c.irt_levels = 3;
  TieringEngine e(c);
  EXPECT_EQ(e.lendable_blocks(), 133u);
  Rng rng(12);
  for (int i = 0; i < 20000; ++i) e.access(read(uniform_below(rng, 8192)));
  e.check_invariants();
}

TEST(Engine, OneLevelMeansLinear) {
  EngineConfig c = small_config();
  c.irt_levels = 1;
  TieringEngine e(c);
  EXPECT_EQ(e.config().table, TableKind::kLinear);
  EXPECT_EQ(e.access(read(3)).walk_levels, 1u);
}

TEST(FlatMode, FirstTouchFillsFastPagesThenSlow) {
  TieringEngine e(small_config(UseMode::kFlat));
  // 123 data slots floor to 112: seven 16-block pages.
  EXPECT_EQ(e.layout().flat_blocks_per_set(), 112u);
  for (std::uint64_t page = 0; page < 9; ++page) e.first_touch_allocate(page * 4096);
  EXPECT_EQ(e.stats().first_touch_fast_pages, 7u);
  EXPECT_EQ(e.stats().first_touch_slow_pages, 2u);
  EXPECT_EQ(e.translate(0), 2ull << 20);
  EXPECT_EQ(e.translate(7 * 4096 + 5), 5u);
  EXPECT_EQ(e.translate(8 * 4096), 4096u);
  EXPECT_TRUE(e.slot(0, 111).touched);
  EXPECT_FALSE(e.slot(0, 112).touched);
}

TEST(FlatMode, FastPageAccessIsServedInPlace) {
  TieringEngine e(small_config(UseMode::kFlat));
  const AccessOutcome o = e.access(read(3));
  EXPECT_EQ(o.served_by, ServedBy::kFast);
  EXPECT_EQ(o.migration, MigrationKind::kNone);
  EXPECT_EQ(o.device_block, 8192u + 3);
}

TEST(FlatMode, SlowAccessSwapsAndOwnerRestores) {
  EngineConfig c = small_config(UseMode::kFlat);
  c.lend_saved_space = false;
  TieringEngine e(c);
  for (std::uint64_t page = 0; page < 7; ++page) e.first_touch_allocate(page * 4096);
  // Trace page 7 falls to slow page 0: trace block 112 is home 0.
  const AccessOutcome swap = e.access(read(112));
  EXPECT_EQ(swap.migration, MigrationKind::kSwap);
  EXPECT_EQ(e.stats().swaps, 1u);
  EXPECT_EQ(e.traffic().fill, 256u);
  EXPECT_EQ(e.traffic().writeback, 256u);
  EXPECT_EQ(e.slot(0, 0).guest, 0u);
  EXPECT_EQ(e.resolve(0, 0), 8192u);
  EXPECT_EQ(e.resolve(0, 8192), 0u);  // the owner now lives at the guest's home

  // The displaced owner (trace block 0) comes back.
  const AccessOutcome back = e.access(read(0));
  EXPECT_EQ(back.served_by, ServedBy::kSlow);
  EXPECT_EQ(back.migration, MigrationKind::kRestore);
  EXPECT_EQ(back.victim, 0u);
  EXPECT_EQ(e.resolve(0, 8192), 8192u);
  EXPECT_EQ(e.stats().restores, 1u);
  e.check_invariants();
}

TEST(FlatMode, UntouchedFastPagesAreNotVictims) {
  EngineConfig c = small_config(UseMode::kFlat);
  c.lend_saved_space = false;
  TieringEngine fresh(c);
  // Only the first fast page (slots 0..15) is touched; the other flat slots
  // must be skipped, leaving the 11 non-flat data slots.
  fresh.first_touch_allocate(0);
  std::set<std::uint32_t> victims;
  for (int i = 0; i < 200; ++i) victims.insert(*fresh.next_victim(0, 100));
  for (std::uint32_t v : victims) {
    EXPECT_TRUE(v < 16 || v >= 112) << v;
  }
}

TEST(FlatMode, StrictModeRejectsUntouchedPages) {
  EngineConfig c = small_config(UseMode::kFlat);
  c.strict_first_touch = true;
  TieringEngine e(c);
  EXPECT_THROW(e.access(read(3)), TraceError);
  e.first_touch_allocate(0);
  EXPECT_NO_THROW(e.access(read(3)));
}

TEST(FlatMode, RandomRunKeepsInvariants) {
  EngineConfig c = small_config(UseMode::kFlat);
  TieringEngine e(c);
  Rng rng(21);
  const std::uint64_t blocks = e.layout().physical_capacity() / 256;
  for (int i = 0; i < 30000; ++i) {
    const std::uint64_t b = uniform_below(rng, blocks);
    e.access(uniform_below(rng, 3) == 0 ? write(b) : read(b));
    if (i % 3000 == 0) e.check_invariants();
  }
  e.check_invariants();
  EXPECT_GT(e.stats().swaps, 0u);
  EXPECT_GT(e.stats().restores, 0u);
}
