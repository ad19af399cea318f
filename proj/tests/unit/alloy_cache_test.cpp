#include <gtest/gtest.h>

#include "hmsim/alloy_cache.hpp"
#include "hmsim/errors.hpp"
#include "hmsim/rng.hpp"

using namespace hmsim;

namespace {

AlloyConfig small() { return {256, 64 << 10, 2 << 20}; }

}  // namespace

TEST(Alloy, DirectMappedHitMissAndConflict) {
  AlloyCache a(small());
  EXPECT_EQ(a.frames(), 256u);
  AccessOutcome o = a.access({Op::kRead, 5 * 256});
  EXPECT_EQ(o.served_by, ServedBy::kSlow);
  EXPECT_EQ(o.migration, MigrationKind::kAdmit);
  EXPECT_EQ(o.probe, MetadataProbe::kInline);
  EXPECT_EQ(a.access({Op::kRead, 5 * 256 + 64}).served_by, ServedBy::kFast);

  // Block 261 maps to the same frame and evicts block 5.
  o = a.access({Op::kWrite, 261 * 256});
  EXPECT_EQ(o.migration, MigrationKind::kAdmitWithEviction);
  EXPECT_EQ(o.victim, 5u);
  EXPECT_EQ(a.access({Op::kWrite, 261 * 256}).served_by, ServedBy::kFast);
  o = a.access({Op::kRead, 5 * 256});
  EXPECT_EQ(o.victim, 261u);
  EXPECT_EQ(a.stats().writebacks, 1u);
  EXPECT_EQ(a.traffic().writeback, 256u);
  EXPECT_EQ(a.traffic().fill, 3u * 256);
  EXPECT_EQ(a.traffic().metadata, 0u);
  a.check_invariants();
}

TEST(Alloy, HasNoRemapMetadata) {
  AlloyCache a(small());
  EXPECT_EQ(a.remap_cache(), nullptr);
  EXPECT_EQ(a.footprint().leaf_bytes, 0u);
  EXPECT_EQ(a.footprint().fraction_of_fast, 0.0);
}

TEST(Alloy, RejectsOutOfRangeAndBadShapes) {
  AlloyCache a(small());
  EXPECT_THROW(a.access({Op::kRead, 2 << 20}), RangeError);
  EXPECT_THROW(AlloyCache({100, 64 << 10, 2 << 20}), ConfigError);
  EXPECT_THROW(AlloyCache({256, 0, 2 << 20}), ConfigError);
}

TEST(Alloy, RandomRunKeepsInvariantsAndConservation) {
  AlloyCache a(small());
  Rng rng(2);
  for (int i = 0; i < 50000; ++i) {
    a.access({uniform_below(rng, 4) ? Op::kRead : Op::kWrite, uniform_below(rng, 2 << 20)});
  }
  a.check_invariants();
  const EngineStats& s = a.stats();
  EXPECT_EQ(s.fast_served + s.slow_served, s.requests);
  EXPECT_EQ(s.admissions, s.slow_served);
  EXPECT_LE(s.admissions - s.evictions, a.frames());
}
