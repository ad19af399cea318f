#include <gtest/gtest.h>

#include <string>

#include "hmsim/rng.hpp"
#include "hmsim/tiering_engine.hpp"

using namespace hmsim;

namespace {

struct FuzzCase {
  UseMode mode;
  ReplacementPolicy policy;
  bool lend;
  std::uint32_t levels;
  TableKind table = TableKind::kRadix;
  std::uint64_t ratio = 32;
};

std::string name_of(const FuzzCase& c) {
  return std::string(to_string(c.mode)) + "_" + to_string(c.policy) + "_" + to_string(c.table) +
         (c.lend ? "_lend" : "_nolend") + "_L" + std::to_string(c.levels) + "_r" +
         std::to_string(c.ratio);
}

std::vector<FuzzCase> all_cases() {
  std::vector<FuzzCase> out;
  for (auto mode : {UseMode::kCache, UseMode::kFlat}) {
    for (auto policy : {ReplacementPolicy::kFifo, ReplacementPolicy::kRandom}) {
      for (bool lend : {true, false}) {
        for (std::uint32_t levels : {2u, 3u}) out.push_back({mode, policy, lend, levels});
      }
      out.push_back({mode, policy, false, 2, TableKind::kLinear});
      out.push_back({mode, policy, true, 2, TableKind::kRadix, 64});
    }
  }
  return out;
}

class InvariantFuzz : public ::testing::TestWithParam<FuzzCase> {};

}  // namespace

// Two sets of 128 fast slots. Mixed hot/cold/streaming addresses keep the
// table allocating and freeing leaves throughout.
TEST_P(InvariantFuzz, RandomTrafficKeepsInvariants) {
  const FuzzCase& fc = GetParam();
  EngineConfig c;
  c.block_size = 256;
  c.fast_capacity = 64 << 10;
  c.slow_capacity = c.fast_capacity * fc.ratio;
  c.num_sets = 2;
  c.mode = fc.mode;
  c.table = fc.table;
  c.irt_levels = fc.levels;
  c.lend_saved_space = fc.lend;
  c.policy = fc.policy;
  c.seed = 1234;
  TieringEngine engine(c);

  const std::uint64_t steps = 1'000'000 / all_cases().size();
  Rng rng(std::hash<std::string>{}(name_of(fc)));
  const std::uint64_t lines = c.slow_capacity / 64;
  std::uint64_t stream = 0;
  for (std::uint64_t i = 0; i < steps; ++i) {
    std::uint64_t line = 0;
    switch (uniform_below(rng, 4)) {
      case 0: line = uniform_below(rng, 512); break;
      case 1: line = uniform_below(rng, lines / 8); break;
      case 2: line = uniform_below(rng, lines); break;
      default: line = (stream += 4) % lines; break;
    }
    const Op op = uniform_below(rng, 5) == 0 ? Op::kWrite : Op::kRead;
    engine.access({op, line * 64});
    if (i % 1000 == 999) ASSERT_NO_THROW(engine.check_invariants()) << "step " << i;
  }
  ASSERT_NO_THROW(engine.check_invariants());

  const EngineStats& s = engine.stats();
  EXPECT_EQ(s.requests, steps);
  EXPECT_EQ(s.fast_served + s.slow_served, s.requests);
  EXPECT_GE(s.metadata_blocks_allocated, s.metadata_blocks_freed);
  if (fc.mode == UseMode::kCache) EXPECT_GT(s.admissions, 0u);
}

INSTANTIATE_TEST_SUITE_P(AllConfigurations, InvariantFuzz, ::testing::ValuesIn(all_cases()),
                         [](const auto& info) { return name_of(info.param); });
