#include <gtest/gtest.h>

#include <sstream>

#include "hmsim/errors.hpp"
#include "hmsim/sweep.hpp"

using namespace hmsim;

namespace {

Settings small_base() {
  Settings s;
  s.set("fast_capacity", "1M");
  s.set("capacity_ratio", "16");
  s.set("trace", "zipf:length=5000");
  return s;
}

}  // namespace

TEST(SweepParse, SplitsKeyAndValues) {
  const SweepSpec s = parse_sweep("capacity_ratio=8,16,32");
  EXPECT_EQ(s.key, "capacity_ratio");
  EXPECT_EQ(s.values, (std::vector<std::string>{"8", "16", "32"}));
  EXPECT_EQ(parse_sweep("irc_partition=1:7,1:1").values.size(), 2u);
}

TEST(SweepParse, RejectsBadSpecs) {
  for (const char* text : {"", "capacity_ratio", "capacity_ratio=", "seed=1,2", "block_size=256,,512"}) {
    EXPECT_THROW(parse_sweep(text), ConfigError) << text;
  }
}

TEST(Sweep, OneRowPerSchemeAndPoint) {
  const SweepSpec spec = parse_sweep("capacity_ratio=8,16");
  const auto results = run_sweep(small_base(), {"trimma_c", "linear_cache"}, spec, 2);
  ASSERT_EQ(results.size(), 4u);
  EXPECT_EQ(results[0].scheme, "trimma_c");
  EXPECT_EQ(results[0].value, "8");
  EXPECT_EQ(results[1].value, "16");
  EXPECT_EQ(results[2].scheme, "linear_cache");
  EXPECT_EQ(results[0].config.engine.slow_capacity, 8u << 20);
  EXPECT_EQ(results[3].config.engine.slow_capacity, 16u << 20);
  for (const auto& r : results) EXPECT_EQ(r.report.counters.requests, 5000u);

  std::ostringstream csv;
  write_sweep_csv(csv, spec, results);
  std::istringstream lines(csv.str());
  std::string header, line;
  std::getline(lines, header);
  EXPECT_EQ(header.rfind("sweep_key,sweep_value,scheme,", 0), 0u) << header;
  int rows = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(line.rfind("capacity_ratio,", 0), 0u);
    ++rows;
  }
  EXPECT_EQ(rows, 4);
}

TEST(Sweep, ResultsDoNotDependOnWorkerCount) {
  const SweepSpec spec = parse_sweep("irc_partition=0:1,1:7,1:1");
  const auto serial = run_sweep(small_base(), {"trimma_c"}, spec, 1);
  const auto parallel = run_sweep(small_base(), {"trimma_c"}, spec, 3);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(to_json(serial[i].report), to_json(parallel[i].report));
  }
}

TEST(Sweep, BadPointFailsBeforeRunning) {
  try {
    run_sweep(small_base(), {"trimma_c"}, parse_sweep("block_size=256,100"), 1);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("block_size=100"), std::string::npos) << e.what();
  }
}
