#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using namespace hmsim;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string write_file(const std::string& name, const std::string& content) {
  const std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << content;
  return path;
}

const std::vector<std::string> kSmall = {"--set", "fast_capacity=1M", "--set",
                                         "capacity_ratio=16"};

std::vector<std::string> small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

}  // namespace

TEST(Cli, UnknownFlagIsUsageError) {
  const CliResult r = run({"--bogus"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bogus"), std::string::npos);
}

TEST(Cli, MissingConfigFileIsUsageError) {
  const CliResult r = run({"--config", "/nonexistent/run.cfg"});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, InvalidConfigNamesTheLine) {
  const std::string path = write_file("bad.cfg", "seed = 3\nmoed = flat\n");
  const CliResult r = run({"--config", path});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("configuration error"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find(":2"), std::string::npos) << r.err;
  std::remove(path.c_str());
}

TEST(Cli, ConflictingSchemeOverrideFails) {
  const CliResult r = run({"--scheme", "trimma_c", "--set", "mode=flat", "--dump-config"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("fixes mode"), std::string::npos) << r.err;
}

TEST(Cli, MalformedTraceLineCitesLineNumber) {
  const std::string path = write_file("bad.trace", "R 0\nW 40\nR 80\nQ 100\n");
  const CliResult r = run(small({"--trace", "text:" + path}));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("trace error"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("line 4"), std::string::npos) << r.err;
  std::remove(path.c_str());
}

TEST(Cli, DumpConfigRoundTrips) {
  const CliResult first = run({"--scheme", "linear_flat", "--seed", "9", "--dump-config"});
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_NE(first.out.find("scheme = linear_flat"), std::string::npos);
  EXPECT_NE(first.out.find("seed = 9"), std::string::npos);
  const std::string path = write_file("dump.cfg", first.out);
  const CliResult second = run({"--config", path, "--dump-config"});
  EXPECT_EQ(second.out, first.out);
  std::remove(path.c_str());
}

TEST(Cli, SingleRunPrintsJsonReport) {
  const CliResult r = run(small({"--trace", "zipf:length=2000"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.front(), '{');
  EXPECT_NE(r.out.find("\"serve_rate\""), std::string::npos);
  EXPECT_NE(r.out.find("\"report_hash\""), std::string::npos);
  EXPECT_EQ(run(small({"--trace", "zipf:length=2000"})).out, r.out);
}

TEST(Cli, TwoSchemesWriteTwoTaggedReports) {
  const auto dir = std::filesystem::path(::testing::TempDir()) / "cli_reports";
  std::filesystem::create_directories(dir);
  const std::string report = (dir / "run.json").string();
  const std::string csv = (dir / "run.csv").string();
  const CliResult r = run(small({"--scheme", "trimma_c,alloy_direct", "--trace",
                                 "hotset:length=2000", "--report", report, "--csv", csv}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "run.trimma_c.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run.alloy_direct.json"));
  std::ifstream in(csv);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 3);
  std::filesystem::remove_all(dir);
}

TEST(Cli, SweepPrintsCsv) {
  const CliResult r = run(small({"--scheme", "trimma_c,linear_cache", "--trace",
                                 "zipf:length=2000", "--sweep", "irt_levels=2,3", "--workers",
                                 "1"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("sweep_key,sweep_value,", 0), 0u);
  EXPECT_EQ(count(r.out, "\nirt_levels,"), 4u);
}

TEST(Cli, EmitTraceWritesReadableFile) {
  const std::string path = ::testing::TempDir() + "emitted.bin";
  const CliResult r = run(small({"--trace", "uniform:length=300", "--emit-trace", path}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::filesystem::file_size(path), 300u * 8);
  const CliResult replay = run(small({"--trace", path}));
  EXPECT_EQ(replay.code, 0) << replay.err;
  EXPECT_NE(replay.out.find("\"requests\": 300"), std::string::npos);
  std::remove(path.c_str());
}

TEST(Cli, BinaryExitCodes) {
  const char* bin = std::getenv("HMSIM_BIN");
  if (!bin) GTEST_SKIP() << "HMSIM_BIN not set";
  const std::string quiet = " >/dev/null 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system((std::string(bin) + " --bogus" + quiet).c_str())), 2);
  EXPECT_EQ(WEXITSTATUS(std::system((std::string(bin) + " --set mode=x" + quiet).c_str())), 1);
  EXPECT_EQ(WEXITSTATUS(std::system((std::string(bin) + " --dump-config" + quiet).c_str())), 0);
}
