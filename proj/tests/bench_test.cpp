// Copyright 2026 The bilevel-svr Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bilevel/bench.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "bilevel/error.hpp"
#include "bilevel/kkt.hpp"
#include "bilevel/oracle.hpp"
#include "bilevel/svr.hpp"

namespace bilevel {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

BenchConfig config_from(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string squeeze(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
    out += c;
  }
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST(BenchConfig, ParsesEveryKey) {
  const auto cfg = config_from(R"(
# comment line
instances = ["10/01", "100/05"]   # trailing comment
seeds = [1, 2]
modes = ["sos1", "bigm", "product-bin"]
time_limit = 30
big_m = 50
tau = 0
bounds = 20
bits = 6
noise = 0.2
backend = "export"
output = csv
export_format = "mps"
out_dir = "/tmp/x # not a comment"
)");
  ASSERT_EQ(cfg.instances.size(), 4u);
  EXPECT_EQ(cfg.instances[0].samples, 10);
  EXPECT_EQ(cfg.instances[0].seed, 1u);
  EXPECT_EQ(cfg.instances[1].seed, 2u);
  EXPECT_EQ(cfg.instances[3].samples, 100);
  EXPECT_EQ(cfg.instances[3].features, 5);
  ASSERT_EQ(cfg.modes.size(), 3u);
  EXPECT_EQ(cfg.modes[1].kind, Mode::Kind::kBigM);
  EXPECT_EQ(cfg.modes[1].primal_m, 50.0);
  EXPECT_EQ(cfg.modes[1].dual_m, 50.0);
  EXPECT_TRUE(cfg.modes[2].expanded);
  EXPECT_EQ(cfg.modes[2].tau, 0.0);
  EXPECT_EQ(cfg.time_limit_s, 30.0);
  ASSERT_TRUE(cfg.expansion);
  EXPECT_EQ(cfg.expansion->var_lb, -20.0);
  EXPECT_EQ(cfg.expansion->var_ub, 20.0);
  EXPECT_EQ(cfg.expansion->bits, 6);
  EXPECT_EQ(cfg.noise, 0.2);
  EXPECT_EQ(cfg.backend, Backend::kExportOnly);
  EXPECT_EQ(cfg.output, OutputFormat::kCsv);
  EXPECT_EQ(cfg.export_format, ExportFormat::kMps);
  EXPECT_EQ(cfg.out_dir, "/tmp/x # not a comment");
}

TEST(BenchConfig, DefaultsMatchTheProtocol) {
  const auto cfg = config_from("instances = [\"10/01\"]\nmodes = [\"sos1\"]\n");
  EXPECT_EQ(cfg.time_limit_s, 600.0);
  EXPECT_EQ(cfg.instances.front().seed, 42u);
  EXPECT_EQ(cfg.backend, Backend::kInternal);
  EXPECT_EQ(cfg.output, OutputFormat::kMarkdown);
  EXPECT_EQ(cfg.expansion->var_ub, 100.0);
  EXPECT_EQ(cfg.expansion->bits, 8);
}

TEST(BenchConfig, RejectsBadInput) {
  const std::vector<std::string> bad = {
      "instances = [\"10/01\"]\n",                                     // no modes
      "modes = [\"sos1\"]\n",                                          // no instances
      "instances = []\nmodes = [\"sos1\"]\n",                          // empty list
      "instances = [\"10/01\"]\nmodes = [\"sos1\"]\ncolour = 3\n",     // unknown key
      "instances = [\"10/01\"]\nmodes = [\"sos1\"]\ntime_limit = x\n", // bad number
      "instances = [\"10/01\"]\nmodes = [\"sos1\"]\ntime_limit = -1\n",
      "instances = [\"10/01\"]\nmodes = [\"simplex\"]\n",
      "instances = [\"10/01\"\nmodes = [\"sos1\"]\n",
      "instances = [\"10/01\"]\nmodes = [\"sos1\"]\nmodes = [\"bigm\"]\n",
      "just words\n",
  };
  for (const auto& text : bad) {
    try {
      config_from(text);
      ADD_FAILURE() << "accepted:\n" << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kParse) << text;
    }
  }
}

TEST(BenchConfig, ErrorsNameTheLine) {
  try {
    config_from("instances = [\"10/01\"]\n\nbogus = 1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(RunBenchmark, ExactModesAgreeOnOneInstance) {
  BenchConfig cfg;
  cfg.instances = {{10, 1, 42}};
  cfg.modes = {Mode::sos1(), Mode::big_m(100, 100)};
  const auto records = run_benchmark(cfg);
  ASSERT_EQ(records.size(), 2u);
  ASSERT_TRUE(records[0].obj && records[1].obj);
  EXPECT_NEAR(*records[0].obj, *records[1].obj, 1e-6);
  EXPECT_EQ(records[0].mode, "sos1");
  EXPECT_EQ(records[1].mode, "bigm");
  EXPECT_EQ(records[1].primal_m, 100.0);

  const auto svr = build_bilevel(generate_instance(10, 1, 42));
  const auto exact = enumerate_patterns(svr.model, build_kkt(svr.model));
  EXPECT_NEAR(*records[0].obj, exact.objective, 1e-6);
}

TEST(RunBenchmark, RecordsAreInstanceMajorThenMode) {
  BenchConfig cfg;
  cfg.instances = {{4, 1, 1}, {4, 1, 2}, {6, 2, 1}};
  cfg.modes = {Mode::sos1(), Mode::indicator()};
  const auto records = run_benchmark(cfg);
  ASSERT_EQ(records.size(), 6u);
  const std::vector<std::pair<std::string, std::uint64_t>> expect = {
      {"4/01", 1}, {"4/01", 1}, {"4/01", 2}, {"4/01", 2}, {"6/02", 1}, {"6/02", 1}};
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(records[i].instance, expect[i].first);
    EXPECT_EQ(records[i].seed, expect[i].second);
    EXPECT_EQ(records[i].mode, i % 2 ? "indicator" : "sos1");
  }
}

TEST(RunBenchmark, ExportOnlyWritesFilesAndBlanks) {
  BenchConfig cfg;
  cfg.instances = {{10, 2, 42}};
  cfg.modes = {Mode::sos1(), Mode::big_m(100, 100)};
  cfg.backend = Backend::kExportOnly;
  cfg.out_dir = ::testing::TempDir() + "bench_export";
  std::filesystem::remove_all(cfg.out_dir);
  const auto records = run_benchmark(cfg);
  ASSERT_EQ(records.size(), 2u);
  for (const auto& r : records) {
    EXPECT_EQ(r.status, "Exported");
    EXPECT_FALSE(r.obj || r.gap_pct || r.time_s);
  }
  EXPECT_TRUE(std::filesystem::exists(cfg.out_dir + "/10-02_s42_sos1.lp"));
  EXPECT_TRUE(std::filesystem::exists(cfg.out_dir + "/10-02_s42_bigm.lp"));
  const auto md = render_table(records, OutputFormat::kMarkdown);
  EXPECT_NE(md.find("| 10/02 |   - |   - |    - |"), std::string::npos) << md;
}

TEST(RunBenchmark, ZeroTimeLimitBlanksTime) {
  BenchConfig cfg;
  cfg.instances = {{10, 1, 42}, {10, 2, 42}};
  cfg.modes = {Mode::sos1(), Mode::indicator(), Mode::big_m(100, 100)};
  cfg.time_limit_s = 0.0;
  for (const auto& r : run_benchmark(cfg)) {
    EXPECT_EQ(r.status, "TimeLimit");
    EXPECT_FALSE(r.time_s);
    EXPECT_TRUE(r.bound);
  }
}

TEST(RunBenchmark, FailingCellDoesNotStopTheSweep) {
  BenchConfig cfg;
  cfg.instances = {{4, 1, 3}};
  cfg.modes = {Mode::sos1(), Mode::product(1e-9, true), Mode::indicator()};
  cfg.expansion = ExpansionParams{-100, 100, 0};  // zero bits: invalid
  const auto records = run_benchmark(cfg);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].status, "Optimal");
  EXPECT_TRUE(is_error_status(records[1].status));
  EXPECT_NE(records[1].status.find("InvalidBits"), std::string::npos) << records[1].status;
  EXPECT_EQ(records[2].status, "Optimal");
  EXPECT_NE(render_table(records, OutputFormat::kMarkdown).find("Error"), std::string::npos);
}

TEST(RenderTable, PublishedRowLayout) {
  BenchRecord r;
  r.instance = "10/01";
  r.mode = "sos1";
  r.obj = 0.30;
  r.gap_pct = 0.0;
  r.time_s = 0.0;
  r.status = "Optimal";
  const auto md = render_table({r}, OutputFormat::kMarkdown);
  EXPECT_NE(squeeze(md).find("| 10/01 | 0.30 | 0 | 0 |"), std::string::npos) << md;
  EXPECT_NE(squeeze(md).find("| Inst | Obj | Gap | Time |"), std::string::npos) << md;
  EXPECT_NE(md.find("Time in seconds (s), Gap in percent (%)."), std::string::npos);

  r.gap_pct.reset();
  EXPECT_NE(squeeze(render_table({r}, OutputFormat::kMarkdown)).find("| 10/01 | 0.30 | - | 0 |"),
            std::string::npos);
}

TEST(RenderTable, RoundingAndNegativeZero) {
  BenchRecord r;
  r.instance = "100/02";
  r.mode = "bigm";
  r.obj = -0.001;
  r.gap_pct = 4.4;
  r.time_s = 12.6;
  r.status = "Optimal";
  EXPECT_NE(squeeze(render_table({r}, OutputFormat::kMarkdown)).find("| 100/02 | 0.00 | 4 | 13 |"),
            std::string::npos);
}

TEST(RenderTable, CsvCarriesTheSameCellsAndFullPrecision) {
  BenchRecord r;
  r.instance = "10/01";
  r.seed = 7;
  r.mode = "bigm";
  r.obj = 0.30000000000000004;
  r.bound = 0.3;
  r.gap_pct = 1.0e-13;
  r.time_s = 0.2;
  r.status = "Optimal";
  r.warnings = {"BigMBoundActive: pair 0, dual", "second"};
  r.primal_m = r.dual_m = 100;
  const auto lines = lines_of(render_table({r}, OutputFormat::kCsv));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0].rfind("instance,seed,mode,obj,gap,time,status,warnings,", 0), 0u);
  EXPECT_EQ(lines[1].rfind("10/01,7,bigm,0.30,0,0,Optimal,\"BigMBoundActive: pair 0, dual; second\",", 0), 0u)
      << lines[1];
  EXPECT_NE(lines[1].find("0.30000000000000004,0.3,1e-13"), std::string::npos) << lines[1];
}

// Blank rules over synthetic records: time "-" iff the limit was reached,
// gap "-" iff no bound (or no objective).
TEST(RenderTable, BlankRulesHoldOverRandomRecords) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    BenchRecord r;
    r.instance = "10/01";
    r.mode = "sos1";
    r.status = "Optimal";
    r.time_limit_s = std::floor(u(rng) * 4.0);
    r.solve_time_s = std::floor(u(rng) * 5.0);
    r.time_s = r.solve_time_s;
    if (u(rng) < 0.8) r.obj = u(rng) * 10;
    if (u(rng) < 0.7) r.bound = u(rng) * 10;
    r.gap_pct = 5.0;
    apply_blank_rules(r);
    const auto row = squeeze(lines_of(render_table({r}, OutputFormat::kMarkdown))[4]);
    std::vector<std::string> cells;
    std::stringstream ss(row);
    for (std::string c; std::getline(ss, c, '|');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 5u) << row;
    const bool time_blank = r.solve_time_s >= r.time_limit_s;
    const bool gap_blank = !r.bound || !r.obj;
    EXPECT_EQ(cells[4] == " - ", time_blank) << row;
    EXPECT_EQ(cells[3] == " - ", gap_blank) << row;
    EXPECT_EQ(cells[2] == " - ", !r.obj) << row;
  }
}

TEST(Bench, GoldenMarkdownFor10By1) {
  std::ifstream in(BILEVEL_TEST_DATA "/bench_10_01.conf");
  ASSERT_TRUE(in);
  const auto cfg = parse_config(in);
  const auto text = render_table(run_benchmark(cfg), cfg.output);
  EXPECT_EQ(text, read_file(BILEVEL_TEST_DATA "/bench_10_01.golden.md"));
}

TEST(Bench, CsvIsByteIdenticalAcrossRuns) {
  BenchConfig cfg;
  cfg.instances = {{10, 1, 42}, {6, 2, 5}};
  cfg.modes = {Mode::sos1(), Mode::indicator(), Mode::big_m(100, 100), Mode::product(1e-9, false)};
  const auto a = render_table(run_benchmark(cfg), OutputFormat::kCsv);
  const auto b = render_table(run_benchmark(cfg), OutputFormat::kCsv);
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace bilevel
