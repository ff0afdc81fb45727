//
// Copyright 2026 The GSHM Accounting Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//


#include "gshm_cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "gshm/gshm.h"
#include "gtest/gtest.h"

namespace gshm::cli {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult RunCli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = Main(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> CsvRows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(internal::SplitFields(line, ','));
  }
  return rows;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string TestData(const std::string& name) {
  return (fs::path(GSHM_TESTDATA_DIR) / name).string();
}

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gshm_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

GshmParams UrlParams(double tau_star) {
  GshmParams p;
  p.tau_low = 1;
  p.tau_high = tau_star;
  p.sigma = 2228;
  p.c_u = 51914;
  return p;
}

const std::vector<std::string> kUrlDelta = {
    "delta", "--epsilon", "0.349", "--tau", "1", "--tau-star", "13948",
    "--sigma", "2228", "--cu", "51914", "--format", "csv"};

TEST(DeltaCommandTest, ExactMeetsTargetAtPublishedThreshold) {
  auto args = kUrlDelta;
  args.insert(args.end(), {"--accounting", "exact"});
  const CliResult r = RunCli(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = CsvRows(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][2], "delta");
  EXPECT_LE(std::stod(rows[1][2]), 1.05e-5);
}

TEST(DeltaCommandTest, AllAccountingsAreBitIdenticalToLibrary) {
  const CliResult r = RunCli(kUrlDelta);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = CsvRows(r.out);
  ASSERT_EQ(rows.size(), 4u);
  const GshmParams p = UrlParams(13948);
  const auto report = ExactDelta(p, 0.349);
  EXPECT_EQ(rows[1][0], "exact");
  EXPECT_EQ(rows[1][2], FormatDouble(report.delta_exact));
  EXPECT_EQ(rows[1][3], FormatDouble(report.delta_infinite));
  EXPECT_EQ(rows[1][4], FormatDouble(report.delta_gaussian));
  EXPECT_EQ(rows[2][2], FormatDouble(AddTheDeltas(p, 0.349)));
  EXPECT_EQ(rows[3][2], FormatDouble(GaussianOnlyDelta(p, 0.349)));
  EXPECT_LE(std::stod(rows[1][2]), std::stod(rows[2][2]));
}

TEST(DeltaCommandTest, SingleGroupIsTheLargerComponent) {
  const CliResult r = RunCli({"delta", "--epsilon", "0.5", "--tau", "1",
                              "--tau-star", "4", "--sigma", "1", "--cu", "1",
                              "--format", "csv"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = CsvRows(r.out);
  EXPECT_EQ(std::stod(rows[1][2]),
            std::max(std::stod(rows[1][3]), std::stod(rows[1][4])));
}

TEST(DeltaCommandTest, TableOutputRoundsWithFootnote) {
  auto args = kUrlDelta;
  args.back() = "table";
  const CliResult r = RunCli(args);
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("1.0031e-05"), std::string::npos);
  EXPECT_NE(r.out.find("6 significant digits"), std::string::npos);
}

TEST(DeltaCommandTest, JsonOutputParses) {
  auto args = kUrlDelta;
  args.back() = "json";
  const CliResult r = RunCli(args);
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["rows"].size(), 3u);
  EXPECT_EQ(doc["rows"][0]["accounting"], "exact");
}

TEST(ExitCodeTest, UsageDomainAndIo) {
  EXPECT_EQ(RunCli({"delta", "--tau-star", "3", "--sigma", "1"}).code,
            kExitUsage);
  EXPECT_EQ(RunCli({"delta", "--epsilon", "abc"}).code, kExitUsage);
  EXPECT_EQ(RunCli({"bogus"}).code, kExitUsage);
  EXPECT_EQ(RunCli({"delta", "--epsilon", "1", "--tau-star", "3"}).code,
            kExitUsage);
  const CliResult domain = RunCli(
      {"delta", "--epsilon", "1", "--tau", "5", "--tau-star", "3", "--sigma", "1"});
  EXPECT_EQ(domain.code, kExitDomain);
  EXPECT_NE(domain.err.find("tau_high"), std::string::npos);
  EXPECT_EQ(RunCli({"run", "--input", "/nonexistent/x.csv", "--config",
                    TestData("fixture_config.json")})
                .code,
            kExitIo);
}

TEST(CalibrateCommandTest, PublishedSigmaGivesBothGaps) {
  const CliResult r = RunCli({"calibrate", "--solve", "tau-star", "--sigma",
                              "2396", "--epsilon", "0.349", "--delta", "1e-5",
                              "--cu", "51914", "--tau", "1", "--integer-gap",
                              "--format", "csv"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = CsvRows(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "add");
  EXPECT_NEAR(std::stod(rows[1][1]), 15148, 1);
  EXPECT_EQ(rows[2][0], "exact");
  EXPECT_NEAR(std::stod(rows[2][1]), 14998, 1);
}

TEST(CalibrateCommandTest, AddInfeasibleAtGaussianLimit) {
  const std::string target =
      FormatDouble(GaussianCalibratedDelta(2228, 0.349, 51914));
  const CliResult r = RunCli({"calibrate", "--solve", "tau-star", "--sigma",
                              "2228", "--epsilon", "0.349", "--delta", target,
                              "--cu", "51914", "--integer-gap", "--format",
                              "csv"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = CsvRows(r.out);
  EXPECT_EQ(rows[1][2], "INFEASIBLE");
  EXPECT_EQ(rows[2][2], "ok");
  EXPECT_NEAR(std::stod(rows[2][1]), 13947, 1);
}

TEST(CalibrateCommandTest, EpsilonBelowAsymptoteIsInfeasible) {
  const CliResult r = RunCli({"calibrate", "--solve", "epsilon", "--tau-star",
                              "16177", "--sigma", "2228", "--cu", "51914",
                              "--delta", "1e-9", "--format", "csv"});
  EXPECT_EQ(r.code, kExitDomain);
  const auto rows = CsvRows(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][3], "delta_below_infinite");
  EXPECT_EQ(rows[2][3], "delta_below_infinite");
}

TEST(CalibrateCommandTest, MissingTargetIsUsageError) {
  EXPECT_EQ(RunCli({"calibrate", "--solve", "tau-star", "--sigma", "3"}).code,
            kExitUsage);
  EXPECT_EQ(RunCli({"calibrate", "--sigma", "3", "--epsilon", "1"}).code,
            kExitUsage);
}

TEST(CurveCommandTest, RowCountAndConsistencyWithDelta) {
  const CliResult r = RunCli({"curve", "--eps-min", "0.2", "--eps-max", "0.4",
                              "--points", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = CsvRows(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"epsilon", "delta_exact",
                                               "delta_add", "ratio"}));
  const GshmParams p = UrlParams(16177);
  for (int i = 1; i <= 2; ++i) {
    const double eps = std::stod(rows[i][0]);
    const CliResult d = RunCli({"delta", "--epsilon", rows[i][0], "--tau", "1",
                                "--tau-star", "16177", "--sigma", "2228",
                                "--cu", "51914", "--format", "csv"});
    const auto drows = CsvRows(d.out);
    EXPECT_EQ(rows[i][1], drows[1][2]);
    EXPECT_EQ(rows[i][2], drows[2][2]);
    EXPECT_EQ(rows[i][1], FormatDouble(ExactDelta(p, eps).delta_exact));
  }
  EXPECT_EQ(CsvRows(RunCli({"curve", "--points", "7"}).out).size(), 8u);
}

TEST(CurveCommandTest, DefaultsSpanRatioMilestones) {
  const CliResult r = RunCli({"curve", "--points", "32"});
  ASSERT_EQ(r.code, kExitOk);
  const auto rows = CsvRows(r.out);
  // Delta falls with epsilon, so the ratio climbs from about 1.001 at the
  // left end toward 2 near delta_infinite at the right.
  EXPECT_LT(std::stod(rows[1][3]), 1.01);
  EXPECT_GT(std::stod(rows.back()[3]), 1.5);
  EXPECT_EQ(rows[1][0], "0.10000000000000001");
  EXPECT_EQ(rows.back()[0], "0.504");
}

TEST(CurveCommandTest, BadGridIsUsageError) {
  EXPECT_EQ(RunCli({"curve", "--eps-min", "0.5", "--eps-max", "0.1"}).code,
            kExitUsage);
  EXPECT_EQ(RunCli({"curve", "--points", "1"}).code, kExitUsage);
}

TEST(RunCommandTest, MatchesGoldenRelease) {
  const fs::path dir = TempDir("golden");
  const fs::path release = dir / "release.csv";
  const CliResult r =
      RunCli({"run", "--input", TestData("fixture.csv"), "--config",
              TestData("fixture_config.json"), "--seed", "42", "--output",
              release.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string text = ReadFile(release);
  EXPECT_EQ(text, ReadFile(TestData("golden_release.csv")));
  // zines has 2 users, below tau = 3.
  EXPECT_EQ(text.find("zines"), std::string::npos);

  const auto bounding =
      nlohmann::json::parse(ReadFile(dir / "release.csv.bounding.json"));
  EXPECT_EQ(bounding["rejected"], 3);
  EXPECT_EQ(bounding["merged"], 1);
  EXPECT_EQ(bounding["truncated"], 2);
  EXPECT_EQ(bounding["rejections"][0]["line"], 50);
  const auto accounting =
      nlohmann::json::parse(ReadFile(dir / "release.csv.accounting.json"));
  ASSERT_EQ(accounting.size(), 2u);
  EXPECT_EQ(accounting[1]["epsilon"], 2.0);
}

TEST(RunCommandTest, ThreadCountDoesNotChangeBytes) {
  const fs::path dir = TempDir("threads");
  std::string previous;
  for (const char* threads : {"1", "3", "8"}) {
    ::setenv("GSHM_THREADS", threads, 1);
    const fs::path release = dir / (std::string("release") + threads + ".csv");
    const CliResult r =
        RunCli({"run", "--input", TestData("fixture.csv"), "--config",
                TestData("fixture_config.json"), "--output", release.string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const std::string text = ReadFile(release) +
                             ReadFile(release.string() + ".accounting.json");
    if (!previous.empty()) {
      EXPECT_EQ(text, previous);
    }
    previous = text;
  }
  ::unsetenv("GSHM_THREADS");
}

TEST(RunCommandTest, JsonReleaseAndStdoutMode) {
  const CliResult r =
      RunCli({"run", "--input", TestData("fixture.csv"), "--config",
              TestData("fixture_config.json"), "--format", "json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["value_columns"][0], "spend");
  EXPECT_NE(r.err.find("bounding report"), std::string::npos);
}

TEST(RunCommandTest, MissingHeaderReportsLine) {
  const fs::path dir = TempDir("header");
  const fs::path input = dir / "bad.csv";
  std::ofstream(input) << "\nonlyone\n";
  const CliResult r = RunCli({"run", "--input", input.string(), "--config",
                              TestData("fixture_config.json")});
  EXPECT_EQ(r.code, kExitIo);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(VerifyCommandTest, SingleRowSelfTest) {
  const CliResult r = RunCli({"verify", "--a-plus", "1", "--a-equal", "0",
                              "--sigma", "1", "--tau", "1", "--tau-star", "3",
                              "--epsilon", "0.5", "--samples", "1000000"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("overall: PASS"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("quadrature_forward"), std::string::npos);
}

TEST(VerifyCommandTest, AtThresholdRowForwardIsSuppressionTail) {
  const CliResult r = RunCli({"verify", "--a-plus", "0", "--a-equal", "1",
                              "--sigma", "1", "--tau", "1", "--tau-star", "3",
                              "--epsilon", "0.5", "--samples", "200000",
                              "--format", "csv"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = CsvRows(r.out);
  EXPECT_EQ(rows[1][0], "forward");
  EXPECT_NEAR(std::stod(rows[1][3]), 1.0 - StdNormalCdf(2.0), 1e-15);
  EXPECT_EQ(rows[1][4], "PASS");
}

TEST(VerifyCommandTest, MixedPairAgainstExactDelta) {
  const CliResult r = RunCli({"verify", "--a-plus", "1", "--a-equal", "1",
                              "--sigma", "1", "--tau", "1", "--tau-star", "3",
                              "--epsilon", "0.5", "--samples", "400000"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("overall: PASS"), std::string::npos) << r.out;
}

TEST(VerifyCommandTest, DeskScaleLimits) {
  EXPECT_EQ(RunCli({"verify", "--epsilon", "0.5", "--tau-star", "3", "--sigma",
                    "1", "--samples", "100"})
                .code,
            kExitUsage);
  EXPECT_EQ(RunCli({"verify", "--epsilon", "0.5", "--tau-star", "3", "--sigma",
                    "1", "--cu", "5"})
                .code,
            kExitUsage);
}

TEST(OptionsFileTest, FileValuesWithExplicitOverride) {
  const fs::path dir = TempDir("options");
  const fs::path file = dir / "options.json";
  std::ofstream(file) << R"({"epsilon": 0.349, "tau": 1, "tau-star": 13948,
      "sigma": 2228, "cu": 51914, "format": "csv", "accounting": "exact"})";
  const CliResult from_file =
      RunCli({"delta", "--options-file", file.string()});
  ASSERT_EQ(from_file.code, kExitOk) << from_file.err;
  auto args = kUrlDelta;
  args.insert(args.end(), {"--accounting", "exact"});
  EXPECT_EQ(from_file.out, RunCli(args).out);

  const CliResult overridden = RunCli(
      {"delta", "--options-file", file.string(), "--tau-star", "16177"});
  const auto rows = CsvRows(overridden.out);
  EXPECT_EQ(rows[1][2],
            FormatDouble(ExactDelta(UrlParams(16177), 0.349).delta_exact));
  EXPECT_EQ(RunCli({"delta", "--options-file", (dir / "missing.json").string()})
                .code,
            kExitIo);
}

}  // namespace
}  // namespace gshm::cli
