// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "owdc/cli.hpp"

namespace owdc {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  ADD_FAILURE() << "missing column " << name;
  return 0;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("owdc_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::filesystem::path dir_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(CliRun, PaperScenarioTable) {
  const auto r = run_cli({"run", "--builtin", "paper", "--rate", "2.8e9"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 13u);
  const auto& header = rows[0];
  EXPECT_EQ(header[0], "adt");
  for (const auto& row : rows) EXPECT_EQ(row.size(), header.size());
  const auto snr = column(header, "snr_db");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(std::stod(rows[i][snr]), 15.6) << rows[i][0] << " " << rows[i][2];
    EXPECT_EQ(rows[i][0], "ADT" + std::to_string((i - 1) / 4 + 1));
    EXPECT_EQ(rows[i][1], std::to_string((i - 1) % 4));
  }
  EXPECT_EQ(r.out.find(';'), std::string::npos);
}

TEST(CliRun, ExactAimSymmetry) {
  const auto r = run_cli({"run", "--builtin", "paper", "--rate", "2.8e9", "--aim", "exact"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  const auto snr = column(rows[0], "snr_db");
  // rows 5..8 are ADT2 -> R1..R4
  EXPECT_NEAR(std::stod(rows[5][snr]), std::stod(rows[8][snr]), 0.01);
  EXPECT_NEAR(std::stod(rows[6][snr]), std::stod(rows[7][snr]), 0.01);
}

TEST(CliRun, Deterministic) {
  const auto a = run_cli({"run", "--builtin", "paper"});
  const auto b = run_cli({"run", "--builtin", "paper"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(CliRun, ThreadCountDoesNotChangeOutput) {
  const auto serial = run_cli({"run", "--builtin", "paper", "--threads", "1"});
  ASSERT_EQ(serial.code, 0);
  for (const std::string t : {"2", "5", "16"}) {
    EXPECT_EQ(run_cli({"run", "--builtin", "paper", "--threads", t}).out, serial.out) << t;
  }
  EXPECT_EQ(run_cli({"sweep", "--builtin", "paper", "--param", "power", "--from", "0.1", "--to",
                     "0.2", "--steps", "2", "--threads", "3"})
                .out,
            run_cli({"sweep", "--builtin", "paper", "--param", "power", "--from", "0.1", "--to",
                     "0.2", "--steps", "2", "--threads", "1"})
                .out);
}

TEST(CliRun, JsonBerMatchesSnr) {
  const auto r = run_cli({"run", "--builtin", "paper", "--rate", "7e9", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.size(), 12u);
  for (const auto& row : j) {
    const double snr = std::pow(10.0, row["snr_db"].get<double>() / 10.0);
    const double ber = row["ber"].get<double>();
    const double expect = ber_from_snr(snr);
    if (expect == 0.0) {
      EXPECT_EQ(ber, 0.0);
    } else {
      EXPECT_NEAR(ber / expect, 1.0, 1e-12);
    }
  }
}

TEST_F(TempDir, InvalidScenarioFile) {
  Scenario s = paper_scenario(AimMode::kExact);
  s.receivers[0].position = {4, 1, 5};
  {
    std::ofstream f(path("bad.json"));
    f << serialize_scenario(s);
  }
  auto r = run_cli({"run", "--scenario", path("bad.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("outside room volume"), std::string::npos);

  {
    std::ofstream f(path("typo.json"));
    f << "{\"schema_version\": 1, \"rooom\": {}}";
  }
  r = run_cli({"run", "--scenario", path("typo.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("rooom"), std::string::npos);

  r = run_cli({"run", "--scenario", path("missing.json")});
  EXPECT_EQ(r.code, 2);
}

TEST(CliRun, BadFlags) {
  EXPECT_EQ(run_cli({"run", "--builtin", "other"}).code, 2);
  EXPECT_EQ(run_cli({"run", "--builtin", "paper", "--aim", "sideways"}).code, 2);
  EXPECT_EQ(run_cli({"run", "--builtin", "paper", "--format", "xml"}).code, 2);
  EXPECT_EQ(run_cli({"run", "--builtin", "paper", "--rate", "-1"}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
}

TEST(CliRun, ResourceCapExitCode) {
  const auto r = run_cli({"run", "--builtin", "paper", "--element-size", "0.005"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("cap"), std::string::npos);
}

TEST(CliRates, PaperScenario) {
  const auto r = run_cli({"rates", "--builtin", "paper"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 13u);
  const auto rate = column(rows[0], "achievable_rate_hz");
  const auto status = column(rows[0], "rate_status");
  const double ceiling = 5e9 / 0.7;
  double slowest_other = ceiling;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const bool long_link = (rows[i][0] == "ADT1" && rows[i][2] == "R4") ||
                           (rows[i][0] == "ADT3" && rows[i][2] == "R1");
    const double v = std::stod(rows[i][rate]);
    if (long_link) {
      EXPECT_EQ(rows[i][status], "bisected");
      EXPECT_LT(v, ceiling);
    } else {
      EXPECT_EQ(rows[i][status], "ceiling");
      EXPECT_NEAR(v, ceiling, 1e3);
      slowest_other = std::min(slowest_other, v);
    }
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(std::stod(rows[i][rate]), slowest_other);
  }
}

TEST(CliRates, LooseTargetAllAtCeiling) {
  const auto r = run_cli({"rates", "--builtin", "paper", "--target-ber", "0.4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  const auto status = column(rows[0], "rate_status");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][status], "ceiling");
}

TEST(CliSweep, PowerSweepLiftsLongLink) {
  const auto r = run_cli({"sweep", "--builtin", "paper", "--param", "power", "--from", "0.15",
                          "--to", "0.60", "--steps", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 1u + 4u * 12u);
  const auto& h = rows[0];
  bool reached = false;
  double prev = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][column(h, "adt")] != "ADT1" || rows[i][column(h, "receiver")] != "R4") continue;
    const double rate = std::stod(rows[i][column(h, "achievable_rate_hz")]);
    EXPECT_GE(rate, prev);
    prev = rate;
    reached = reached || rows[i][column(h, "rate_status")] == "ceiling";
  }
  EXPECT_TRUE(reached);
}

TEST(CliSweep, EmptyRangeAndBadParameter) {
  auto r = run_cli({"sweep", "--builtin", "paper", "--param", "rate", "--steps", "0"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(parse_csv(r.out).size(), 1u);
  r = run_cli({"sweep", "--builtin", "paper", "--param", "humidity", "--steps", "3"});
  EXPECT_EQ(r.code, 2);
  r = run_cli({"sweep", "--builtin", "paper", "--param", "rate", "--from", "-1", "--to", "1e9",
               "--steps", "3"});
  EXPECT_EQ(r.code, 2);
}

TEST(CliSweep, RateSweepPerReceiverSnr) {
  const auto r = run_cli({"sweep", "--builtin", "paper", "--param", "rate", "--from", "1e9", "--to",
                          "7e9", "--steps", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 37u);
  const auto snr = column(rows[0], "snr_db");
  // SNR falls with rate for each link
  for (std::size_t i = 1; i <= 12; ++i) {
    EXPECT_GT(std::stod(rows[i][snr]), std::stod(rows[i + 12][snr]));
    EXPECT_GT(std::stod(rows[i + 12][snr]), std::stod(rows[i + 24][snr]));
  }
}

TEST(CliSweep, BackgroundLowersSnr) {
  const auto r = run_cli({"sweep", "--builtin", "paper", "--param", "background", "--from", "0",
                          "--to", "1e-3", "--steps", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  const auto snr = column(rows[0], "snr_db");
  for (std::size_t i = 1; i <= 12; ++i) {
    EXPECT_GT(std::stod(rows[i][snr]), std::stod(rows[i + 12][snr]));
  }
}

TEST(CliIr, OrderZeroSingleRow) {
  const auto r = run_cli({"ir", "--builtin", "paper", "--adt", "ADT2", "--branch", "0",
                          "--receiver", "R1", "--reflections", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("# adt=ADT2", 0), 0u);
  EXPECT_NE(r.out.find("max_reflections=0"), std::string::npos);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows[0], (std::vector<std::string>{"time_s", "power_w"}));
  int nonzero = 0;
  double t = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (std::stod(rows[i][1]) != 0.0) {
      ++nonzero;
      t = std::stod(rows[i][0]);
    }
  }
  EXPECT_EQ(nonzero, 1);
  const double delay = std::sqrt(10.0) / kSpeedOfLight;
  EXPECT_LE(t, delay);
  EXPECT_GT(t + 1e-10, delay);
}

TEST(CliIr, FirstOrderAddsLittle) {
  auto total = [](const std::string& out) {
    const auto pos = out.find("total_power_w=");
    return std::stod(out.substr(pos + 14));
  };
  for (const std::string rx : {"R1", "R2", "R3", "R4"}) {
    const auto branch = std::to_string(rx[1] - '1');
    const auto r0 = run_cli({"ir", "--builtin", "paper", "--adt", "ADT1", "--branch", branch,
                             "--receiver", rx, "--reflections", "0"});
    const auto r1 = run_cli({"ir", "--builtin", "paper", "--adt", "ADT1", "--branch", branch,
                             "--receiver", rx, "--reflections", "1"});
    ASSERT_EQ(r1.code, 0);
    EXPECT_LT(total(r1.out) / total(r0.out) - 1.0, 0.01) << rx;
    EXPECT_GE(total(r1.out), total(r0.out));
  }
}

TEST(CliIr, UnknownNames) {
  EXPECT_EQ(run_cli({"ir", "--builtin", "paper", "--adt", "ADT2", "--branch", "0", "--receiver",
                     "R9"})
                .code,
            2);
  EXPECT_EQ(run_cli({"ir", "--builtin", "paper", "--adt", "ADT7", "--branch", "0", "--receiver",
                     "R1"})
                .code,
            2);
  EXPECT_EQ(run_cli({"ir", "--builtin", "paper", "--adt", "ADT2", "--branch", "4", "--receiver",
                     "R1"})
                .code,
            2);
}

TEST_F(TempDir, PaperExportReparses) {
  auto r = run_cli({"paper", "--out", path("paper.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Scenario s = load_scenario_file(path("paper.json"));
  EXPECT_TRUE(validate(s).empty());
  EXPECT_EQ(s, paper_scenario(AimMode::kPaperAngles));
  const double el[] = {18, 45, 45, 18};
  for (int i = 0; i < 4; ++i) EXPECT_EQ(s.adts[1].branches[i].aim.elevation_deg, el[i]);

  r = run_cli({"validate", "--scenario", path("paper.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "ok\n");

  r = run_cli({"paper", "--aim", "exact"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(parse_scenario(r.out), paper_scenario(AimMode::kExact));
}

TEST_F(TempDir, FlagsOverrideScenarioFile) {
  Scenario s = paper_scenario(AimMode::kExact);
  s.sim.max_reflections = 0;
  {
    std::ofstream f(path("s.json"));
    f << serialize_scenario(s);
  }
  const std::vector<std::string> base{"ir",         "--scenario", path("s.json"), "--adt", "ADT1",
                                      "--branch",   "3",          "--receiver",   "R4"};
  auto r = run_cli(base);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("max_reflections=0"), std::string::npos);

  auto flagged = base;
  flagged.insert(flagged.end(), {"--reflections", "1", "--bin-width", "2e-10"});
  r = run_cli(flagged);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("max_reflections=1"), std::string::npos);
  EXPECT_NE(r.out.find("bin_width_s=2e-10"), std::string::npos);

  // --aim is meaningless for a file
  flagged = base;
  flagged.insert(flagged.end(), {"--aim", "exact"});
  EXPECT_EQ(run_cli(flagged).code, 2);
}

TEST_F(TempDir, OutFlagWritesFile) {
  const auto r = run_cli({"rates", "--builtin", "paper", "--out", path("rates.csv")});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(slurp(path("rates.csv")), run_cli({"rates", "--builtin", "paper"}).out);
}

TEST(CliValidate, ReportsFindings) {
  const auto r = run_cli({"validate", "--builtin", "paper", "--aim", "exact"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "ok\n");
}

TEST(FormatFloat, NineDigitsLocaleFree) {
  EXPECT_EQ(format_float(0.1), "0.1");
  EXPECT_EQ(format_float(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_float(2.8e9), "2.8e+09");
  EXPECT_EQ(format_float(kSnrDbFloor), "-300");
}

}  // namespace
}  // namespace owdc
