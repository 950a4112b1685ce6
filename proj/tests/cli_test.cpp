// Copyright 2026 The Wellsense Authors
//
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

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"
#include "wellsense/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wellsense {
namespace {

const fs::path kConfigs = WELLSENSE_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wellsense_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Exit status of the binary with stdout and stderr discarded.
int run(const std::string& args) {
  const std::string cmd = std::string("\"") + WELLSENSE_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

json manifest(const fs::path& dir) { return json::parse(read_text(dir / "manifest.json")); }

// Generated once per process; ctest may run the test cases concurrently.
const fs::path& pos_data() {
  static const fs::path dir = [] {
    const fs::path d = scratch("pos_data_" + std::to_string(::getpid()));
    if (run("generate " + q(kConfigs / "pos_default.json") + " --out " + q(d)) != 0) ADD_FAILURE() << "generate";
    return d;
  }();
  return dir;
}

TEST(Cli, GenerateWritesSeriesAndManifest) {
  const fs::path d = pos_data();
  const CsvTable obs = read_csv(d / "observations.csv");
  EXPECT_EQ(obs.rows.size(), 51u);
  EXPECT_EQ(obs.header.front(), "time_s");
  EXPECT_EQ(read_csv(d / "truth.csv").rows.size(), 51u);
  const json m = manifest(d);
  EXPECT_EQ(m["status"], "ok");
  EXPECT_EQ(m["command"], "generate");
  EXPECT_EQ(m["imperfect_observation"], false);
  EXPECT_TRUE(m["argv"].is_array());
  EXPECT_TRUE(m["timings_s"].contains("total"));
}

TEST(Cli, ImperfectScenarioIsFlagged) {
  const fs::path d = scratch("ios_gen");
  ASSERT_EQ(run("--seed 3 generate " + q(kConfigs / "ios_default.json") + " --out " + q(d)), 0);
  const json m = manifest(d);
  EXPECT_EQ(m["imperfect_observation"], true);
  EXPECT_EQ(m["truth_segment_length_m"], 5.0);
  EXPECT_EQ(m["assim_segment_length_m"], 50.0);
  EXPECT_EQ(m["seed"], 3);
}

TEST(Cli, FlagAndConfigErrorsExitTwo) {
  const fs::path d = scratch("flags");
  const std::string cfg = q(kConfigs / "pos_default.json");
  const std::string obs = q(pos_data() / "observations.csv");
  EXPECT_EQ(run("generate " + cfg), 2);
  EXPECT_EQ(run("filter " + cfg + " " + obs + " --regime manual --out " + q(d)), 2);
  EXPECT_EQ(run("filter " + cfg + " " + obs + " --regime lag1_em --sigma 1,1 --out " + q(d)), 2);
  EXPECT_EQ(run("filter " + cfg + " " + obs + " --regime manual --sigma 1 --out " + q(d)), 2);
  EXPECT_EQ(run("filter " + cfg + " " + obs + " --regime bogus --out " + q(d)), 2);
  EXPECT_EQ(run("optimize " + cfg + " " + obs + " --starts 0 --out " + q(d)), 2);

  json doc = json::parse(read_text(kConfigs / "pos_default.json"));
  doc["jump"].erase("probs");
  write_text(d / "broken.json", doc.dump());
  EXPECT_EQ(run("generate " + q(d / "broken.json") + " --out " + q(d / "g")), 2);
}

TEST(Cli, IoErrorsExitThree) {
  const fs::path d = scratch("io");
  EXPECT_EQ(run("generate " + q(d / "absent.json") + " --out " + q(d / "a")), 3);
  EXPECT_EQ(run("filter " + q(kConfigs / "pos_default.json") + " " + q(d / "absent.csv") +
                " --regime manual --sigma 0.5,0.5 --out " + q(d / "b")),
            3);
}

TEST(Cli, DegeneracyExitsFourUnlessReset) {
  const fs::path d = scratch("degenerate");
  CsvTable obs = read_csv(pos_data() / "observations.csv");
  obs.rows[4][1] = "1e200";
  write_csv(d / "observations.csv", obs);
  const std::string base = "filter " + q(kConfigs / "pos_default.json") + " " + q(d / "observations.csv") +
                           " --regime manual --sigma 0.5,0.5";
  EXPECT_EQ(run(base + " --out " + q(d / "abort")), 4);
  EXPECT_EQ(manifest(d / "abort")["status"], "degenerate");
  EXPECT_EQ(run("--degeneracy uniform-reset " + base + " --out " + q(d / "reset")), 0);
}

TEST(Cli, FilterIsReproducibleUnderSeed) {
  const fs::path d = scratch("repro");
  const std::string base = "filter " + q(kConfigs / "pos_default.json") + " " +
                           q(pos_data() / "observations.csv") + " --regime manual --sigma 0.5,0.5 --seed 7";
  ASSERT_EQ(run(base + " --out " + q(d / "a")), 0);
  ASSERT_EQ(run(base + " --out " + q(d / "b")), 0);
  EXPECT_EQ(read_text(d / "a" / "estimates.csv"), read_text(d / "b" / "estimates.csv"));
  ASSERT_EQ(run(base + " --threads 3 --out " + q(d / "c")), 0);
  EXPECT_EQ(read_text(d / "a" / "estimates.csv"), read_text(d / "c" / "estimates.csv"));
  EXPECT_FALSE(fs::exists(d / "a" / "variances.csv"));
}

TEST(Cli, OptimizeReportsBestEvaluation) {
  const fs::path d = scratch("optimize");
  const std::string base =
      "optimize " + q(kConfigs / "pos_default.json") + " " + q(pos_data() / "observations.csv") + " --starts 1";
  ASSERT_EQ(run(base + " --out " + q(d / "a")), 0);
  const json rep = json::parse(read_text(d / "a" / "optimizer_report.json"));
  const CsvTable evals = read_csv(d / "a" / "optimizer_evaluations.csv");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < evals.rows.size(); ++k) best = std::min(best, evals.number(k, "cost"));
  EXPECT_EQ(rep["best_cost"].get<double>(), best);
  EXPECT_EQ(rep["starts"].size(), 1u);
  EXPECT_EQ(manifest(d / "a")["status"], "ok");

  ASSERT_EQ(run(base + " --out " + q(d / "b")), 0);
  const json again = json::parse(read_text(d / "b" / "optimizer_report.json"));
  EXPECT_EQ(again["best_sigma"], rep["best_sigma"]);
}

TEST(Cli, ReportTabulatesRunDirectories) {
  const fs::path d = scratch("report");
  ASSERT_EQ(run("filter " + q(kConfigs / "pos_default.json") + " " + q(pos_data() / "observations.csv") +
                " --regime manual --sigma 0.5,0.5 --out " + q(d / "run")),
            0);
  ASSERT_EQ(run("report " + q(d / "run") + " --out " + q(d / "table")), 0);
  const CsvTable c = read_csv(d / "table" / "comparison.csv");
  ASSERT_EQ(c.rows.size(), 1u);
  EXPECT_EQ(c.header, (std::vector<std::string>{"row", "manual"}));
  const double rmse = c.number(0, 1);
  EXPECT_TRUE(std::isfinite(rmse));
  EXPECT_NEAR(rmse, load_run_summary(d / "run").time_mean_rmse, 1e-12);
  EXPECT_NE(read_text(d / "table" / "comparison.txt").find("manual"), std::string::npos);
}

}  // namespace
}  // namespace wellsense
