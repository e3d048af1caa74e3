/*
 * Copyright 2026 The retinarisk Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "retinarisk/cli/app.hpp"
#include "test_util.hpp"

namespace cli = retinarisk::cli;
using Json = nlohmann::json;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "retinarisk");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::main_entry(static_cast<int>(argv.size()), argv.data());
}

Json read_json(const std::string& path) { return Json::parse(testutil::slurp(path)); }

class CliFlow : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testutil::TempDir("cli");
    ASSERT_EQ(run({"simulate", "--n-patients", "600", "--seed", "4", "--out-dir", data()}), 0);
  }
  static void TearDownTestSuite() { delete dir_; }
  static std::string data() { return dir_->file("data"); }
  static std::string out(const std::string& name) { return dir_->file(name); }
  static testutil::TempDir* dir_;
};
testutil::TempDir* CliFlow::dir_ = nullptr;

}  // namespace

TEST_F(CliFlow, SimulateLabelAuc) {
  const auto manifest = read_json(data() + "/simulate.json");
  EXPECT_EQ(manifest["manifest"]["subcommand"], "simulate");
  ASSERT_EQ(run({"label", "--visits", data() + "/visits.csv", "--scores", data() + "/scores.csv",
                 "--out-dir", out("label")}),
            0);
  const auto label = read_json(out("label") + "/label.json");
  EXPECT_EQ(label["manifest"]["params"]["horizon_days"], 730);
  EXPECT_EQ(label["manifest"]["params"]["buffer_days"], 28);
  EXPECT_EQ(label["manifest"]["params"]["threshold"], "mild");
  EXPECT_GT(label["n_positive"].get<int>(), 0);
  ASSERT_EQ(run({"eval-auc", "--labels", out("label") + "/labels.csv", "--scores", data() + "/scores.csv",
                 "--out-dir", out("auc")}),
            0);
  const auto auc = read_json(out("auc") + "/eval-auc.json");
  EXPECT_GT(auc["auc"]["auc"].get<double>(), 0.5);
  EXPECT_TRUE(std::filesystem::exists(out("auc") + "/roc.csv"));
}

TEST_F(CliFlow, CheckPasses) {
  EXPECT_EQ(run({"check", "--dir", data(), "--out-dir", out("check")}), 0);
  const auto j = read_json(out("check") + "/check.json");
  EXPECT_TRUE(j.contains("items"));
}

TEST_F(CliFlow, ThreadCountDoesNotChangeOutputs) {
  ASSERT_EQ(run({"simulate", "--n-patients", "600", "--seed", "4", "--threads", "3", "--out-dir",
                 out("data3")}),
            0);
  for (const char* f : {"visits.csv", "scores.csv", "risk_factors.csv", "ground_truth.json"}) {
    EXPECT_EQ(testutil::slurp(data() + "/" + f), testutil::slurp(out("data3") + "/" + f)) << f;
  }
}

TEST_F(CliFlow, ManifestPipelineRuns) {
  const std::string m = dir_->write("run.json", "{\"inputs\": {\"visits\": \"data/visits.csv\", "
                                                "\"scores\": \"data/scores.csv\", "
                                                "\"risk_factors\": \"data/risk_factors.csv\"}, "
                                                "\"params\": {\"seed\": 3}}");
  ASSERT_EQ(run({"run", "--manifest", m, "--out-dir", out("pipeline")}), 0);
  for (const char* f : {"run.json", "labels.csv", "eval-auc.json", "km.csv", "logrank.json", "cox.json",
                        "logit_compare.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(out("pipeline") + "/" + f)) << f;
  }
}

TEST_F(CliFlow, ExitCodes) {
  // missing file and malformed input
  EXPECT_EQ(run({"label", "--visits", out("nope.csv"), "--out-dir", out("x")}), 2);
  const std::string bad = dir_->write("bad.csv", "patient_id,eye,visit_day,gradable,dr_grade\nP1,OD,0,1,9\n");
  EXPECT_EQ(run({"label", "--visits", bad, "--out-dir", out("x")}), 2);
  EXPECT_EQ(run({"validate", "--visits", bad, "--out-dir", out("v")}), 2);
  // unknown flag value
  EXPECT_EQ(run({"--threshold", "severe", "label", "--visits", bad}), 2);
  EXPECT_EQ(run({"--horizon-days", "10", "--buffer-days", "20", "label", "--visits",
                 data() + "/visits.csv", "--out-dir", out("x")}),
            2);
  // single outcome class is a statistical precondition failure
  const std::string one = dir_->write("one.csv",
                                      "patient_id,eye,visit_day,gradable,dr_grade\n"
                                      "A,OD,0,1,0\nA,OD,740,1,1\nB,OD,0,1,0\nB,OD,735,1,2\n");
  ASSERT_EQ(run({"label", "--visits", one, "--out-dir", out("one")}), 0);
  const std::string sc = dir_->write("one_scores.csv", "patient_id,eye,visit_day,score\nA,OD,0,0.2\nB,OD,0,0.4\n");
  EXPECT_EQ(run({"eval-auc", "--labels", out("one") + "/labels.csv", "--scores", sc, "--out-dir", out("one")}),
            3);
}

TEST(CliExitCodes, ErrorKindMapping) {
  using retinarisk::ErrorKind;
  EXPECT_EQ(cli::exit_code_for(ErrorKind::InvalidInput), 2);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::Precondition), 3);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::Degenerate), 3);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::Separation), 3);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::Collinearity), 3);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::NonConvergence), 4);
}
