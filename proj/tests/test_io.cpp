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

#include <random>
#include <sstream>

#include "retinarisk/endpoint.hpp"
#include "retinarisk/error.hpp"
#include "retinarisk/io.hpp"
#include "test_util.hpp"

using namespace retinarisk;

namespace {

csv::Table table(const std::string& text) {
  std::istringstream in(text);
  return csv::read(in, "mem.csv");
}

io::VisitsData visits(const std::string& text) {
  return io::parse_visits(table(text), GradingProtocol::EyePacsModifiedEtdrs, "mem.csv");
}

bool mentions(const std::vector<io::Diagnostic>& d, const std::string& needle) {
  for (const auto& x : d) {
    if (x.message.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(Csv, QuotingAndWidth) {
  const auto t = table("a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\n3,4\n");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "x,1");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
  EXPECT_EQ(t.lines[1], 3u);
  EXPECT_EQ(csv::escape("x,1"), "\"x,1\"");
  EXPECT_THROW(table("a,b\n1,2,3\n"), Error);
  EXPECT_FALSE(csv::parse_double("1.5x"));
  EXPECT_FALSE(csv::parse_double(""));
}

TEST(Csv, DoubleFormattingRoundTrips) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) / (1 + i);
    EXPECT_EQ(*csv::parse_double(csv::format_double(x)), x);
  }
  EXPECT_EQ(csv::format_double(0.1), "0.1");
}

TEST(Visits, DuplicateReportsBothLines) {
  const auto v = visits(
      "patient_id,eye,visit_day,gradable,dr_grade,dme\n"
      "P1,OD,0,1,0,0\n"
      "P1,OD,300,1,1,0\n"
      "P1,OD,300,1,2,0\n");
  ASSERT_EQ(io::count_errors(v.diagnostics), 1u);
  const auto& d = v.diagnostics[0];
  EXPECT_TRUE(d.message.find("duplicate") != std::string::npos);
  EXPECT_EQ(d.line, 3u);
  EXPECT_EQ(d.other_line, 4u);
}

TEST(Visits, GradableWithoutGradeAndUngradableWithGrade) {
  const auto v = visits(
      "patient_id,eye,visit_day,gradable,dr_grade,dme\n"
      "P1,OD,0,1,,\n"
      "P1,OS,0,0,2,\n"
      "P1,OS,10,2,,\n");
  EXPECT_EQ(io::count_errors(v.diagnostics), 3u);
  EXPECT_TRUE(mentions(v.diagnostics, "no dr_grade"));
  EXPECT_TRUE(mentions(v.diagnostics, "ungradable visit"));
  EXPECT_TRUE(mentions(v.diagnostics, "gradable must be"));
}

TEST(Visits, MissingColumnsAndBadEye) {
  EXPECT_TRUE(mentions(visits("patient_id,eye,gradable\nP1,OD,1\n").diagnostics, "malformed header"));
  EXPECT_TRUE(mentions(visits("patient_id,eye,visit_day,gradable,dr_grade\nP1,XX,0,1,0\n").diagnostics,
                       "OD or OS"));
}

TEST(Visits, DatesUseEarliestVisitAsEpoch) {
  const auto v = visits(
      "patient_id,eye,visit_date,gradable,dr_grade\n"
      "P1,OD,2020-01-10,1,0\n"
      "P1,OD,2019-12-31,1,0\n"
      "P2,OS,2021-01-09,1,1\n");
  EXPECT_EQ(io::count_errors(v.diagnostics), 0u);
  ASSERT_TRUE(v.epoch_days);
  EXPECT_EQ(*v.epoch_days, *io::parse_iso_date("2019-12-31"));
  EXPECT_EQ(v.cohort.eyes[0].visits[0].day, 0);
  EXPECT_EQ(v.cohort.eyes[0].visits[1].day, 10);
  EXPECT_EQ(v.cohort.eyes[1].visits[0].day, 375);
  EXPECT_TRUE(mentions(v.diagnostics, "not in day order"));
  EXPECT_EQ(*io::parse_iso_date("1970-01-01"), 0);
  EXPECT_EQ(*io::parse_iso_date("2000-03-01T12:00:00"), 11017);
  EXPECT_FALSE(io::parse_iso_date("2021-02-30"));
}

TEST(Visits, WriteThenParseRoundTrips) {
  Cohort c;
  c.eyes.push_back(testutil::eye("A", {testutil::graded(0, DRGrade::NoDR), testutil::ungradable(50),
                                       testutil::graded(400, DRGrade::Moderate, true)}));
  c.eyes.push_back(testutil::eye("B", {testutil::graded(3, DRGrade::Mild)}, EyeSide::OS));
  std::ostringstream out;
  io::write_visits(out, c);
  const auto back = visits(out.str());
  ASSERT_EQ(io::count_errors(back.diagnostics), 0u);
  ASSERT_EQ(back.cohort.eyes.size(), 2u);
  const auto& a = back.cohort.eyes[0].visits;
  ASSERT_EQ(a.size(), 3u);
  EXPECT_FALSE(a[1].gradable);
  EXPECT_EQ(*a[2].grade, DRGrade::Moderate);
  EXPECT_TRUE(a[2].has_dme());
  std::ostringstream again;
  io::write_visits(again, back.cohort);
  EXPECT_EQ(again.str(), out.str());
}

TEST(Scores, RangeAndDuplicates) {
  const auto s = io::parse_scores(table("patient_id,eye,visit_day,score\n"
                                        "P1,OD,0,1.2\n"
                                        "P1,OD,5,0.4\n"
                                        "P1,OD,5,0.3\n"
                                        "P1,OS,0,abc\n"),
                                  "s.csv");
  EXPECT_EQ(io::count_errors(s.diagnostics), 3u);
  EXPECT_TRUE(mentions(s.diagnostics, "out of [0,1]"));
  EXPECT_TRUE(mentions(s.diagnostics, "not a number"));
  EXPECT_EQ(s.rows.size(), 1u);
}

TEST(Scores, WriteThenParseRoundTripsAtSixDecimals) {
  std::vector<Prediction> p(3);
  p[0] = {0.123457, false, {"A", EyeSide::OD, 0}};
  p[1] = {1.0, false, {"A", EyeSide::OS, 30}};
  p[2] = {0.0, false, {"B", EyeSide::OD, 7}};
  std::ostringstream out;
  io::write_scores(out, p);
  const auto back = io::parse_scores(table(out.str()), "s.csv");
  ASSERT_EQ(back.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.rows[i].score, p[i].score);
    EXPECT_EQ(back.rows[i].key, p[i].key);
  }
}

TEST(RiskFactors, ParsesKnownAndExtraColumns) {
  const auto r = io::parse_risk_factors(
      table("patient_id,age,hba1c,diabetic_control,insulin_use,bmi,race_ethnicity\n"
            "P1,64,7.1,good,1,28.5,White\n"
            "P2,,,,0,,Black\n"),
      "r.csv");
  EXPECT_EQ(io::count_errors(r.diagnostics), 0u);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(*r.records[0].diabetic_control, DiabeticControl::Good);
  EXPECT_EQ(r.records[0].extra_numeric.at("bmi"), 28.5);
  EXPECT_EQ(r.records[1].extra_categorical.at("race_ethnicity"), "Black");
  EXPECT_FALSE(r.records[1].age);
  EXPECT_FALSE(*r.records[1].insulin_use);
}

TEST(RiskFactors, DuplicateKeyIsAnError) {
  const auto r = io::parse_risk_factors(table("patient_id,hba1c\nP1,7\nP1,8\n"), "r.csv");
  EXPECT_EQ(io::count_errors(r.diagnostics), 1u);
  EXPECT_TRUE(mentions(r.diagnostics, "duplicate"));
}

TEST(RiskFactors, WriteThenParseRoundTrips) {
  RiskFactorRecord a;
  a.patient_id = "A";
  a.age = 55;
  a.sex = "F";
  a.hba1c = 8.25;
  a.years_with_diabetes = 12;
  a.diabetic_control = DiabeticControl::Poor;
  a.insulin_use = true;
  a.hypertension = false;
  RiskFactorRecord b;
  b.patient_id = "B";
  b.eye = EyeSide::OS;
  std::ostringstream out;
  io::write_risk_factors(out, {a, b});
  const auto back = io::parse_risk_factors(table(out.str()), "r.csv");
  ASSERT_EQ(back.records.size(), 2u);
  const auto& x = back.records[0];
  EXPECT_EQ(x.age, a.age);
  EXPECT_EQ(x.sex, a.sex);
  EXPECT_EQ(x.hba1c, a.hba1c);
  EXPECT_EQ(x.diabetic_control, a.diabetic_control);
  EXPECT_EQ(x.insulin_use, a.insulin_use);
  EXPECT_EQ(x.hypertension, a.hypertension);
  EXPECT_EQ(back.records[1].eye, EyeSide::OS);
  EXPECT_FALSE(back.records[1].hba1c);
}

TEST(Labels, WriteThenLoadRoundTrips) {
  Cohort c;
  c.eyes.push_back(testutil::eye("A", {testutil::graded(0, DRGrade::NoDR), testutil::graded(700, DRGrade::Mild)}));
  c.eyes.push_back(testutil::eye("B", {testutil::graded(0, DRGrade::NoDR), testutil::graded(800, DRGrade::NoDR)}));
  c.eyes.push_back(testutil::eye("C", {testutil::graded(0, DRGrade::NoDR), testutil::graded(300, DRGrade::NoDR)}));
  const LabelTable t = label_cohort(c, OutcomeThreshold::MildPlus);
  testutil::TempDir dir("labels");
  {
    std::ofstream f(dir.file("labels.csv"));
    io::write_labels(f, t);
  }
  const auto rows = io::load_labels(dir.file("labels.csv"));
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rows[i].patient_id, t.rows[i].patient_id);
    EXPECT_EQ(rows[i].outcome, t.rows[i].outcome);
    EXPECT_EQ(rows[i].survival, t.rows[i].survival);
  }
}

TEST(Joins, BaselineScoreIsEarliestVisitAndUnknownsSkipped) {
  std::vector<Prediction> s = {{0.9, false, {"A", EyeSide::OD, 100}},
                               {0.2, false, {"A", EyeSide::OD, 0}},
                               {0.5, false, {"B", EyeSide::OD, 0}},
                               {0.7, false, {"Z", EyeSide::OD, 0}}};
  std::vector<LabelRow> labels(3);
  labels[0].patient_id = "A";
  labels[0].outcome = OutcomeLabel::Positive;
  labels[1].patient_id = "B";
  labels[1].outcome = OutcomeLabel::Unknown;
  labels[2].patient_id = "C";
  labels[2].outcome = OutcomeLabel::Negative;
  io::JoinReport report;
  const PredictionSet p = io::join_baseline_scores(s, labels, &report);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.items()[0].score, 0.2);
  EXPECT_TRUE(p.items()[0].label);
  EXPECT_FALSE(report.unmatched_left.empty());
  EXPECT_FALSE(report.unmatched_right.empty());
}

TEST(Joins, EyeLevelFactorsTakePrecedence) {
  std::vector<LabelRow> labels(2);
  labels[0].patient_id = "A";
  labels[1].patient_id = "A";
  labels[1].side = EyeSide::OS;
  RiskFactorRecord patient, os;
  patient.patient_id = os.patient_id = "A";
  patient.hba1c = 7;
  os.eye = EyeSide::OS;
  os.hba1c = 9;
  const auto j = io::join_risk_factors(labels, {patient, os});
  EXPECT_EQ(*j[0]->hba1c, 7);
  EXPECT_EQ(*j[1]->hba1c, 9);
}
