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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "reference_data.hpp"
#include "retinarisk/error.hpp"
#include "retinarisk/metrics.hpp"

using namespace retinarisk;

namespace {

double pair_count_auc(const std::vector<double>& s, const std::vector<bool>& y) {
  double num = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      pairs += 1.0;
    }
  }
  return num / pairs;
}

// DeLong structural components by direct O(n^2) summation.
double delong_se_oracle(const std::vector<double>& s, const std::vector<bool>& y) {
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < s.size(); ++i) (y[i] ? pos : neg).push_back(s[i]);
  const double m = pos.size(), n = neg.size();
  auto psi = [](double a, double b) { return a > b ? 1.0 : (a == b ? 0.5 : 0.0); };
  std::vector<double> v10(pos.size()), v01(neg.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    for (std::size_t j = 0; j < neg.size(); ++j) {
      const double p = psi(pos[i], neg[j]);
      v10[i] += p / n;
      v01[j] += p / m;
    }
  }
  auto var = [](const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / (v.size() - 1.0);
  };
  return std::sqrt(var(v10) / m + var(v01) / n);
}

struct Sample {
  std::vector<double> scores;
  std::vector<bool> labels;
};

Sample random_sample(std::mt19937_64& rng, std::size_t n, bool coarse) {
  Sample out;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.4);
  for (std::size_t i = 0; i < n; ++i) {
    const bool y = coin(rng);
    double s = std::clamp(u(rng) * 0.7 + (y ? 0.3 : 0.0), 0.0, 1.0);
    if (coarse) s = std::round(s * 10.0) / 10.0;
    out.scores.push_back(s);
    out.labels.push_back(y);
  }
  out.labels[0] = true;
  out.labels[1] = false;
  return out;
}

}  // namespace

TEST(Auc, TrivialCases) {
  auto p = PredictionSet::from_vectors(std::vector<double>{0.9, 0.8, 0.1, 0.2},
                                       std::vector<bool>{true, true, false, false});
  EXPECT_DOUBLE_EQ(auc_delong(p).auc, 1.0);
  auto t = PredictionSet::from_vectors(std::vector<double>{0.4, 0.4, 0.4, 0.4, 0.4},
                                       std::vector<bool>{true, false, true, false, false});
  EXPECT_DOUBLE_EQ(auc_delong(t).auc, 0.5);
  auto one = PredictionSet::from_vectors(std::vector<double>{0.4, 0.6}, std::vector<bool>{true, true});
  try {
    auc_delong(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Precondition);
  }
}

TEST(Auc, MatchesPairCountAndDelongOracle) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const Sample s = random_sample(rng, 2 + rep % 99, rep % 2 == 0);
    const auto preds = PredictionSet::from_vectors(s.scores, s.labels);
    const AUCResult r = auc_delong(preds);
    EXPECT_EQ(r.auc, pair_count_auc(s.scores, s.labels)) << rep;
    if (r.n_pos > 1 && r.n_neg > 1) {
      EXPECT_NEAR(r.se, delong_se_oracle(s.scores, s.labels), 1e-12) << rep;
    }
    EXPECT_GE(r.ci_lo, 0.0);
    EXPECT_LE(r.ci_hi, 1.0);
    EXPECT_LE(r.ci_lo, r.auc);
    EXPECT_GE(r.ci_hi, r.auc);
  }
}

TEST(Auc, LogitIntervalStaysInside) {
  std::mt19937_64 rng(3);
  const Sample s = random_sample(rng, 80, false);
  const auto preds = PredictionSet::from_vectors(s.scores, s.labels);
  const AUCResult w = auc_delong(preds, 0.05, AucCiTransform::Wald);
  const AUCResult l = auc_delong(preds, 0.05, AucCiTransform::LogitWald);
  EXPECT_EQ(w.auc, l.auc);
  EXPECT_GT(l.ci_lo, 0.0);
  EXPECT_LT(l.ci_hi, 1.0);
}

TEST(Roc, Endpoints) {
  auto p = PredictionSet::from_vectors(std::vector<double>{0.9, 0.5, 0.5, 0.1},
                                       std::vector<bool>{true, false, true, false});
  const auto roc = roc_curve(p);
  ASSERT_GE(roc.size(), 2U);
  EXPECT_EQ(roc.front().fpr, 0.0);
  EXPECT_EQ(roc.front().tpr, 0.0);
  EXPECT_EQ(roc.back().fpr, 1.0);
  EXPECT_EQ(roc.back().tpr, 1.0);
  for (std::size_t i = 1; i < roc.size(); ++i) {
    EXPECT_GE(roc[i].fpr, roc[i - 1].fpr);
    EXPECT_GE(roc[i].tpr, roc[i - 1].tpr);
  }
}

TEST(Calibration, RemainderGoesToLowestBins) {
  std::vector<double> s(25);
  std::vector<bool> y(25);
  for (int i = 0; i < 25; ++i) {
    s[i] = i / 25.0;
    y[i] = i % 2;
  }
  const auto t = calibration_table(PredictionSet::from_vectors(s, y), 10);
  std::vector<std::size_t> sizes;
  for (const auto& b : t.bins) sizes.push_back(b.n);
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 3, 3, 3, 3, 2, 2, 2, 2, 2}));
  EXPECT_THROW(calibration_table(PredictionSet::from_vectors(s, y), 26), Error);
}

TEST(Calibration, ConstantScoreSingleBin) {
  std::vector<double> s(100, 0.3);
  std::vector<bool> y(100);
  for (int i = 0; i < 30; ++i) y[i] = true;
  const auto t = calibration_table(PredictionSet::from_vectors(s, y), 1);
  ASSERT_EQ(t.bins.size(), 1U);
  EXPECT_NEAR(t.bins[0].mean_predicted, 0.3, 1e-12);
  EXPECT_DOUBLE_EQ(t.bins[0].observed_rate, 0.3);
  EXPECT_EQ(t.bins[0].n, 100U);
}

TEST(Calibration, PerfectlyCalibratedDeciles) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(100000);
  std::vector<bool> y(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = u(rng);
    y[i] = u(rng) < s[i];
  }
  const auto t = calibration_table(PredictionSet::from_vectors(s, y), 10);
  for (const auto& b : t.bins) EXPECT_LT(std::fabs(b.observed_rate - b.mean_predicted), 0.02);
}

TEST(Recalibration, ClosedFormFactor) {
  std::vector<double> s(200, 0.2);
  std::vector<bool> y(200);
  for (int i = 0; i < 200; i += 10) y[i] = true;
  const auto r = recalibrate_constant(PredictionSet::from_vectors(s, y), 1.0, 5);
  EXPECT_NEAR(r.factor, 0.5, 1e-15);
  for (const auto& x : r.rescaled.items()) EXPECT_NEAR(x.score, 0.1, 1e-15);
  EXPECT_EQ(r.n_clipped, 0U);
}

TEST(Recalibration, SubsampleMeanEqualsIncidenceAndAucUnchanged) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  std::vector<double> s(5000);
  std::vector<bool> y(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = u(rng);
    y[i] = std::uniform_real_distribution<double>(0, 1)(rng) < s[i] * 0.6;
  }
  const auto preds = PredictionSet::from_vectors(s, y);
  for (double fraction : {0.05, 0.2, 1.0}) {
    const auto r = recalibrate_constant(preds, fraction, 99);
    EXPECT_EQ(r.subsample.size(), static_cast<std::size_t>(std::ceil(fraction * s.size())));
    ASSERT_EQ(r.n_clipped, 0U);
    double mean = 0.0, inc = 0.0;
    for (std::size_t i : r.subsample) {
      mean += r.rescaled.items()[i].score;
      inc += y[i] ? 1.0 : 0.0;
    }
    EXPECT_NEAR(mean / r.subsample.size(), inc / r.subsample.size(), 1e-12);
    EXPECT_NEAR(auc_delong(r.rescaled).auc, auc_delong(preds).auc, 1e-12);
  }
  // Calibrated input keeps the factor near one.
  std::vector<bool> yc(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) yc[i] = std::uniform_real_distribution<double>(0, 1)(rng) < s[i];
  EXPECT_NEAR(recalibrate_constant(PredictionSet::from_vectors(s, yc), 1.0, 1).factor, 1.0, 0.06);
}

TEST(Recalibration, DeterministicInSeed) {
  std::vector<double> s(300);
  std::vector<bool> y(300);
  for (int i = 0; i < 300; ++i) {
    s[i] = (i % 17) / 20.0;
    y[i] = i % 3 == 0;
  }
  const auto p = PredictionSet::from_vectors(s, y);
  EXPECT_EQ(recalibrate_constant(p, 0.1, 4).subsample, recalibrate_constant(p, 0.1, 4).subsample);
  EXPECT_NE(recalibrate_constant(p, 0.1, 4).subsample, recalibrate_constant(p, 0.1, 5).subsample);
}

TEST(ClopperPearson, MatchesReferenceAndClosedForms) {
  const auto& r = reference::clopper_pearson;
  for (std::size_t i = 0; i < r.size(); i += 4) {
    const auto ci = clopper_pearson(static_cast<std::int64_t>(r[i]), static_cast<std::int64_t>(r[i + 1]));
    EXPECT_NEAR(ci.first, r[i + 2], 1e-10);
    EXPECT_NEAR(ci.second, r[i + 3], 1e-10);
  }
  const auto zero = clopper_pearson(0, 10);
  EXPECT_EQ(zero.first, 0.0);
  EXPECT_NEAR(zero.second, 1.0 - std::pow(0.025, 0.1), 1e-12);
  EXPECT_EQ(clopper_pearson(10, 10).second, 1.0);
  const auto half = clopper_pearson(5, 10);
  EXPECT_NEAR(half.first, 1.0 - half.second, 1e-12);
}

TEST(Quantile, Methods) {
  const std::vector<double> v = {4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(quantile(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.25, QuantileMethod::Lower), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.25, QuantileMethod::Higher), 2.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5, QuantileMethod::Nearest), 3.0);  // index 1.5 rounds to 2
  EXPECT_THROW(quantile(std::vector<double>{}, 0.5), Error);
}

TEST(PredictiveValues, PerfectSeparation) {
  std::vector<double> s;
  std::vector<bool> y;
  for (int i = 0; i < 100; ++i) {
    s.push_back(i < 50 ? 0.1 + i * 0.001 : 0.8 + i * 0.001);
    y.push_back(i >= 50);
  }
  const auto rows = ppv_npv_curve(PredictionSet::from_vectors(s, y));
  ASSERT_EQ(rows.size(), 99U);
  const auto& mid = rows[49];  // 50th percentile sits between the classes
  EXPECT_EQ(mid.percentile, 50);
  EXPECT_DOUBLE_EQ(*mid.ppv, 1.0);
  EXPECT_DOUBLE_EQ(*mid.npv, 1.0);
}

TEST(PredictiveValues, IndependentLabelsAndThreadInvariance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(100000);
  std::vector<bool> y(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = u(rng);
    y[i] = u(rng) < 0.2;
  }
  const auto preds = PredictionSet::from_vectors(s, y);
  const auto a = ppv_npv_curve(preds, 0.05, QuantileMethod::Linear, 1);
  const auto b = ppv_npv_curve(preds, 0.05, QuantileMethod::Linear, 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].threshold, b[i].threshold);
    EXPECT_EQ(a[i].ppv, b[i].ppv);
    EXPECT_EQ(a[i].npv, b[i].npv);
    EXPECT_NEAR(*a[i].ppv, 0.2, 0.05);
    EXPECT_NEAR(*a[i].npv, 0.8, 0.05);
  }
}

TEST(PredictiveValues, WellCalibratedLowIncidenceShape) {
  std::mt19937_64 rng(8);
  std::gamma_distribution<double> ga(1.0, 1.0), gb(6.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(100000);
  std::vector<bool> y(s.size());
  double inc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double a = ga(rng), b = gb(rng);
    s[i] = a / (a + b);
    y[i] = u(rng) < s[i];
    inc += y[i];
  }
  ASSERT_LT(inc / s.size(), 0.2);
  const auto rows = ppv_npv_curve(PredictionSet::from_vectors(s, y));
  for (const auto& r : rows) EXPECT_GT(*r.npv, 0.80);
  for (int p = 1; p <= 10; ++p) EXPECT_GT(*rows[p - 1].npv, 0.95);
}

TEST(RiskGroups, Examples) {
  const std::vector<double> tune = {0.1, 0.2, 0.3, 0.4};
  auto eval = PredictionSet::from_vectors(std::vector<double>{0.05, 0.25, 0.9},
                                          std::vector<bool>{false, false, true});
  const auto a = assign_risk_groups(tune, eval);
  EXPECT_EQ(a.groups, (std::vector<RiskGroup>{RiskGroup::Low, RiskGroup::Medium, RiskGroup::High}));

  const std::vector<double> flat(10, 0.3);
  const auto t = risk_group_thresholds(flat);
  EXPECT_EQ(t.low_cut, 0.3);
  EXPECT_EQ(t.high_cut, 0.3);
  auto one = PredictionSet::from_vectors(std::vector<double>{0.3}, std::vector<bool>{false});
  EXPECT_EQ(assign_risk_groups(flat, one).groups[0], RiskGroup::High);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> uni(10000);
  for (auto& x : uni) x = u(rng);
  const auto q = risk_group_thresholds(uni);
  EXPECT_NEAR(q.low_cut, 0.25, 0.02);
  EXPECT_NEAR(q.high_cut, 0.75, 0.02);
}

TEST(LeadTime, Buckets) {
  std::map<EyeKey, EyeOutcome> outcomes;
  outcomes[{"A", EyeSide::OD}] = {0, {1000, true}};
  outcomes[{"B", EyeSide::OD}] = {0, {1000, false}};
  std::vector<Prediction> visits = {
      {0.42, false, {"A", EyeSide::OD, 630}},   // 370 days before
      {0.77, false, {"A", EyeSide::OD, 1000}},  // event day
      {0.9, false, {"A", EyeSide::OD, 1100}},   // after the event
      {0.5, false, {"B", EyeSide::OD, 100}},    // no event
  };
  const auto b = lead_time_summary(PredictionSet(visits), outcomes);
  ASSERT_EQ(b.size(), 2U);
  EXPECT_EQ(b[0].years_before_event, 0);
  EXPECT_EQ(b[0].n, 1U);
  EXPECT_DOUBLE_EQ(b[0].median, 0.77);
  EXPECT_EQ(b[1].years_before_event, 1);
  EXPECT_EQ(b[1].n, 1U);
  EXPECT_DOUBLE_EQ(b[1].median, 0.42);
}

TEST(PredictionSet, RejectsOutOfRangeScores) {
  EXPECT_THROW(PredictionSet::from_vectors(std::vector<double>{1.2}, std::vector<bool>{true}), Error);
  EXPECT_THROW(PredictionSet::from_vectors(std::vector<double>{std::nan("")}, std::vector<bool>{true}),
               Error);
}
