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

#include <cmath>
#include <functional>
#include <random>

#include "reference_data.hpp"
#include "retinarisk/error.hpp"
#include "retinarisk/regression.hpp"

using namespace retinarisk;

namespace {

CovariateMatrix design(const Eigen::MatrixXd& x, const std::vector<std::string>& names) {
  CovariateMatrix m;
  m.values = x;
  for (const auto& n : names) m.columns.push_back({n, n, std::nullopt, false, 0.0, 1.0});
  for (Eigen::Index i = 0; i < x.rows(); ++i) m.source_rows.push_back(static_cast<std::size_t>(i));
  return m;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidInput;
}

LabeledSample sample(double hba1c, double years, double score, bool label) {
  LabeledSample s;
  s.factors.hba1c = hba1c;
  s.factors.years_with_diabetes = years;
  s.score = score;
  s.label = label;
  return s;
}

}  // namespace

TEST(Logistic, MatchesReferenceFit) {
  const auto n = static_cast<Eigen::Index>(reference::logit_y.size());
  Eigen::MatrixXd x(n, 2);
  std::vector<bool> y;
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = reference::logit_x1[i];
    x(i, 1) = reference::logit_x2[i];
    y.push_back(reference::logit_y[i] != 0);
  }
  const LogisticModel m = logistic_fit(design(x, {"x1", "x2"}), y);
  ASSERT_TRUE(m.converged);
  EXPECT_NEAR(m.intercept, reference::logit_params[0], 1e-6);
  EXPECT_NEAR(m.coefficients(0), reference::logit_params[1], 1e-6);
  EXPECT_NEAR(m.coefficients(1), reference::logit_params[2], 1e-6);
  EXPECT_NEAR(m.intercept_se, reference::logit_se[0], 1e-6);
  EXPECT_NEAR(m.se(0), reference::logit_se[1], 1e-6);
  EXPECT_NEAR(m.se(1), reference::logit_se[2], 1e-6);
  EXPECT_NEAR(m.deviance, reference::logit_deviance, 1e-6);
  for (std::size_t k = 1; k < m.deviance_trace.size(); ++k) {
    EXPECT_LE(m.deviance_trace[k], m.deviance_trace[k - 1] + 1e-9);
  }
}

TEST(Logistic, ScoreEquationsVanish) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nz;
  const Eigen::Index n = 2000;
  Eigen::MatrixXd x(n, 3);
  std::vector<bool> y;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = nz(rng);
    std::bernoulli_distribution b(sigmoid(-0.5 + 0.8 * x(i, 0) - 0.3 * x(i, 2)));
    y.push_back(b(rng));
  }
  const CovariateMatrix d = design(x, {"a", "b", "c"});
  const LogisticModel m = logistic_fit(d, y);
  const std::vector<double> p = logistic_predict(m, d);
  Eigen::Vector4d u = Eigen::Vector4d::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = (y[static_cast<std::size_t>(i)] ? 1.0 : 0.0) - p[static_cast<std::size_t>(i)];
    u(0) += r;
    for (int j = 0; j < 3; ++j) u(j + 1) += r * x(i, j);
  }
  EXPECT_LT(u.cwiseAbs().maxCoeff() / static_cast<double>(n), 1e-6);
  EXPECT_LT(std::fabs(m.coefficients(1)), 3 * m.se(1));
}

TEST(Logistic, BinaryCovariateReproducesGroupLogOdds) {
  Eigen::MatrixXd x(10, 1);
  for (int i = 0; i < 10; ++i) x(i, 0) = i % 2;
  const std::vector<double> y = {1, 0, 0, 1, 0, 0, 0, 1, 0, 0};
  const LogisticModel m = logistic_fit(x, y, {"alt"});
  const double even = 1.0 / 5.0, odd = 2.0 / 5.0;
  EXPECT_NEAR(m.intercept, std::log(even / (1 - even)), 1e-8);
  EXPECT_NEAR(m.coefficients(0), std::log(odd / (1 - odd)) - std::log(even / (1 - even)), 1e-8);
}

TEST(Logistic, FractionalResponses) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  Eigen::MatrixXd x(500, 1);
  std::vector<double> r;
  for (int i = 0; i < 500; ++i) {
    x(i, 0) = u(rng);
    r.push_back(sigmoid(0.3 + 1.2 * x(i, 0)));
  }
  const LogisticModel m = logistic_fit(x, r);
  EXPECT_NEAR(m.intercept, 0.3, 1e-6);
  EXPECT_NEAR(m.coefficients(0), 1.2, 1e-6);
}

TEST(Logistic, RecoversPlantedCoefficients) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nz;
  const Eigen::Index n = 10000;
  Eigen::MatrixXd x(n, 2);
  std::vector<bool> y;
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = nz(rng);
    x(i, 1) = nz(rng) > 0 ? 1.0 : 0.0;
    std::bernoulli_distribution b(sigmoid(-1.0 + 0.7 * x(i, 0) + 0.5 * x(i, 1)));
    y.push_back(b(rng));
  }
  const LogisticModel m = logistic_fit(design(x, {"a", "b"}), y);
  EXPECT_LT(std::fabs(m.intercept + 1.0), 3 * m.intercept_se);
  EXPECT_LT(std::fabs(m.coefficients(0) - 0.7), 3 * m.se(0));
  EXPECT_LT(std::fabs(m.coefficients(1) - 0.5), 3 * m.se(1));
}

TEST(Logistic, PredictIsMonotoneInPositiveCoefficient) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nz;
  Eigen::MatrixXd x(400, 1);
  std::vector<bool> y;
  for (int i = 0; i < 400; ++i) {
    x(i, 0) = nz(rng);
    y.push_back(std::bernoulli_distribution(sigmoid(x(i, 0)))(rng));
  }
  const LogisticModel m = logistic_fit(design(x, {"a"}), y);
  ASSERT_GT(m.coefficients(0), 0);
  Eigen::MatrixXd grid(21, 1);
  for (int i = 0; i < 21; ++i) grid(i, 0) = -3 + 0.3 * i;
  const auto p = logistic_predict(m, design(grid, {"a"}));
  for (std::size_t i = 1; i < p.size(); ++i) EXPECT_GT(p[i], p[i - 1]);
}

TEST(Logistic, ErrorClasses) {
  Eigen::MatrixXd x(6, 1);
  x << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(kind_of([&] { logistic_fit(design(x, {"a"}), {true, true, true, true, true, true}); }),
            ErrorKind::Precondition);
  EXPECT_EQ(kind_of([&] { logistic_fit(design(x, {"a"}), {false, false, false, true, true, true}); }),
            ErrorKind::Separation);
  Eigen::MatrixXd c(6, 2);
  c << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10, 6, 12;
  EXPECT_EQ(kind_of([&] { logistic_fit(design(c, {"a", "b"}), {false, true, false, true, true, false}); }),
            ErrorKind::Collinearity);
  Eigen::MatrixXd small(2, 2);
  small << 1, 2, 3, 5;
  EXPECT_EQ(kind_of([&] { logistic_fit(design(small, {"a", "b"}), {false, true}); }),
            ErrorKind::Precondition);
}

TEST(Experiment, CombinedBeatsEitherWhenBothCarrySignal) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nz;
  auto draw = [&](std::size_t n) {
    std::vector<LabeledSample> out;
    for (std::size_t i = 0; i < n; ++i) {
      const double h = 7.5 + nz(rng), s = nz(rng);
      const double z = -1.0 + 0.9 * (h - 7.5) + 0.9 * s;
      out.push_back(sample(h, 5 + 10 * std::fabs(nz(rng)), sigmoid(s),
                           std::bernoulli_distribution(sigmoid(z))(rng)));
    }
    return out;
  };
  const auto dev = draw(4000), val = draw(4000);
  const ExperimentRow r = experiment_compare(dev, val, {"hba1c"});
  ASSERT_TRUE(r.error.empty()) << r.error;
  ASSERT_TRUE(r.auc_combined && r.auc_factors && r.auc_score);
  EXPECT_GT(r.auc_combined->auc, r.auc_factors->auc);
  EXPECT_GT(r.auc_combined->auc, r.auc_score->auc);
  EXPECT_EQ(r.n_dev, 4000u);
  EXPECT_EQ(r.n_val, 4000u);
}

TEST(Experiment, NoiseFactorsStayNearChance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nz;
  auto draw = [&](std::size_t n) {
    std::vector<LabeledSample> out;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = nz(rng);
      out.push_back(sample(7 + nz(rng), 10 + nz(rng), sigmoid(s),
                           std::bernoulli_distribution(sigmoid(-0.5 + 1.5 * s))(rng)));
    }
    return out;
  };
  const auto dev = draw(3000), val = draw(3000);
  const ExperimentRow r = experiment_compare(dev, val, {"hba1c", "years_with_diabetes"});
  ASSERT_TRUE(r.auc_factors);
  const double z = (r.auc_factors->auc - 0.5) / r.auc_factors->se;
  EXPECT_LT(std::fabs(z), 4.0);
  EXPECT_GT(r.auc_score->auc, 0.7);
}

TEST(Experiment, MissingValuesDropToCompleteCasesAndErrorsStayInRow) {
  std::vector<LabeledSample> dev, val;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nz;
  for (int i = 0; i < 400; ++i) {
    LabeledSample s = sample(7 + nz(rng), 10, 0.5 + 0.1 * nz(rng) / 3, i % 3 == 0);
    if (i % 10 == 0) s.factors.hba1c.reset();
    (i < 200 ? dev : val).push_back(s);
  }
  const auto rows = run_experiments(dev, val, {{"hba1c"}, {"years_with_diabetes"}});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].n_dev, 180u);
  EXPECT_TRUE(rows[0].error.empty());
  EXPECT_FALSE(rows[1].error.empty());  // constant column
}

TEST(Experiment, ThreadCountDoesNotChangeResults) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nz;
  std::vector<LabeledSample> dev, val;
  for (int i = 0; i < 1200; ++i) {
    const double h = 7 + nz(rng);
    auto s = sample(h, 5 + std::fabs(nz(rng)) * 5, sigmoid(nz(rng)),
                    std::bernoulli_distribution(sigmoid(h - 7))(rng));
    (i % 2 ? dev : val).push_back(s);
  }
  const std::vector<std::vector<std::string>> ex = {
      {"hba1c"}, {"years_with_diabetes"}, {"hba1c", "years_with_diabetes"}};
  const auto a = run_experiments(dev, val, ex, 0.05, 1);
  const auto b = run_experiments(dev, val, ex, 0.05, 4);
  for (std::size_t k = 0; k < ex.size(); ++k) {
    EXPECT_EQ(a[k].auc_combined->auc, b[k].auc_combined->auc);
    EXPECT_EQ(a[k].auc_factors->se, b[k].auc_factors->se);
  }
}
