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

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "retinarisk/metrics.hpp"
#include "retinarisk/risk_factors.hpp"

namespace retinarisk {

struct LogisticOptions {
  int max_iterations = 50;
  double deviance_tolerance = 1e-8;
  double divergence_norm = 30.0;
};

struct LogisticModel {
  double intercept = 0.0;
  std::vector<std::string> names;  // design column names
  Eigen::VectorXd coefficients;
  double intercept_se = 0.0;
  Eigen::VectorXd se;
  Eigen::MatrixXd covariance;  // (1 + p) x (1 + p), intercept first
  int iterations = 0;
  double deviance = 0.0;
  bool converged = false;
  std::vector<double> deviance_trace;  // after each accepted iteration

  double linear_predictor(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

/// Maximum-likelihood logistic regression (with intercept) by IRLS with
/// step halving. Throws Precondition for a single label class or too few
/// rows, Collinearity for a rank-deficient design, Separation when the
/// coefficients diverge and NonConvergence when the iteration limit is hit.
LogisticModel logistic_fit(const CovariateMatrix& design, const std::vector<bool>& labels,
                           const LogisticOptions& options = {});

/// Same objective with fractional responses in [0, 1] (quasi-binomial).
LogisticModel logistic_fit(const Eigen::MatrixXd& x, std::span<const double> responses,
                           std::vector<std::string> names = {},
                           const LogisticOptions& options = {});

/// Sigmoid of the linear predictor. Columns are matched by name.
std::vector<double> logistic_predict(const LogisticModel& model, const CovariateMatrix& design);

/// One scored, labelled eye with its risk factors.
struct LabeledSample {
  RiskFactorRecord factors;
  double score = 0.0;
  bool label = false;
};

struct ExperimentRow {
  std::vector<std::string> factors;
  std::size_t n_dev = 0;
  std::size_t events_dev = 0;
  std::size_t n_val = 0;
  std::size_t events_val = 0;
  std::optional<AUCResult> auc_factors;
  std::optional<AUCResult> auc_score;
  std::optional<AUCResult> auc_combined;
  std::string error;  // set when the row could not be computed
};

/// Fits factors-only, score-only and factors+score models on the development
/// complete cases and reports the three AUCs on the validation complete
/// cases. Validation rows are encoded with the development layout.
ExperimentRow experiment_compare(const std::vector<LabeledSample>& dev,
                                 const std::vector<LabeledSample>& val,
                                 const std::vector<std::string>& factors, double alpha = 0.05);

/// Runs several experiments; per-row failures are reported in the row.
std::vector<ExperimentRow> run_experiments(const std::vector<LabeledSample>& dev,
                                           const std::vector<LabeledSample>& val,
                                           const std::vector<std::vector<std::string>>& experiments,
                                           double alpha = 0.05, unsigned threads = 1);

}  // namespace retinarisk
