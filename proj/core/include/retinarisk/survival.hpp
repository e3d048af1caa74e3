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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "retinarisk/endpoint.hpp"
#include "retinarisk/risk_factors.hpp"

namespace retinarisk {

/// Product-limit estimate at every distinct observed time.
struct KMCurve {
  std::vector<double> times;  // ascending, includes censoring-only times
  std::vector<double> survival;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
  std::vector<std::size_t> at_risk;
  std::vector<std::size_t> n_events;
  std::vector<std::size_t> n_censored;

  /// Right-continuous step function; 1 before the first time.
  double survival_at(double t) const;
};

/// Kaplan-Meier with exponential-Greenwood (log(-log S)) confidence bands.
/// Events are processed before censorings at tied times.
KMCurve kaplan_meier(std::span<const SurvivalRecord> records, double alpha = 0.05);
KMCurve kaplan_meier(std::span<const double> durations, std::span<const bool> events,
                     double alpha = 0.05);

struct LogRankResult {
  double chi2 = 0.0;
  int df = 1;
  double p = 1.0;
  std::vector<double> observed;  // per group
  std::vector<double> expected;
};

/// K-sample log-rank test with the hypergeometric variance.
LogRankResult log_rank(const std::vector<std::vector<SurvivalRecord>>& groups);

enum class CoxTies { Efron, Breslow };

struct CoxOptions {
  CoxTies ties = CoxTies::Efron;
  double alpha = 0.05;
  int max_iterations = 100;
  double gradient_tolerance = 1e-7;  // on max |score| / n
  double step_tolerance = 1e-9;
  double divergence_norm = 20.0;  // on max |beta_j| * range(x_j)
};

struct CoxModel {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd se;
  Eigen::VectorXd hazard_ratios;
  Eigen::VectorXd hr_ci_lo;
  Eigen::VectorXd hr_ci_hi;
  Eigen::VectorXd wald_p;
  Eigen::MatrixXd covariance;
  double log_partial_likelihood = 0.0;
  double null_log_partial_likelihood = 0.0;
  double lrt_statistic = 0.0;
  int lrt_df = 0;
  double lrt_p = 1.0;
  int iterations = 0;
  std::size_t n = 0;
  std::size_t n_events = 0;
};

struct CoxEvaluation {
  double log_likelihood = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;  // of the log partial likelihood (negative definite)
};

/// Log partial likelihood with gradient and Hessian at `beta`. Rows of `x`
/// are subjects.
CoxEvaluation cox_evaluate(std::span<const double> durations, std::span<const bool> events,
                           const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                           CoxTies ties = CoxTies::Efron);

/// Newton-Raphson maximisation of the partial likelihood with step halving.
/// Throws Degenerate for constant columns, Precondition without events,
/// Separation when the coefficients diverge and NonConvergence otherwise.
CoxModel cox_fit(std::span<const double> durations, std::span<const bool> events,
                 const Eigen::MatrixXd& x, std::vector<std::string> names = {},
                 const CoxOptions& options = {});

struct ScoreTest {
  double statistic = 0.0;
  int df = 0;
  double p = 1.0;
};

/// Same as above with names taken from the design's column metadata.
CoxModel cox_fit(std::span<const double> durations, std::span<const bool> events,
                 const CovariateMatrix& covariates, const CoxOptions& options = {});

/// Rao score test of beta = 0.
ScoreTest cox_score_test(std::span<const double> durations, std::span<const bool> events,
                         const Eigen::MatrixXd& x, CoxTies ties = CoxTies::Efron);

}  // namespace retinarisk
