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
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "retinarisk/cohort.hpp"
#include "retinarisk/endpoint.hpp"
#include "retinarisk/metrics.hpp"
#include "retinarisk/risk_factors.hpp"

namespace retinarisk {

/// Log-hazard coefficients (per year) of the time to Mild+ DR.
struct SimCoefficients {
  double hba1c = 0.25;                // per % point above hba1c_center
  double years_with_diabetes = 0.04;  // per year above years_center
  double insulin_use = 0.5;
  double frailty = 0.5;               // per SD of the latent eye frailty
};

/// Synthetic cohort generator settings. Rates are per year, times in days.
struct SimConfig {
  std::size_t n_patients = 1000;
  int eyes_per_patient = 2;  // 1 or 2

  double visit_interval_mean_days = 365.0;
  double visit_interval_jitter_days = 90.0;  // uniform +/- jitter
  int max_followup_days = 5 * 365;
  double dropout_rate = 0.1;  // loss to follow-up

  double baseline_log_hazard = -2.3;
  SimCoefficients coefficients;
  double hba1c_center = 7.3;
  double years_center = 10.5;

  double hba1c_log_sd = 0.18;  // HbA1c ~ center * exp(N(0, sd))
  double insulin_prob = 0.3;
  double hba1c_missing_prob = 0.1;
  double control_missing_prob = 0.3;

  double rate_mild_to_moderate = 0.35;
  double rate_moderate_to_severe = 0.25;
  double rate_severe_to_proliferative = 0.2;

  // Per-visit score: sigmoid(score_intercept + score_slope * (baseline
  //   + frailty term + score_covariate_weight * covariate terms)
  //   + lead_slope * exp(-years_until_conversion) + N(0, score_noise_sd)).
  // With score_covariate_weight = 1 the score tracks the full log hazard.
  double score_intercept = 0.7;
  double score_slope = 1.0;
  double score_covariate_weight = 0.25;
  double score_noise_sd = 0.5;
  double lead_slope = 0.8;

  double gradable_prob = 0.95;
  std::uint64_t seed = 1;

  /// Throws InvalidInput on out-of-range settings.
  void validate() const;
};

SimConfig sim_config_from_json(const std::string& text);
std::string sim_config_to_json(const SimConfig& config);

/// Planted truth for one eye.
struct EyeTruth {
  std::string patient_id;
  EyeSide side = EyeSide::OD;
  double conversion_day = 0.0;  // continuous time of Mild+ onset, > 0
  double moderate_day = 0.0;
  double severe_day = 0.0;
  double log_hazard = 0.0;  // per year
  double frailty = 0.0;     // standard normal draw
  int censor_day = 0;       // end of follow-up
  double hba1c = 0.0;       // true value, even when reported missing
  double years_with_diabetes = 0.0;
  bool insulin_use = false;

  double hazard_per_day() const;
};

struct GroundTruth {
  SimConfig config;
  std::vector<EyeTruth> eyes;  // sorted by (patient_id, side)
};

/// Everything generated for one patient.
struct PatientSample {
  std::vector<EyeRecord> eyes;
  std::vector<Prediction> scores;
  RiskFactorRecord risk_factors;
  std::vector<EyeTruth> truth;
};

/// Generates patients in index order and hands each to `sink`. Patients are
/// produced in blocks on up to `threads` workers; each patient draws from its
/// own substream of (seed, patient index), so output is identical for any
/// thread count and memory use is bounded by the block size.
void simulate_stream(const SimConfig& config, const std::function<void(PatientSample&&)>& sink,
                     unsigned threads = 1);

struct SimulationOutput {
  Cohort cohort;
  std::vector<Prediction> scores;
  std::vector<RiskFactorRecord> risk_factors;
  GroundTruth truth;
};

SimulationOutput simulate(const SimConfig& config, unsigned threads = 1);

/// Writes visits.csv, scores.csv, risk_factors.csv and ground_truth.json.
void simulate_to_directory(const SimConfig& config, const std::string& out_dir,
                           unsigned threads = 1);

GroundTruth load_ground_truth(const std::string& path);

// ------------------------------------------------------------ verification

struct CheckItem {
  std::string name;
  bool passed = false;
  bool skipped = false;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckItem> items;
  bool all_passed() const;
};

/// Probability that an eye with the given gradable visit days (relative to
/// baseline) and daily hazard is labelled Positive / Negative under `spec`.
struct OutcomeProbabilities {
  double positive = 0.0;
  double negative = 0.0;
};
OutcomeProbabilities outcome_probabilities(const std::vector<int>& relative_days,
                                           double hazard_per_day, const HorizonSpec& spec);

/// Compares quantities recovered from the simulated files with the planted
/// truth: observation ordering, label consistency, expected positive count,
/// KM versus the true survival mixture, Cox and logistic coefficients, and the
/// direction of the score's AUC.
CheckReport analytic_checks(const GroundTruth& truth, const Cohort& cohort,
                            const std::vector<Prediction>& scores, const HorizonSpec& spec = {});

}  // namespace retinarisk
