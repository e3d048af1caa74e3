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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "retinarisk/cohort.hpp"
#include "retinarisk/endpoint.hpp"

namespace retinarisk {

/// Where a prediction came from. Also the deterministic tie-break order.
struct PredictionKey {
  std::string patient_id;
  EyeSide side = EyeSide::OD;
  int visit_day = 0;

  auto operator<=>(const PredictionKey&) const = default;
};

struct Prediction {
  double score = 0.0;  // in [0, 1]
  bool label = false;
  PredictionKey key;
};

/// Aligned (score, label) pairs for one evaluation.
class PredictionSet {
 public:
  PredictionSet() = default;
  explicit PredictionSet(std::vector<Prediction> items);

  /// Convenience for tests and synthetic data; keys are the row indices.
  static PredictionSet from_vectors(std::span<const double> scores, std::span<const bool> labels);
  static PredictionSet from_vectors(std::span<const double> scores, const std::vector<bool>& labels);

  const std::vector<Prediction>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::size_t n_positive() const;
  std::size_t n_negative() const { return size() - n_positive(); }

  std::vector<double> scores() const;
  std::vector<bool> labels() const;

 private:
  std::vector<Prediction> items_;
};

enum class AucCiTransform { Wald, LogitWald };

struct AUCResult {
  double auc = 0.5;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 1.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

/// Mid-rank Mann-Whitney AUC with DeLong standard error and a CI clipped to
/// [0, 1]. Throws Precondition when only one class is present.
AUCResult auc_delong(const PredictionSet& preds, double alpha = 0.05,
                     AucCiTransform transform = AucCiTransform::Wald);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

/// Empirical ROC curve over distinct score thresholds (descending), starting
/// at (0, 0) and ending at (1, 1). Plot data only.
std::vector<RocPoint> roc_curve(const PredictionSet& preds);

struct CalibrationBin {
  double mean_predicted = 0.0;
  double observed_rate = 0.0;
  std::size_t n = 0;
  double score_lo = 0.0;
  double score_hi = 0.0;
};

struct CalibrationTable {
  std::vector<CalibrationBin> bins;
};

/// Equal-count bins over score order (ties broken by key), remainder rows go
/// to the lowest-score bins. Throws Precondition when size() < k.
CalibrationTable calibration_table(const PredictionSet& preds, std::size_t k = 10);

struct RecalibrationResult {
  double factor = 1.0;
  PredictionSet rescaled;
  std::vector<std::size_t> subsample;  // indices into the input, ascending
  double subsample_incidence = 0.0;
  double subsample_mean_score = 0.0;
  std::size_t n_clipped = 0;  // rescaled scores capped at 1
};

/// Constant-factor recalibration: factor = incidence / mean score on a
/// uniform random subsample of ceil(fraction * n) rows; every score becomes
/// min(1, factor * score).
RecalibrationResult recalibrate_constant(const PredictionSet& preds,
                                         double calib_fraction = 0.05,
                                         std::uint64_t seed = 0);

/// Exact binomial interval from Beta quantiles.
std::pair<double, double> clopper_pearson(std::int64_t successes, std::int64_t n,
                                          double alpha = 0.05);

enum class QuantileMethod {
  Linear,   // interpolate between order statistics (h = (n - 1) q)
  Lower,
  Higher,
  Nearest,  // round half to even on the fractional index
};

/// Sample quantile of `values` (need not be sorted). Throws when empty.
double quantile(std::span<const double> values, double q,
                QuantileMethod method = QuantileMethod::Linear);

struct PredictiveValueRow {
  int percentile = 0;
  double threshold = 0.0;
  std::size_t n_above = 0;  // score >= threshold
  std::size_t n_below = 0;  // score < threshold
  std::optional<double> ppv;
  std::optional<std::pair<double, double>> ppv_ci;
  std::optional<double> npv;
  std::optional<std::pair<double, double>> npv_ci;
};

/// PPV over scores >= the p-th percentile threshold and NPV over scores below
/// it, for p = 1..99. Rows with an empty side leave that side unset.
std::vector<PredictiveValueRow> ppv_npv_curve(const PredictionSet& preds, double alpha = 0.05,
                                              QuantileMethod method = QuantileMethod::Linear,
                                              unsigned threads = 1);

enum class RiskGroup { Low, Medium, High };

std::string_view to_string(RiskGroup group) noexcept;
std::optional<RiskGroup> risk_group_from_string(std::string_view text) noexcept;

struct RiskGroupThresholds {
  double low_cut = 0.0;
  double high_cut = 0.0;
};

struct RiskGroupAssignment {
  RiskGroupThresholds thresholds;
  std::vector<RiskGroup> groups;  // aligned with eval_preds
};

RiskGroupThresholds risk_group_thresholds(std::span<const double> tune_scores,
                                          QuantileMethod method = QuantileMethod::Linear);

/// Low below the tuning-set lower quartile, High at or above the upper
/// quartile, Medium otherwise.
RiskGroupAssignment assign_risk_groups(std::span<const double> tune_scores,
                                       const PredictionSet& eval_preds,
                                       QuantileMethod method = QuantileMethod::Linear);

struct EyeKey {
  std::string patient_id;
  EyeSide side = EyeSide::OD;

  auto operator<=>(const EyeKey&) const = default;
};

/// Survival outcome of one eye with its absolute baseline day.
struct EyeOutcome {
  int baseline_day = 0;
  SurvivalRecord survival;
};

struct LeadTimeBucket {
  int years_before_event = 0;
  std::size_t n = 0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

/// Scores of visits from eyes that had an event, grouped by
/// floor((event_day - visit_day) / 365.25). Visits after the event are
/// ignored; empty buckets are omitted.
std::vector<LeadTimeBucket> lead_time_summary(const PredictionSet& scored_visits,
                                              const std::map<EyeKey, EyeOutcome>& outcomes);

}  // namespace retinarisk
