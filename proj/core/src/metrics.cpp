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

#include "retinarisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "retinarisk/error.hpp"
#include "retinarisk/parallel.hpp"
#include "retinarisk/random.hpp"
#include "retinarisk/special_functions.hpp"

namespace retinarisk {

PredictionSet::PredictionSet(std::vector<Prediction> items) : items_(std::move(items)) {
  for (const auto& p : items_) {
    if (!std::isfinite(p.score) || p.score < 0.0 || p.score > 1.0) {
      fail(ErrorKind::InvalidInput, "score out of [0,1] for " + p.key.patient_id);
    }
  }
}

PredictionSet PredictionSet::from_vectors(std::span<const double> scores,
                                          std::span<const bool> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorKind::InvalidInput, "scores and labels differ in length");
  }
  std::vector<Prediction> items(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    items[i].score = scores[i];
    items[i].label = labels[i];
    items[i].key.patient_id = std::to_string(i);
    items[i].key.visit_day = static_cast<int>(i);
  }
  return PredictionSet(std::move(items));
}

PredictionSet PredictionSet::from_vectors(std::span<const double> scores,
                                          const std::vector<bool>& labels) {
  std::unique_ptr<bool[]> buf(new bool[labels.size()]);
  std::copy(labels.begin(), labels.end(), buf.get());
  return from_vectors(scores, std::span<const bool>(buf.get(), labels.size()));
}

std::size_t PredictionSet::n_positive() const {
  return static_cast<std::size_t>(
      std::count_if(items_.begin(), items_.end(), [](const Prediction& p) { return p.label; }));
}

std::vector<double> PredictionSet::scores() const {
  std::vector<double> out(items_.size());
  std::transform(items_.begin(), items_.end(), out.begin(),
                 [](const Prediction& p) { return p.score; });
  return out;
}

std::vector<bool> PredictionSet::labels() const {
  std::vector<bool> out(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) out[i] = items_[i].label;
  return out;
}

namespace {

// Mid-ranks (1-based, ties share the average rank) of `values`.
std::vector<double> mid_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double sample_variance(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

std::vector<std::size_t> sorted_order(const PredictionSet& preds) {
  const auto& items = preds.items();
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (items[a].score != items[b].score) return items[a].score < items[b].score;
    return items[a].key < items[b].key;
  });
  return order;
}

}  // namespace

AUCResult auc_delong(const PredictionSet& preds, double alpha, AucCiTransform transform) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidInput, "alpha must be in (0, 1)");
  std::vector<double> all, pos, neg;
  all.reserve(preds.size());
  for (const auto& p : preds.items()) {
    all.push_back(p.score);
    (p.label ? pos : neg).push_back(p.score);
  }
  const std::size_t n1 = pos.size();
  const std::size_t n0 = neg.size();
  if (n1 == 0 || n0 == 0) {
    fail(ErrorKind::Precondition, "AUC undefined: need at least one positive and one negative");
  }

  const auto r_all = mid_ranks(all);
  const auto r_pos = mid_ranks(pos);
  const auto r_neg = mid_ranks(neg);

  // Structural components: v10[i] is the fraction of negatives ranked below
  // positive i, v01[j] the fraction of positives ranked above negative j.
  std::vector<double> v10(n1), v01(n0);
  double rank_sum_pos = 0.0;
  std::size_t ip = 0, in = 0;
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (preds.items()[k].label) {
      rank_sum_pos += r_all[k];
      v10[ip] = (r_all[k] - r_pos[ip]) / static_cast<double>(n0);
      ++ip;
    } else {
      v01[in] = 1.0 - (r_all[k] - r_neg[in]) / static_cast<double>(n1);
      ++in;
    }
  }
  const double d1 = static_cast<double>(n1);
  const double d0 = static_cast<double>(n0);
  AUCResult out;
  out.n_pos = n1;
  out.n_neg = n0;
  out.auc = (rank_sum_pos - d1 * (d1 + 1.0) / 2.0) / (d1 * d0);
  const double var = sample_variance(v10, out.auc) / d1 + sample_variance(v01, out.auc) / d0;
  out.se = std::sqrt(std::max(0.0, var));

  const double z = special::normal_quantile(1.0 - alpha / 2.0);
  if (transform == AucCiTransform::LogitWald && out.auc > 0.0 && out.auc < 1.0) {
    const double logit = std::log(out.auc / (1.0 - out.auc));
    const double se_logit = out.se / (out.auc * (1.0 - out.auc));
    out.ci_lo = 1.0 / (1.0 + std::exp(-(logit - z * se_logit)));
    out.ci_hi = 1.0 / (1.0 + std::exp(-(logit + z * se_logit)));
  } else {
    out.ci_lo = out.auc - z * out.se;
    out.ci_hi = out.auc + z * out.se;
  }
  out.ci_lo = std::clamp(out.ci_lo, 0.0, 1.0);
  out.ci_hi = std::clamp(out.ci_hi, 0.0, 1.0);
  return out;
}

std::vector<RocPoint> roc_curve(const PredictionSet& preds) {
  const std::size_t n1 = preds.n_positive();
  const std::size_t n0 = preds.n_negative();
  if (n1 == 0 || n0 == 0) fail(ErrorKind::Precondition, "ROC undefined for a single class");
  auto order = sorted_order(preds);
  std::reverse(order.begin(), order.end());
  const auto& items = preds.items();
  std::vector<RocPoint> out;
  out.push_back({1.0, 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = items[order[i]].score;
    while (i < order.size() && items[order[i]].score == s) {
      (items[order[i]].label ? tp : fp) += 1;
      ++i;
    }
    out.push_back({s, static_cast<double>(fp) / static_cast<double>(n0),
                   static_cast<double>(tp) / static_cast<double>(n1)});
  }
  return out;
}

CalibrationTable calibration_table(const PredictionSet& preds, std::size_t k) {
  if (k == 0) fail(ErrorKind::InvalidInput, "calibration needs at least one bin");
  if (preds.size() < k) {
    fail(ErrorKind::Precondition, "calibration: fewer predictions than bins");
  }
  const auto order = sorted_order(preds);
  const auto& items = preds.items();
  const std::size_t base = preds.size() / k;
  const std::size_t extra = preds.size() % k;

  CalibrationTable table;
  table.bins.reserve(k);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t count = base + (b < extra ? 1 : 0);
    CalibrationBin bin;
    bin.n = count;
    double sum_score = 0.0;
    std::size_t events = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
      sum_score += items[order[i]].score;
      events += items[order[i]].label ? 1 : 0;
    }
    bin.score_lo = items[order[pos]].score;
    bin.score_hi = items[order[pos + count - 1]].score;
    bin.mean_predicted = sum_score / static_cast<double>(count);
    bin.observed_rate = static_cast<double>(events) / static_cast<double>(count);
    table.bins.push_back(bin);
    pos += count;
  }
  return table;
}

RecalibrationResult recalibrate_constant(const PredictionSet& preds, double calib_fraction,
                                         std::uint64_t seed) {
  if (!(calib_fraction > 0.0 && calib_fraction <= 1.0)) {
    fail(ErrorKind::InvalidInput, "calibration fraction must be in (0, 1]");
  }
  if (preds.empty()) fail(ErrorKind::Precondition, "recalibration needs predictions");
  const std::size_t n = preds.size();
  const auto m = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(calib_fraction * static_cast<double>(n) - 1e-9)));

  // Partial Fisher-Yates with our own uniform draw so the subsample is the
  // same on every standard library.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(substream_seed(seed, 0x7265636c));
  for (std::size_t i = 0; i < m; ++i) {
    const auto span = static_cast<double>(n - i);
    const std::size_t j = i + std::min(n - i - 1, static_cast<std::size_t>(uniform01(rng) * span));
    std::swap(idx[i], idx[j]);
  }
  RecalibrationResult out;
  out.subsample.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(out.subsample.begin(), out.subsample.end());

  const auto& items = preds.items();
  double sum_score = 0.0;
  std::size_t events = 0;
  for (std::size_t i : out.subsample) {
    sum_score += items[i].score;
    events += items[i].label ? 1 : 0;
  }
  if (events == 0) {
    fail(ErrorKind::Precondition, "recalibration subsample contains no positive outcome");
  }
  if (sum_score <= 0.0) {
    fail(ErrorKind::Precondition, "recalibration subsample has zero mean score");
  }
  out.subsample_incidence = static_cast<double>(events) / static_cast<double>(m);
  out.subsample_mean_score = sum_score / static_cast<double>(m);
  out.factor = out.subsample_incidence / out.subsample_mean_score;

  std::vector<Prediction> rescaled = items;
  for (auto& p : rescaled) {
    const double s = out.factor * p.score;
    if (s > 1.0) {
      ++out.n_clipped;
      p.score = 1.0;
    } else {
      p.score = s;
    }
  }
  out.rescaled = PredictionSet(std::move(rescaled));
  return out;
}

std::pair<double, double> clopper_pearson(std::int64_t successes, std::int64_t n, double alpha) {
  if (n < 1 || successes < 0 || successes > n) {
    fail(ErrorKind::InvalidInput, "clopper_pearson: need 0 <= successes <= n and n >= 1");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidInput, "alpha must be in (0, 1)");
  const auto k = static_cast<double>(successes);
  const auto m = static_cast<double>(n);
  const double lo = successes == 0 ? 0.0 : special::beta_quantile(alpha / 2.0, k, m - k + 1.0);
  const double hi = successes == n ? 1.0 : special::beta_quantile(1.0 - alpha / 2.0, k + 1.0, m - k);
  return {lo, hi};
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q, QuantileMethod method) {
  const double h = static_cast<double>(v.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  switch (method) {
    case QuantileMethod::Linear: return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    case QuantileMethod::Lower: return v[lo];
    case QuantileMethod::Higher: return h == static_cast<double>(lo) ? v[lo] : v[hi];
    case QuantileMethod::Nearest: return v[static_cast<std::size_t>(std::nearbyint(h))];
  }
  return v[lo];
}

}  // namespace

double quantile(std::span<const double> values, double q, QuantileMethod method) {
  if (values.empty()) fail(ErrorKind::InvalidInput, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) fail(ErrorKind::InvalidInput, "quantile level must be in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, q, method);
}

std::vector<PredictiveValueRow> ppv_npv_curve(const PredictionSet& preds, double alpha,
                                              QuantileMethod method, unsigned threads) {
  if (preds.n_positive() == 0 || preds.n_negative() == 0) {
    fail(ErrorKind::Precondition, "predictive values need both outcome classes");
  }
  const auto order = sorted_order(preds);
  const auto& items = preds.items();
  const std::size_t n = order.size();
  std::vector<double> sorted(n);
  std::vector<std::size_t> pos_prefix(n + 1, 0);  // positives among the first i sorted
  for (std::size_t i = 0; i < n; ++i) {
    sorted[i] = items[order[i]].score;
    pos_prefix[i + 1] = pos_prefix[i] + (items[order[i]].label ? 1 : 0);
  }
  const std::size_t total_pos = pos_prefix[n];

  std::vector<PredictiveValueRow> rows(99);
  parallel_for(rows.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      PredictiveValueRow& row = rows[r];
      row.percentile = static_cast<int>(r) + 1;
      row.threshold = quantile_sorted(sorted, row.percentile / 100.0, method);
      const auto cut = static_cast<std::size_t>(
          std::lower_bound(sorted.begin(), sorted.end(), row.threshold) - sorted.begin());
      row.n_below = cut;
      row.n_above = n - cut;
      const std::size_t pos_below = pos_prefix[cut];
      const std::size_t pos_above = total_pos - pos_below;
      if (row.n_above > 0) {
        row.ppv = static_cast<double>(pos_above) / static_cast<double>(row.n_above);
        row.ppv_ci = clopper_pearson(static_cast<std::int64_t>(pos_above),
                                     static_cast<std::int64_t>(row.n_above), alpha);
      }
      if (row.n_below > 0) {
        const std::size_t neg_below = row.n_below - pos_below;
        row.npv = static_cast<double>(neg_below) / static_cast<double>(row.n_below);
        row.npv_ci = clopper_pearson(static_cast<std::int64_t>(neg_below),
                                     static_cast<std::int64_t>(row.n_below), alpha);
      }
    }
  });
  return rows;
}

std::string_view to_string(RiskGroup group) noexcept {
  switch (group) {
    case RiskGroup::Low: return "low";
    case RiskGroup::Medium: return "medium";
    case RiskGroup::High: return "high";
  }
  return "unknown";
}

std::optional<RiskGroup> risk_group_from_string(std::string_view text) noexcept {
  if (text == "low") return RiskGroup::Low;
  if (text == "medium") return RiskGroup::Medium;
  if (text == "high") return RiskGroup::High;
  return std::nullopt;
}

RiskGroupThresholds risk_group_thresholds(std::span<const double> tune_scores,
                                          QuantileMethod method) {
  if (tune_scores.empty()) fail(ErrorKind::Precondition, "risk groups need tuning scores");
  std::vector<double> v(tune_scores.begin(), tune_scores.end());
  std::sort(v.begin(), v.end());
  return {quantile_sorted(v, 0.25, method), quantile_sorted(v, 0.75, method)};
}

RiskGroupAssignment assign_risk_groups(std::span<const double> tune_scores,
                                       const PredictionSet& eval_preds, QuantileMethod method) {
  RiskGroupAssignment out;
  out.thresholds = risk_group_thresholds(tune_scores, method);
  out.groups.reserve(eval_preds.size());
  for (const auto& p : eval_preds.items()) {
    if (p.score >= out.thresholds.high_cut) {
      out.groups.push_back(RiskGroup::High);
    } else if (p.score < out.thresholds.low_cut) {
      out.groups.push_back(RiskGroup::Low);
    } else {
      out.groups.push_back(RiskGroup::Medium);
    }
  }
  return out;
}

std::vector<LeadTimeBucket> lead_time_summary(const PredictionSet& scored_visits,
                                              const std::map<EyeKey, EyeOutcome>& outcomes) {
  std::map<int, std::vector<double>> buckets;
  for (const auto& p : scored_visits.items()) {
    const auto it = outcomes.find(EyeKey{p.key.patient_id, p.key.side});
    if (it == outcomes.end() || !it->second.survival.event) continue;
    const int event_day = it->second.baseline_day + it->second.survival.duration_days;
    const int delta = event_day - p.key.visit_day;
    if (delta < 0) continue;
    const int years = static_cast<int>(std::floor(static_cast<double>(delta) / 365.25));
    buckets[years].push_back(p.score);
  }
  std::vector<LeadTimeBucket> out;
  for (auto& [years, values] : buckets) {
    std::sort(values.begin(), values.end());
    out.push_back({years, values.size(), quantile_sorted(values, 0.25, QuantileMethod::Linear),
                   quantile_sorted(values, 0.5, QuantileMethod::Linear),
                   quantile_sorted(values, 0.75, QuantileMethod::Linear)});
  }
  return out;
}

}  // namespace retinarisk
