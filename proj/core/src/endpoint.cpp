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

#include "retinarisk/endpoint.hpp"

#include <algorithm>
#include <tuple>

#include "retinarisk/error.hpp"
#include "retinarisk/parallel.hpp"

namespace retinarisk {

void HorizonSpec::validate() const {
  if (!(buffer_days > 0 && horizon_days > buffer_days)) {
    fail(ErrorKind::InvalidInput, "horizon spec requires horizon_days > buffer_days > 0");
  }
}

std::string_view to_string(OutcomeThreshold threshold) noexcept {
  switch (threshold) {
    case OutcomeThreshold::MildPlus: return "mild";
    case OutcomeThreshold::ModeratePlus: return "moderate";
    case OutcomeThreshold::VTDR: return "vtdr";
  }
  return "unknown";
}

std::optional<OutcomeThreshold> threshold_from_string(std::string_view text) noexcept {
  if (text == "mild") return OutcomeThreshold::MildPlus;
  if (text == "moderate") return OutcomeThreshold::ModeratePlus;
  if (text == "vtdr") return OutcomeThreshold::VTDR;
  return std::nullopt;
}

bool meets_threshold(DRGrade grade, bool dme, OutcomeThreshold threshold) noexcept {
  switch (threshold) {
    case OutcomeThreshold::MildPlus: return grade >= DRGrade::Mild;
    case OutcomeThreshold::ModeratePlus: return grade >= DRGrade::Moderate;
    case OutcomeThreshold::VTDR: return is_vtdr(grade, dme);
  }
  return false;
}

bool meets_threshold(const Visit& visit, OutcomeThreshold threshold) noexcept {
  return visit.gradable && visit.grade && meets_threshold(*visit.grade, visit.has_dme(), threshold);
}

std::string_view to_string(OutcomeLabel label) noexcept {
  switch (label) {
    case OutcomeLabel::Positive: return "positive";
    case OutcomeLabel::Negative: return "negative";
    case OutcomeLabel::Unknown: return "unknown";
  }
  return "unknown";
}

std::optional<OutcomeLabel> label_from_string(std::string_view text) noexcept {
  if (text == "positive") return OutcomeLabel::Positive;
  if (text == "negative") return OutcomeLabel::Negative;
  if (text == "unknown") return OutcomeLabel::Unknown;
  return std::nullopt;
}

namespace {

const Visit& baseline_visit(const EyeRecord& eye, OutcomeThreshold threshold) {
  const auto it = std::find_if(eye.visits.begin(), eye.visits.end(),
                               [](const Visit& v) { return v.gradable; });
  if (it == eye.visits.end()) {
    fail(ErrorKind::Precondition, "eye " + eye.patient_id + "/" +
                                      std::string(to_string(eye.side)) +
                                      " has no gradable visit");
  }
  if (meets_threshold(*it, threshold)) {
    fail(ErrorKind::Precondition, "eye " + eye.patient_id + "/" +
                                      std::string(to_string(eye.side)) +
                                      " already meets the outcome threshold at baseline");
  }
  return *it;
}

}  // namespace

OutcomeLabel derive_binary_outcome(const EyeRecord& eye, OutcomeThreshold threshold,
                                   const HorizonSpec& spec) {
  spec.validate();
  const int origin = baseline_visit(eye, threshold).day;
  const int late_edge = spec.horizon_days + spec.buffer_days;
  const int early_edge = spec.horizon_days - spec.buffer_days;

  bool negative_evidence = false;
  for (const Visit& v : eye.visits) {
    if (!v.gradable) continue;
    const int t = v.day - origin;
    if (meets_threshold(v, threshold)) {
      if (t <= late_edge) return OutcomeLabel::Positive;
    } else if (t >= early_edge) {
      negative_evidence = true;
    }
  }
  return negative_evidence ? OutcomeLabel::Negative : OutcomeLabel::Unknown;
}

SurvivalRecord derive_survival_record(const EyeRecord& eye, OutcomeThreshold threshold) {
  const int origin = baseline_visit(eye, threshold).day;
  int last = origin;
  for (const Visit& v : eye.visits) {
    if (!v.gradable) continue;
    if (meets_threshold(v, threshold)) return {v.day - origin, true};
    last = v.day;
  }
  return {last - origin, false};
}

std::optional<double> LabelTable::incidence() const {
  if (n_known() == 0) return std::nullopt;
  return static_cast<double>(n_positive) / static_cast<double>(n_known());
}

LabelTable label_cohort(const Cohort& cohort, OutcomeThreshold threshold,
                        const HorizonSpec& spec, unsigned threads) {
  spec.validate();
  std::vector<const EyeRecord*> order;
  order.reserve(cohort.eyes.size());
  for (const auto& eye : cohort.eyes) order.push_back(&eye);
  std::sort(order.begin(), order.end(), [](const EyeRecord* a, const EyeRecord* b) {
    return std::tie(a->patient_id, a->side) < std::tie(b->patient_id, b->side);
  });

  LabelTable table;
  table.rows.resize(order.size());
  parallel_for(order.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const EyeRecord& eye = *order[i];
      LabelRow& row = table.rows[i];
      row.patient_id = eye.patient_id;
      row.side = eye.side;
      try {
        row.baseline_day = baseline_visit(eye, threshold).day;
        row.outcome = derive_binary_outcome(eye, threshold, spec);
        row.survival = derive_survival_record(eye, threshold);
      } catch (const Error& e) {
        row.outcome.reset();
        row.survival.reset();
        row.diagnostic = e.what();
      }
    }
  });

  for (const auto& row : table.rows) {
    if (!row.outcome) {
      ++table.n_error;
      continue;
    }
    switch (*row.outcome) {
      case OutcomeLabel::Positive: ++table.n_positive; break;
      case OutcomeLabel::Negative: ++table.n_negative; break;
      case OutcomeLabel::Unknown: ++table.n_unknown; break;
    }
  }
  return table;
}

}  // namespace retinarisk
