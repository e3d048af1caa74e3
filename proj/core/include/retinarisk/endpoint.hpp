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
#include <string>
#include <string_view>
#include <vector>

#include "retinarisk/cohort.hpp"

namespace retinarisk {

/// Outcome horizon and the tolerance window around it, in days.
struct HorizonSpec {
  int horizon_days = 730;
  int buffer_days = 28;

  /// Throws InvalidInput unless horizon_days > buffer_days > 0.
  void validate() const;
};

enum class OutcomeThreshold { MildPlus, ModeratePlus, VTDR };

std::string_view to_string(OutcomeThreshold threshold) noexcept;
std::optional<OutcomeThreshold> threshold_from_string(std::string_view text) noexcept;

bool meets_threshold(DRGrade grade, bool dme, OutcomeThreshold threshold) noexcept;
bool meets_threshold(const Visit& visit, OutcomeThreshold threshold) noexcept;

enum class OutcomeLabel { Positive, Negative, Unknown };

std::string_view to_string(OutcomeLabel label) noexcept;
std::optional<OutcomeLabel> label_from_string(std::string_view text) noexcept;

struct SurvivalRecord {
  int duration_days = 0;
  bool event = false;

  bool operator==(const SurvivalRecord&) const = default;
};

/// Binary development-of-DR endpoint.
///
/// Days are measured from the first gradable visit. Positive when any gradable
/// visit at t <= H + B meets the threshold. Otherwise Negative when a gradable
/// below-threshold visit exists at t >= H - B. Otherwise Unknown. Ungradable
/// visits are ignored.
///
/// Throws Error(Precondition) if the eye has no gradable visit or its first
/// gradable visit already meets the threshold.
OutcomeLabel derive_binary_outcome(const EyeRecord& eye, OutcomeThreshold threshold,
                                   const HorizonSpec& spec = {});

/// Right-censored time to the first threshold-meeting gradable visit, or to
/// the last gradable visit when none qualifies. Same preconditions as
/// derive_binary_outcome.
SurvivalRecord derive_survival_record(const EyeRecord& eye, OutcomeThreshold threshold);

struct LabelRow {
  std::string patient_id;
  EyeSide side = EyeSide::OD;
  int baseline_day = 0;  // day of the first gradable visit
  std::optional<OutcomeLabel> outcome;    // absent when `diagnostic` is set
  std::optional<SurvivalRecord> survival;
  std::string diagnostic;
};

struct LabelTable {
  std::vector<LabelRow> rows;  // sorted by (patient_id, side)
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  std::size_t n_unknown = 0;
  std::size_t n_error = 0;

  std::size_t n_known() const { return n_positive + n_negative; }
  /// Positives over known outcomes; nullopt when nothing is known.
  std::optional<double> incidence() const;
};

/// Labels every eye. Per-eye precondition failures become row diagnostics
/// instead of aborting. Work is split across `threads` workers; the output
/// does not depend on the thread count.
LabelTable label_cohort(const Cohort& cohort, OutcomeThreshold threshold,
                        const HorizonSpec& spec = {}, unsigned threads = 1);

}  // namespace retinarisk
