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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "retinarisk/cohort.hpp"
#include "retinarisk/csv.hpp"
#include "retinarisk/endpoint.hpp"
#include "retinarisk/metrics.hpp"
#include "retinarisk/regression.hpp"
#include "retinarisk/risk_factors.hpp"

namespace retinarisk::io {

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string file;
  std::size_t line = 0;        // 0 when not tied to a line
  std::size_t other_line = 0;  // second line for duplicate-key errors
  std::string message;
};

std::size_t count_errors(const std::vector<Diagnostic>& diagnostics);

/// Throws InvalidInput summarising the first errors, if any.
void throw_on_errors(const std::vector<Diagnostic>& diagnostics);

// ---------------------------------------------------------------- visits

struct VisitsData {
  Cohort cohort;
  /// Calendar date of day 0 (days since 1970-01-01) when the file used
  /// visit_date; absent for visit_day files.
  std::optional<long long> epoch_days;
  std::size_t rows = 0;
  std::vector<Diagnostic> diagnostics;
};

/// Parses a visits table. Never throws on content problems; they become
/// diagnostics. Missing required columns are reported as errors too.
VisitsData parse_visits(const csv::Table& table, GradingProtocol protocol,
                        const std::string& source);
/// Reads and validates; throws InvalidInput when any hard error is found.
VisitsData load_visits(const std::string& path, GradingProtocol protocol);
void write_visits(std::ostream& out, const Cohort& cohort);

/// Days since 1970-01-01 of an ISO-8601 date (YYYY-MM-DD, time part ignored).
std::optional<long long> parse_iso_date(std::string_view text);

// ---------------------------------------------------------------- scores

struct ScoresData {
  std::vector<Prediction> rows;  // label unset (false)
  std::size_t rows_read = 0;
  std::vector<Diagnostic> diagnostics;
};

/// `epoch_days` converts visit_date columns onto the visits file's day axis.
ScoresData parse_scores(const csv::Table& table, const std::string& source,
                        std::optional<long long> epoch_days = std::nullopt);
ScoresData load_scores(const std::string& path, std::optional<long long> epoch_days = std::nullopt);
void write_scores(std::ostream& out, const std::vector<Prediction>& scores);

// ---------------------------------------------------------- risk factors

struct RiskFactorsData {
  std::vector<RiskFactorRecord> records;
  std::vector<Diagnostic> diagnostics;
};

/// Known columns map onto RiskFactorRecord fields; remaining columns become
/// extra numeric columns when every non-empty cell parses as a number and
/// extra categorical columns otherwise. `ignore` lists columns to skip.
RiskFactorsData parse_risk_factors(const csv::Table& table, const std::string& source,
                                   const std::vector<std::string>& ignore = {});
RiskFactorsData load_risk_factors(const std::string& path);
void write_risk_factors(std::ostream& out, const std::vector<RiskFactorRecord>& records);

// ---------------------------------------------------------------- labels

void write_labels(std::ostream& out, const LabelTable& table);
/// Reads labels CSV rows (outcome, duration_days, event).
std::vector<LabelRow> load_labels(const std::string& path);

// ----------------------------------------------------------------- joins

struct JoinReport {
  std::vector<std::string> unmatched_left;
  std::vector<std::string> unmatched_right;
};

std::string eye_key_string(const std::string& patient_id, EyeSide side);

/// Pairs the earliest scored visit of each eye with its known binary outcome.
/// Eyes with an Unknown outcome are skipped silently.
PredictionSet join_baseline_scores(const std::vector<Prediction>& scores,
                                   const std::vector<LabelRow>& labels, JoinReport* report = nullptr);

/// Earliest scored visit per eye.
std::map<EyeKey, Prediction> baseline_scores(const std::vector<Prediction>& scores);

/// Risk factors for each label row: exact (patient, eye) match first, then a
/// patient-level record without an eye.
std::vector<std::optional<RiskFactorRecord>> join_risk_factors(
    const std::vector<LabelRow>& labels, const std::vector<RiskFactorRecord>& factors,
    JoinReport* report = nullptr);

// --------------------------------------------------------- analysis table

/// One row per eye with a known outcome: patient_id, eye, outcome, score and
/// the risk factor columns. Input to logistic comparisons.
void write_analysis(std::ostream& out, const std::vector<LabelRow>& labels,
                    const std::map<EyeKey, Prediction>& scores,
                    const std::vector<std::optional<RiskFactorRecord>>& factors);
std::vector<LabeledSample> load_analysis(const std::string& path);

}  // namespace retinarisk::io
