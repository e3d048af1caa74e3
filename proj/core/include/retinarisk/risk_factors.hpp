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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "retinarisk/cohort.hpp"

namespace retinarisk {

enum class DiabeticControl { Poor, Fair, Moderate, Good, Excellent };

std::string_view to_string(DiabeticControl control) noexcept;
std::optional<DiabeticControl> diabetic_control_from_string(std::string_view text) noexcept;

/// Clinical risk factors of one patient (or one eye when `eye` is set).
struct RiskFactorRecord {
  std::string patient_id;
  std::optional<EyeSide> eye;
  std::optional<double> age;
  std::optional<std::string> sex;
  std::optional<double> hba1c;  // percent
  std::optional<double> years_with_diabetes;
  std::optional<DiabeticControl> diabetic_control;
  std::optional<bool> insulin_use;
  std::optional<bool> hypertension;
  std::map<std::string, double> extra_numeric;
  std::map<std::string, std::string> extra_categorical;
};

/// Outlier handling:
///   age < 1 or > 122 removed, 90..122 set to 90;
///   HbA1c < 1% or > 18% removed;
///   years with diabetes clipped into [1, 20].
/// Everything else passes through. Idempotent.
RiskFactorRecord clean_risk_factors(RiskFactorRecord record);

/// Metadata for one design-matrix column.
struct ColumnInfo {
  std::string name;    // "hba1c", "diabetic_control=fair", ...
  std::string source;  // originating field
  std::optional<std::string> level;  // dummy level, absent for numeric columns
  bool standardized = false;
  double mean = 0.0;  // z-scoring parameters when standardized
  double sd = 1.0;
};

/// Complete-case, dummy-encoded design matrix (no intercept column).
struct CovariateMatrix {
  Eigen::MatrixXd values;            // rows x columns
  std::vector<ColumnInfo> columns;
  std::vector<std::size_t> source_rows;  // input record index of each row

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
  std::vector<std::string> names() const;
};

/// Field kinds understood by the design builder.
enum class FieldKind { Numeric, Categorical, Boolean };

struct FieldLayout {
  std::string field;
  FieldKind kind = FieldKind::Numeric;
  std::vector<std::string> levels;  // categorical levels, reference first
  bool standardize = false;
  double mean = 0.0;
  double sd = 1.0;
};

/// Column layout fitted on one dataset and reusable on another, so that a
/// validation set is encoded with the development set's levels and scaling.
struct DesignLayout {
  std::vector<FieldLayout> fields;

  std::vector<ColumnInfo> columns() const;
};

struct StandardizationOverride {
  double mean = 0.0;
  double sd = 1.0;
};

/// Fits a layout on the complete cases of `records`.
///
/// Categorical reference levels come from a canonical order (diabetic_control:
/// poor first; booleans: false first; race_ethnicity: Asian/Pacific islander,
/// Black, Hispanic, Native American, White, Other); other categoricals use
/// sorted observed levels. Standardized fields are z-scored with the n-1 sd of
/// the complete cases unless an override is supplied.
/// Throws Degenerate for a categorical with a single observed level or when no
/// complete case exists.
DesignLayout fit_design_layout(const std::vector<RiskFactorRecord>& records,
                               const std::vector<std::string>& selected_fields,
                               const std::vector<std::string>& standardize = {},
                               const std::map<std::string, StandardizationOverride>& overrides = {});

/// Encodes the complete cases of `records` under `layout`. Rows whose
/// categorical level is not part of the layout are dropped.
CovariateMatrix apply_design_layout(const DesignLayout& layout,
                                    const std::vector<RiskFactorRecord>& records);

/// fit_design_layout followed by apply_design_layout on the same records.
CovariateMatrix build_design_matrix(const std::vector<RiskFactorRecord>& records,
                                    const std::vector<std::string>& selected_fields,
                                    const std::vector<std::string>& standardize = {});

/// Numeric value of `field` after encoding booleans as 0/1; nullopt if
/// missing or categorical.
std::optional<double> numeric_field(const RiskFactorRecord& record, const std::string& field);
/// String value of a categorical field; nullopt if missing.
std::optional<std::string> categorical_field(const RiskFactorRecord& record,
                                             const std::string& field);
FieldKind field_kind(const std::vector<RiskFactorRecord>& records, const std::string& field);

}  // namespace retinarisk
