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

#include "retinarisk/risk_factors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "retinarisk/error.hpp"

namespace retinarisk {

std::string_view to_string(DiabeticControl control) noexcept {
  switch (control) {
    case DiabeticControl::Poor: return "poor";
    case DiabeticControl::Fair: return "fair";
    case DiabeticControl::Moderate: return "moderate";
    case DiabeticControl::Good: return "good";
    case DiabeticControl::Excellent: return "excellent";
  }
  return "unknown";
}

std::optional<DiabeticControl> diabetic_control_from_string(std::string_view text) noexcept {
  if (text == "poor") return DiabeticControl::Poor;
  if (text == "fair") return DiabeticControl::Fair;
  if (text == "moderate") return DiabeticControl::Moderate;
  if (text == "good") return DiabeticControl::Good;
  if (text == "excellent") return DiabeticControl::Excellent;
  return std::nullopt;
}

RiskFactorRecord clean_risk_factors(RiskFactorRecord record) {
  if (record.age) {
    const double a = *record.age;
    if (!std::isfinite(a) || a < 1.0 || a > 122.0) {
      record.age.reset();
    } else if (a > 90.0) {
      record.age = 90.0;
    }
  }
  if (record.hba1c) {
    const double h = *record.hba1c;
    if (!std::isfinite(h) || h < 1.0 || h > 18.0) record.hba1c.reset();
  }
  if (record.years_with_diabetes) {
    const double y = *record.years_with_diabetes;
    if (!std::isfinite(y)) {
      record.years_with_diabetes.reset();
    } else {
      record.years_with_diabetes = std::clamp(y, 1.0, 20.0);
    }
  }
  return record;
}

std::vector<std::string> CovariateMatrix::names() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

std::optional<double> numeric_field(const RiskFactorRecord& r, const std::string& field) {
  if (field == "age") return r.age;
  if (field == "hba1c") return r.hba1c;
  if (field == "years_with_diabetes") return r.years_with_diabetes;
  if (field == "insulin_use") {
    return r.insulin_use ? std::optional<double>(*r.insulin_use ? 1.0 : 0.0) : std::nullopt;
  }
  if (field == "hypertension") {
    return r.hypertension ? std::optional<double>(*r.hypertension ? 1.0 : 0.0) : std::nullopt;
  }
  const auto it = r.extra_numeric.find(field);
  if (it != r.extra_numeric.end() && std::isfinite(it->second)) return it->second;
  return std::nullopt;
}

std::optional<std::string> categorical_field(const RiskFactorRecord& r, const std::string& field) {
  if (field == "sex") return r.sex;
  if (field == "diabetic_control") {
    return r.diabetic_control ? std::optional<std::string>(std::string(to_string(*r.diabetic_control)))
                              : std::nullopt;
  }
  const auto it = r.extra_categorical.find(field);
  if (it != r.extra_categorical.end() && !it->second.empty()) return it->second;
  return std::nullopt;
}

FieldKind field_kind(const std::vector<RiskFactorRecord>& records, const std::string& field) {
  if (field == "age" || field == "hba1c" || field == "years_with_diabetes") return FieldKind::Numeric;
  if (field == "insulin_use" || field == "hypertension") return FieldKind::Boolean;
  if (field == "sex" || field == "diabetic_control") return FieldKind::Categorical;
  for (const auto& r : records) {
    if (r.extra_numeric.count(field)) return FieldKind::Numeric;
    if (r.extra_categorical.count(field)) return FieldKind::Categorical;
  }
  fail(ErrorKind::InvalidInput, "unknown risk factor field '" + field + "'");
}

namespace {

const std::vector<std::string>* canonical_levels(const std::string& field) {
  static const std::vector<std::string> control = {"poor", "fair", "moderate", "good", "excellent"};
  static const std::vector<std::string> race = {"Asian/Pacific islander", "Black", "Hispanic",
                                                "Native American", "White", "Other"};
  if (field == "diabetic_control") return &control;
  if (field == "race_ethnicity") return &race;
  return nullptr;
}

bool present(const RiskFactorRecord& r, const FieldLayout& f) {
  if (f.kind == FieldKind::Categorical) return categorical_field(r, f.field).has_value();
  return numeric_field(r, f.field).has_value();
}

}  // namespace

std::vector<ColumnInfo> DesignLayout::columns() const {
  std::vector<ColumnInfo> out;
  for (const auto& f : fields) {
    if (f.kind == FieldKind::Categorical) {
      for (std::size_t l = 1; l < f.levels.size(); ++l) {
        ColumnInfo c;
        c.name = f.field + "=" + f.levels[l];
        c.source = f.field;
        c.level = f.levels[l];
        out.push_back(std::move(c));
      }
    } else {
      ColumnInfo c;
      c.name = f.field;
      c.source = f.field;
      c.standardized = f.standardize;
      c.mean = f.mean;
      c.sd = f.sd;
      out.push_back(std::move(c));
    }
  }
  return out;
}

DesignLayout fit_design_layout(const std::vector<RiskFactorRecord>& records,
                               const std::vector<std::string>& selected_fields,
                               const std::vector<std::string>& standardize,
                               const std::map<std::string, StandardizationOverride>& overrides) {
  if (selected_fields.empty()) fail(ErrorKind::InvalidInput, "no risk factor fields selected");
  DesignLayout layout;
  std::set<std::string> seen;
  for (const auto& field : selected_fields) {
    if (!seen.insert(field).second) fail(ErrorKind::InvalidInput, "field '" + field + "' selected twice");
    FieldLayout f;
    f.field = field;
    f.kind = field_kind(records, field);
    f.standardize = std::find(standardize.begin(), standardize.end(), field) != standardize.end();
    if (f.standardize && f.kind != FieldKind::Numeric) {
      fail(ErrorKind::InvalidInput, "only numeric fields can be standardized: '" + field + "'");
    }
    layout.fields.push_back(std::move(f));
  }
  for (const auto& s : standardize) {
    if (!seen.count(s)) fail(ErrorKind::InvalidInput, "standardized field '" + s + "' is not selected");
  }

  std::vector<const RiskFactorRecord*> complete;
  for (const auto& r : records) {
    if (std::all_of(layout.fields.begin(), layout.fields.end(),
                    [&](const FieldLayout& f) { return present(r, f); })) {
      complete.push_back(&r);
    }
  }
  if (complete.empty()) fail(ErrorKind::Degenerate, "no complete cases for the selected fields");

  for (auto& f : layout.fields) {
    if (f.kind == FieldKind::Categorical) {
      std::set<std::string> observed;
      for (const auto* r : complete) observed.insert(*categorical_field(*r, f.field));
      if (const auto* canon = canonical_levels(f.field)) {
        for (const auto& level : *canon) {
          if (observed.erase(level)) f.levels.push_back(level);
        }
      }
      // Levels outside the canonical list follow in sorted order.
      f.levels.insert(f.levels.end(), observed.begin(), observed.end());
      if (f.levels.size() < 2) {
        fail(ErrorKind::Degenerate, "categorical field '" + f.field + "' has a single observed level");
      }
    } else if (f.kind == FieldKind::Boolean) {
      bool has0 = false, has1 = false;
      for (const auto* r : complete) (*numeric_field(*r, f.field) != 0.0 ? has1 : has0) = true;
      if (!(has0 && has1)) {
        fail(ErrorKind::Degenerate, "boolean field '" + f.field + "' has a single observed level");
      }
      f.levels = {"false", "true"};
    } else if (f.standardize) {
      if (const auto it = overrides.find(f.field); it != overrides.end()) {
        f.mean = it->second.mean;
        f.sd = it->second.sd;
      } else {
        double sum = 0.0;
        for (const auto* r : complete) sum += *numeric_field(*r, f.field);
        const double n = static_cast<double>(complete.size());
        f.mean = sum / n;
        double ss = 0.0;
        for (const auto* r : complete) {
          const double d = *numeric_field(*r, f.field) - f.mean;
          ss += d * d;
        }
        f.sd = complete.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      }
      if (!(f.sd > 0.0)) {
        fail(ErrorKind::Degenerate, "cannot standardize constant field '" + f.field + "'");
      }
    }
  }
  return layout;
}

CovariateMatrix apply_design_layout(const DesignLayout& layout,
                                    const std::vector<RiskFactorRecord>& records) {
  CovariateMatrix m;
  m.columns = layout.columns();
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    std::vector<double> row;
    row.reserve(m.columns.size());
    bool keep = true;
    for (const auto& f : layout.fields) {
      if (!present(r, f)) {
        keep = false;
        break;
      }
      if (f.kind == FieldKind::Categorical) {
        const std::string level = *categorical_field(r, f.field);
        const auto it = std::find(f.levels.begin(), f.levels.end(), level);
        if (it == f.levels.end()) {
          keep = false;
          break;
        }
        for (std::size_t l = 1; l < f.levels.size(); ++l) {
          row.push_back(f.levels[l] == level ? 1.0 : 0.0);
        }
      } else {
        double v = *numeric_field(r, f.field);
        if (f.standardize) v = (v - f.mean) / f.sd;
        row.push_back(v);
      }
    }
    if (!keep) continue;
    rows.push_back(std::move(row));
    m.source_rows.push_back(i);
  }
  if (rows.empty()) fail(ErrorKind::Degenerate, "no complete cases for the selected fields");
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

CovariateMatrix build_design_matrix(const std::vector<RiskFactorRecord>& records,
                                    const std::vector<std::string>& selected_fields,
                                    const std::vector<std::string>& standardize) {
  return apply_design_layout(fit_design_layout(records, selected_fields, standardize), records);
}

}  // namespace retinarisk
