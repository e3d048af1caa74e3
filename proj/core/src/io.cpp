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

#include "retinarisk/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <set>
#include <tuple>

#include "retinarisk/error.hpp"

namespace retinarisk::io {

std::size_t count_errors(const std::vector<Diagnostic>& diagnostics) {
  return static_cast<std::size_t>(std::count_if(
      diagnostics.begin(), diagnostics.end(),
      [](const Diagnostic& d) { return d.severity == Severity::Error; }));
}

void throw_on_errors(const std::vector<Diagnostic>& diagnostics) {
  std::string msg;
  std::size_t shown = 0;
  for (const auto& d : diagnostics) {
    if (d.severity != Severity::Error) continue;
    if (shown++ == 3) {
      msg += "; ...";
      break;
    }
    if (!msg.empty()) msg += "; ";
    msg += d.file + (d.line ? ":" + std::to_string(d.line) : "") + ": " + d.message;
  }
  if (shown > 0) fail(ErrorKind::InvalidInput, msg);
}

namespace {

Diagnostic error_at(const std::string& file, std::size_t line, std::string message) {
  return {Severity::Error, file, line, 0, std::move(message)};
}

Diagnostic warning_at(const std::string& file, std::size_t line, std::string message) {
  return {Severity::Warning, file, line, 0, std::move(message)};
}

std::optional<bool> parse_flag(std::string_view text) {
  if (text == "1" || text == "true" || text == "TRUE" || text == "True") return true;
  if (text == "0" || text == "false" || text == "FALSE" || text == "False") return false;
  return std::nullopt;
}

const std::string& cell(const csv::Table& t, std::size_t row, std::optional<std::size_t> col) {
  static const std::string empty;
  return col ? t.rows[row][*col] : empty;
}

}  // namespace

std::optional<long long> parse_iso_date(std::string_view text) {
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (text.size() > 10 && text[10] != 'T' && text[10] != ' ') return std::nullopt;
  const auto y = csv::parse_int(text.substr(0, 4));
  const auto m = csv::parse_int(text.substr(5, 2));
  const auto d = csv::parse_int(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(*y)},
                                        std::chrono::month{static_cast<unsigned>(*m)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

// ----------------------------------------------------------------- visits

VisitsData parse_visits(const csv::Table& t, GradingProtocol protocol, const std::string& source) {
  VisitsData out;
  out.cohort.protocol = protocol;
  out.rows = t.rows.size();
  auto& diags = out.diagnostics;

  const auto c_pid = t.column("patient_id");
  const auto c_eye = t.column("eye");
  const auto c_date = t.column("visit_date");
  const auto c_day = t.column("visit_day");
  const auto c_grad = t.column("gradable");
  const auto c_grade = t.column("dr_grade");
  const auto c_dme = t.column("dme");
  std::vector<std::optional<std::size_t>> c_lesion;
  for (const auto& name : LesionSet::field_names()) c_lesion.push_back(t.column(name));

  if (!c_pid || !c_eye || !c_grad || (!c_date && !c_day)) {
    diags.push_back(error_at(source, 1,
                             "malformed header: need patient_id, eye, gradable and one of "
                             "visit_date / visit_day"));
    return out;
  }

  // Resolve dates first so the epoch is the earliest visit in the file.
  std::vector<std::optional<long long>> raw_day(t.rows.size());
  std::vector<bool> from_date(t.rows.size(), false);
  std::optional<long long> epoch;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (c_day && !cell(t, r, c_day).empty()) {
      raw_day[r] = csv::parse_int(cell(t, r, c_day));
      if (!raw_day[r]) diags.push_back(error_at(source, t.lines[r], "visit_day is not an integer"));
    } else if (c_date) {
      raw_day[r] = parse_iso_date(cell(t, r, c_date));
      from_date[r] = true;
      if (!raw_day[r]) {
        diags.push_back(error_at(source, t.lines[r], "visit_date is not an ISO-8601 date"));
      } else {
        epoch = epoch ? std::min(*epoch, *raw_day[r]) : *raw_day[r];
      }
    } else {
      diags.push_back(error_at(source, t.lines[r], "missing visit day"));
    }
  }
  out.epoch_days = epoch;

  struct Row {
    std::size_t line;
    Visit visit;
  };
  std::map<std::pair<std::string, EyeSide>, std::vector<Row>> eyes;

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t line = t.lines[r];
    const std::size_t before = count_errors(diags);
    const std::string& pid = cell(t, r, c_pid);
    if (pid.empty()) diags.push_back(error_at(source, line, "empty patient_id"));
    const auto side = side_from_string(cell(t, r, c_eye));
    if (!side) diags.push_back(error_at(source, line, "eye must be OD or OS"));
    const auto gradable = parse_flag(cell(t, r, c_grad));
    if (!gradable) diags.push_back(error_at(source, line, "gradable must be 0 or 1"));

    Visit v;
    v.gradable = gradable.value_or(false);
    const std::string& grade_text = cell(t, r, c_grade);
    if (!grade_text.empty()) {
      const auto code = csv::parse_int(grade_text);
      const auto grade = code ? grade_from_int(static_cast<int>(*code)) : std::nullopt;
      if (!grade) {
        diags.push_back(error_at(source, line, "dr_grade must be an integer 0-4"));
      } else {
        v.grade = grade;
      }
    }
    const std::string& dme_text = cell(t, r, c_dme);
    if (!dme_text.empty()) {
      const auto dme = parse_flag(dme_text);
      if (!dme) {
        diags.push_back(error_at(source, line, "dme must be 0 or 1"));
      } else {
        v.dme = dme;
      }
    }
    bool any_lesion = false;
    LesionSet lesions;
    for (std::size_t k = 0; k < c_lesion.size(); ++k) {
      const std::string& text = cell(t, r, c_lesion[k]);
      if (text.empty()) continue;
      const auto flag = parse_flag(text);
      if (!flag) {
        diags.push_back(error_at(source, line, LesionSet::field_names()[k] + " must be 0 or 1"));
        continue;
      }
      any_lesion = true;
      lesions.set(k, *flag);
    }
    if (any_lesion) v.lesions = lesions;

    if (!v.gradable && gradable && (v.grade || v.dme)) {
      diags.push_back(error_at(source, line, "ungradable visit must not carry dr_grade or dme"));
    }
    if (v.gradable && !v.grade && !v.lesions) {
      diags.push_back(error_at(source, line, "gradable visit has no dr_grade and no lesion flags"));
    }
    if (v.lesions && !v.lesions->valid()) {
      diags.push_back(error_at(source, line, "lesion flags: " + v.lesions->violation()));
    }
    if (count_errors(diags) != before || !raw_day[r] || !side) continue;

    v.day = static_cast<int>(from_date[r] ? *raw_day[r] - *epoch : *raw_day[r]);
    if (v.gradable) resolve_visit(v, protocol);
    if (!v.gradable) v.lesions.reset();
    eyes[{pid, *side}].push_back({line, v});
  }

  for (auto& [key, rows] : eyes) {
    const bool sorted = std::is_sorted(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.visit.day < b.visit.day;
    });
    if (!sorted) {
      diags.push_back(warning_at(source, rows.front().line,
                                 "visits of " + eye_key_string(key.first, key.second) +
                                     " are not in day order; sorted on load"));
      std::stable_sort(rows.begin(), rows.end(),
                       [](const Row& a, const Row& b) { return a.visit.day < b.visit.day; });
    }
    EyeRecord eye;
    eye.patient_id = key.first;
    eye.side = key.second;
    bool dup = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].visit.day == rows[i - 1].visit.day) {
        Diagnostic d = error_at(source, rows[i - 1].line,
                                "duplicate visit (" + eye_key_string(key.first, key.second) +
                                    ", day " + std::to_string(rows[i].visit.day) + ")");
        d.other_line = rows[i].line;
        diags.push_back(std::move(d));
        dup = true;
        continue;
      }
      eye.visits.push_back(rows[i].visit);
    }
    if (!dup) out.cohort.eyes.push_back(std::move(eye));
  }
  return out;
}

VisitsData load_visits(const std::string& path, GradingProtocol protocol) {
  VisitsData data = parse_visits(csv::read_file(path), protocol, path);
  throw_on_errors(data.diagnostics);
  return data;
}

void write_visits(std::ostream& out, const Cohort& cohort) {
  out << "patient_id,eye,visit_day,gradable,dr_grade,dme\n";
  for (const auto& eye : cohort.eyes) {
    for (const auto& v : eye.visits) {
      out << csv::escape(eye.patient_id) << ',' << to_string(eye.side) << ',' << v.day << ','
          << (v.gradable ? 1 : 0) << ',';
      if (v.grade) out << static_cast<int>(*v.grade);
      out << ',';
      if (v.gradable) out << (v.has_dme() ? 1 : 0);
      out << '\n';
    }
  }
}

// ----------------------------------------------------------------- scores

ScoresData parse_scores(const csv::Table& t, const std::string& source,
                        std::optional<long long> epoch_days) {
  ScoresData out;
  out.rows_read = t.rows.size();
  auto& diags = out.diagnostics;
  const auto c_pid = t.column("patient_id");
  const auto c_eye = t.column("eye");
  const auto c_day = t.column("visit_day");
  const auto c_date = t.column("visit_date");
  const auto c_score = t.column("score");
  if (!c_pid || !c_eye || !c_score || (!c_day && !c_date)) {
    diags.push_back(error_at(source, 1,
                             "malformed header: need patient_id, eye, visit_day (or visit_date), score"));
    return out;
  }
  std::map<PredictionKey, std::size_t> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t line = t.lines[r];
    const std::size_t before = count_errors(diags);
    Prediction p;
    p.key.patient_id = cell(t, r, c_pid);
    if (p.key.patient_id.empty()) diags.push_back(error_at(source, line, "empty patient_id"));
    const auto side = side_from_string(cell(t, r, c_eye));
    if (!side) diags.push_back(error_at(source, line, "eye must be OD or OS"));
    std::optional<long long> day;
    if (c_day && !cell(t, r, c_day).empty()) {
      day = csv::parse_int(cell(t, r, c_day));
      if (!day) diags.push_back(error_at(source, line, "visit_day is not an integer"));
    } else if (c_date) {
      const auto date = parse_iso_date(cell(t, r, c_date));
      if (!date) {
        diags.push_back(error_at(source, line, "visit_date is not an ISO-8601 date"));
      } else if (!epoch_days) {
        diags.push_back(error_at(source, line, "visit_date needs the visits file for its epoch"));
      } else {
        day = *date - *epoch_days;
      }
    } else {
      diags.push_back(error_at(source, line, "missing visit day"));
    }
    const auto score = csv::parse_double(cell(t, r, c_score));
    if (!score) {
      diags.push_back(error_at(source, line, "score is not a number"));
    } else if (*score < 0.0 || *score > 1.0) {
      diags.push_back(error_at(source, line, "score out of [0,1]"));
    }
    if (count_errors(diags) != before) continue;
    p.key.side = *side;
    p.key.visit_day = static_cast<int>(*day);
    p.score = *score;
    const auto [it, inserted] = seen.emplace(p.key, line);
    if (!inserted) {
      Diagnostic d = error_at(source, it->second,
                              "duplicate score key (" + eye_key_string(p.key.patient_id, p.key.side) +
                                  ", day " + std::to_string(p.key.visit_day) + ")");
      d.other_line = line;
      diags.push_back(std::move(d));
      continue;
    }
    out.rows.push_back(std::move(p));
  }
  return out;
}

ScoresData load_scores(const std::string& path, std::optional<long long> epoch_days) {
  ScoresData data = parse_scores(csv::read_file(path), path, epoch_days);
  throw_on_errors(data.diagnostics);
  return data;
}

void write_scores(std::ostream& out, const std::vector<Prediction>& scores) {
  out << "patient_id,eye,visit_day,score\n";
  for (const auto& p : scores) {
    out << csv::escape(p.key.patient_id) << ',' << to_string(p.key.side) << ',' << p.key.visit_day
        << ',' << csv::format_fixed(p.score, 6) << '\n';
  }
}

// ----------------------------------------------------------- risk factors

namespace {

const std::vector<std::string>& known_factor_columns() {
  static const std::vector<std::string> names = {
      "patient_id", "eye", "age", "sex", "hba1c", "years_with_diabetes",
      "diabetic_control", "insulin_use", "hypertension"};
  return names;
}

}  // namespace

RiskFactorsData parse_risk_factors(const csv::Table& t, const std::string& source,
                                   const std::vector<std::string>& ignore) {
  RiskFactorsData out;
  auto& diags = out.diagnostics;
  const auto c_pid = t.column("patient_id");
  if (!c_pid) {
    diags.push_back(error_at(source, 1, "malformed header: need patient_id"));
    return out;
  }
  const auto c_eye = t.column("eye");
  const auto c_age = t.column("age");
  const auto c_sex = t.column("sex");
  const auto c_hba1c = t.column("hba1c");
  const auto c_years = t.column("years_with_diabetes");
  const auto c_control = t.column("diabetic_control");
  const auto c_insulin = t.column("insulin_use");
  const auto c_htn = t.column("hypertension");

  // Extra columns: numeric when every non-empty cell parses.
  struct Extra {
    std::size_t col;
    std::string name;
    bool numeric;
  };
  std::vector<Extra> extras;
  const auto& known = known_factor_columns();
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const auto& name = t.header[c];
    if (std::find(known.begin(), known.end(), name) != known.end()) continue;
    if (std::find(ignore.begin(), ignore.end(), name) != ignore.end()) continue;
    bool numeric = true;
    for (const auto& row : t.rows) {
      if (!row[c].empty() && !csv::parse_double(row[c])) {
        numeric = false;
        break;
      }
    }
    extras.push_back({c, name, numeric});
  }

  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t line = t.lines[r];
    RiskFactorRecord rec;
    rec.patient_id = cell(t, r, c_pid);
    if (rec.patient_id.empty()) {
      diags.push_back(error_at(source, line, "empty patient_id"));
      continue;
    }
    const std::string& eye_text = cell(t, r, c_eye);
    if (!eye_text.empty()) {
      rec.eye = side_from_string(eye_text);
      if (!rec.eye) {
        diags.push_back(error_at(source, line, "eye must be OD, OS or empty"));
        continue;
      }
    }
    if (!seen.emplace(rec.patient_id, eye_text).second) {
      diags.push_back(error_at(source, line, "duplicate risk factor key " + rec.patient_id +
                                                 (eye_text.empty() ? "" : "/" + eye_text)));
      continue;
    }
    auto num = [&](std::optional<std::size_t> col, const char* name) -> std::optional<double> {
      const std::string& text = cell(t, r, col);
      if (text.empty()) return std::nullopt;
      const auto v = csv::parse_double(text);
      if (!v) diags.push_back(error_at(source, line, std::string(name) + " is not a number"));
      return v;
    };
    auto flag = [&](std::optional<std::size_t> col, const char* name) -> std::optional<bool> {
      const std::string& text = cell(t, r, col);
      if (text.empty()) return std::nullopt;
      const auto v = parse_flag(text);
      if (!v) diags.push_back(error_at(source, line, std::string(name) + " must be 0 or 1"));
      return v;
    };
    rec.age = num(c_age, "age");
    rec.hba1c = num(c_hba1c, "hba1c");
    rec.years_with_diabetes = num(c_years, "years_with_diabetes");
    rec.insulin_use = flag(c_insulin, "insulin_use");
    rec.hypertension = flag(c_htn, "hypertension");
    if (!cell(t, r, c_sex).empty()) rec.sex = cell(t, r, c_sex);
    if (const std::string& text = cell(t, r, c_control); !text.empty()) {
      rec.diabetic_control = diabetic_control_from_string(text);
      if (!rec.diabetic_control) {
        diags.push_back(error_at(source, line,
                                 "diabetic_control must be poor, fair, moderate, good or excellent"));
      }
    }
    for (const auto& e : extras) {
      const std::string& text = t.rows[r][e.col];
      if (text.empty()) continue;
      if (e.numeric) {
        rec.extra_numeric[e.name] = *csv::parse_double(text);
      } else {
        rec.extra_categorical[e.name] = text;
      }
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

RiskFactorsData load_risk_factors(const std::string& path) {
  RiskFactorsData data = parse_risk_factors(csv::read_file(path), path);
  throw_on_errors(data.diagnostics);
  return data;
}

namespace {

std::vector<std::string> extra_numeric_names(const std::vector<RiskFactorRecord>& records) {
  std::set<std::string> names;
  for (const auto& r : records) {
    for (const auto& [k, v] : r.extra_numeric) names.insert(k);
  }
  return {names.begin(), names.end()};
}

std::vector<std::string> extra_categorical_names(const std::vector<RiskFactorRecord>& records) {
  std::set<std::string> names;
  for (const auto& r : records) {
    for (const auto& [k, v] : r.extra_categorical) names.insert(k);
  }
  return {names.begin(), names.end()};
}

void write_factor_header(std::ostream& out, const std::vector<std::string>& num,
                         const std::vector<std::string>& cat) {
  out << "age,sex,hba1c,years_with_diabetes,diabetic_control,insulin_use,hypertension";
  for (const auto& n : num) out << ',' << csv::escape(n);
  for (const auto& n : cat) out << ',' << csv::escape(n);
}

void write_factor_cells(std::ostream& out, const RiskFactorRecord* r,
                        const std::vector<std::string>& num, const std::vector<std::string>& cat) {
  auto opt_num = [&](const std::optional<double>& v) {
    if (v) out << csv::format_double(*v);
  };
  auto opt_flag = [&](const std::optional<bool>& v) {
    if (v) out << (*v ? 1 : 0);
  };
  if (r) {
    opt_num(r->age);
    out << ',';
    if (r->sex) out << csv::escape(*r->sex);
    out << ',';
    opt_num(r->hba1c);
    out << ',';
    opt_num(r->years_with_diabetes);
    out << ',';
    if (r->diabetic_control) out << to_string(*r->diabetic_control);
    out << ',';
    opt_flag(r->insulin_use);
    out << ',';
    opt_flag(r->hypertension);
  } else {
    out << ",,,,,,";
  }
  for (const auto& n : num) {
    out << ',';
    if (r) {
      if (auto it = r->extra_numeric.find(n); it != r->extra_numeric.end()) {
        out << csv::format_double(it->second);
      }
    }
  }
  for (const auto& n : cat) {
    out << ',';
    if (r) {
      if (auto it = r->extra_categorical.find(n); it != r->extra_categorical.end()) {
        out << csv::escape(it->second);
      }
    }
  }
}

}  // namespace

void write_risk_factors(std::ostream& out, const std::vector<RiskFactorRecord>& records) {
  const auto num = extra_numeric_names(records);
  const auto cat = extra_categorical_names(records);
  out << "patient_id,eye,";
  write_factor_header(out, num, cat);
  out << '\n';
  for (const auto& r : records) {
    out << csv::escape(r.patient_id) << ',';
    if (r.eye) out << to_string(*r.eye);
    out << ',';
    write_factor_cells(out, &r, num, cat);
    out << '\n';
  }
}

// ----------------------------------------------------------------- labels

void write_labels(std::ostream& out, const LabelTable& table) {
  out << "patient_id,eye,outcome,duration_days,event\n";
  for (const auto& row : table.rows) {
    if (!row.outcome || !row.survival) continue;
    out << csv::escape(row.patient_id) << ',' << to_string(row.side) << ','
        << to_string(*row.outcome) << ',' << row.survival->duration_days << ','
        << (row.survival->event ? 1 : 0) << '\n';
  }
}

std::vector<LabelRow> load_labels(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  std::vector<Diagnostic> diags;
  const auto c_pid = t.column("patient_id");
  const auto c_eye = t.column("eye");
  const auto c_out = t.column("outcome");
  const auto c_dur = t.column("duration_days");
  const auto c_evt = t.column("event");
  if (!c_pid || !c_eye || !c_out || !c_dur || !c_evt) {
    fail(ErrorKind::InvalidInput,
         path + ": malformed header: need patient_id, eye, outcome, duration_days, event");
  }
  std::vector<LabelRow> rows;
  std::set<std::pair<std::string, EyeSide>> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t line = t.lines[r];
    LabelRow row;
    row.patient_id = cell(t, r, c_pid);
    const auto side = side_from_string(cell(t, r, c_eye));
    const auto outcome = label_from_string(cell(t, r, c_out));
    const auto duration = csv::parse_int(cell(t, r, c_dur));
    const auto event = parse_flag(cell(t, r, c_evt));
    if (row.patient_id.empty() || !side || !outcome || !duration || *duration < 0 || !event) {
      diags.push_back(error_at(path, line, "malformed label row"));
      continue;
    }
    if (!seen.emplace(row.patient_id, *side).second) {
      diags.push_back(error_at(path, line, "duplicate label for " + eye_key_string(row.patient_id, *side)));
      continue;
    }
    row.side = *side;
    row.outcome = outcome;
    row.survival = SurvivalRecord{static_cast<int>(*duration), *event};
    rows.push_back(std::move(row));
  }
  throw_on_errors(diags);
  return rows;
}

// ------------------------------------------------------------------ joins

std::string eye_key_string(const std::string& patient_id, EyeSide side) {
  return patient_id + "/" + std::string(to_string(side));
}

std::map<EyeKey, Prediction> baseline_scores(const std::vector<Prediction>& scores) {
  std::map<EyeKey, Prediction> out;
  for (const auto& p : scores) {
    EyeKey key{p.key.patient_id, p.key.side};
    auto it = out.find(key);
    if (it == out.end()) {
      out.emplace(std::move(key), p);
    } else if (p.key.visit_day < it->second.key.visit_day) {
      it->second = p;
    }
  }
  return out;
}

PredictionSet join_baseline_scores(const std::vector<Prediction>& scores,
                                   const std::vector<LabelRow>& labels, JoinReport* report) {
  const auto base = baseline_scores(scores);
  std::set<EyeKey> used;
  std::vector<Prediction> items;
  for (const auto& row : labels) {
    if (!row.outcome || *row.outcome == OutcomeLabel::Unknown) continue;
    const EyeKey key{row.patient_id, row.side};
    const auto it = base.find(key);
    if (it == base.end()) {
      if (report) report->unmatched_left.push_back(eye_key_string(row.patient_id, row.side));
      continue;
    }
    used.insert(key);
    Prediction p = it->second;
    p.label = *row.outcome == OutcomeLabel::Positive;
    items.push_back(std::move(p));
  }
  if (report) {
    std::set<EyeKey> labelled;
    for (const auto& row : labels) labelled.insert({row.patient_id, row.side});
    for (const auto& [key, p] : base) {
      if (!labelled.count(key)) report->unmatched_right.push_back(eye_key_string(key.patient_id, key.side));
    }
  }
  return PredictionSet(std::move(items));
}

std::vector<std::optional<RiskFactorRecord>> join_risk_factors(
    const std::vector<LabelRow>& labels, const std::vector<RiskFactorRecord>& factors,
    JoinReport* report) {
  std::map<std::pair<std::string, EyeSide>, const RiskFactorRecord*> by_eye;
  std::map<std::string, const RiskFactorRecord*> by_patient;
  for (const auto& f : factors) {
    if (f.eye) {
      by_eye[{f.patient_id, *f.eye}] = &f;
    } else {
      by_patient[f.patient_id] = &f;
    }
  }
  std::set<const RiskFactorRecord*> used;
  std::vector<std::optional<RiskFactorRecord>> out;
  out.reserve(labels.size());
  for (const auto& row : labels) {
    const RiskFactorRecord* match = nullptr;
    if (auto it = by_eye.find({row.patient_id, row.side}); it != by_eye.end()) {
      match = it->second;
    } else if (auto jt = by_patient.find(row.patient_id); jt != by_patient.end()) {
      match = jt->second;
    }
    if (match) {
      used.insert(match);
      out.emplace_back(*match);
    } else {
      out.emplace_back(std::nullopt);
      if (report) report->unmatched_left.push_back(eye_key_string(row.patient_id, row.side));
    }
  }
  if (report) {
    for (const auto& f : factors) {
      if (!used.count(&f)) {
        report->unmatched_right.push_back(f.patient_id + (f.eye ? "/" + std::string(to_string(*f.eye)) : ""));
      }
    }
  }
  return out;
}

// --------------------------------------------------------- analysis table

void write_analysis(std::ostream& out, const std::vector<LabelRow>& labels,
                    const std::map<EyeKey, Prediction>& scores,
                    const std::vector<std::optional<RiskFactorRecord>>& factors) {
  std::vector<RiskFactorRecord> present;
  for (const auto& f : factors) {
    if (f) present.push_back(*f);
  }
  const auto num = extra_numeric_names(present);
  const auto cat = extra_categorical_names(present);
  out << "patient_id,eye,outcome,score,";
  write_factor_header(out, num, cat);
  out << '\n';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& row = labels[i];
    if (!row.outcome || *row.outcome == OutcomeLabel::Unknown) continue;
    const auto it = scores.find(EyeKey{row.patient_id, row.side});
    if (it == scores.end()) continue;
    out << csv::escape(row.patient_id) << ',' << to_string(row.side) << ','
        << to_string(*row.outcome) << ',' << csv::format_fixed(it->second.score, 6) << ',';
    write_factor_cells(out, factors[i] ? &*factors[i] : nullptr, num, cat);
    out << '\n';
  }
}

std::vector<LabeledSample> load_analysis(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  const auto c_out = t.column("outcome");
  const auto c_score = t.column("score");
  if (!c_out || !c_score || !t.column("patient_id")) {
    fail(ErrorKind::InvalidInput, path + ": malformed header: need patient_id, outcome, score");
  }
  RiskFactorsData factors = parse_risk_factors(t, path, {"outcome", "score"});
  std::vector<Diagnostic> diags = factors.diagnostics;
  std::vector<LabeledSample> out;
  if (factors.records.size() != t.rows.size()) {
    throw_on_errors(diags);
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto outcome = label_from_string(t.rows[r][*c_out]);
    const auto score = csv::parse_double(t.rows[r][*c_score]);
    if (!outcome || *outcome == OutcomeLabel::Unknown) {
      diags.push_back(error_at(path, t.lines[r], "outcome must be positive or negative"));
      continue;
    }
    if (!score || *score < 0.0 || *score > 1.0) {
      diags.push_back(error_at(path, t.lines[r], "score out of [0,1]"));
      continue;
    }
    LabeledSample s;
    s.factors = clean_risk_factors(factors.records[r]);
    s.score = *score;
    s.label = *outcome == OutcomeLabel::Positive;
    out.push_back(std::move(s));
  }
  throw_on_errors(diags);
  return out;
}

}  // namespace retinarisk::io
