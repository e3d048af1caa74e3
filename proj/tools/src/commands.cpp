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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <map>
#include <set>
#include <sstream>

#include "output.hpp"
#include "retinarisk/cli/app.hpp"
#include "retinarisk/csv.hpp"
#include "retinarisk/io.hpp"
#include "retinarisk/metrics.hpp"
#include "retinarisk/parallel.hpp"
#include "retinarisk/regression.hpp"
#include "retinarisk/simulate.hpp"
#include "retinarisk/survival.hpp"

namespace retinarisk::cli {

namespace {

const std::string& need(const std::string& value, const char* flag) {
  if (value.empty()) fail(ErrorKind::InvalidInput, std::string("missing required option ") + flag);
  return value;
}

std::string cell(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? csv::format_double(*v) : std::string();
}

QuantileMethod quantile_method(const std::string& name) {
  if (name == "linear") return QuantileMethod::Linear;
  if (name == "lower") return QuantileMethod::Lower;
  if (name == "higher") return QuantileMethod::Higher;
  if (name == "nearest") return QuantileMethod::Nearest;
  fail(ErrorKind::InvalidInput, "unknown quantile method " + name);
}

Json auc_json(const AUCResult& a) {
  Json j;
  j["auc"] = num(a.auc);
  j["se"] = num(a.se);
  j["ci_lo"] = num(a.ci_lo);
  j["ci_hi"] = num(a.ci_hi);
  j["n_pos"] = a.n_pos;
  j["n_neg"] = a.n_neg;
  return j;
}

Json join_json(const io::JoinReport& r) {
  Json j;
  j["labels_without_score"] = r.unmatched_left.size();
  j["scores_without_label"] = r.unmatched_right.size();
  return j;
}

std::vector<LabelRow> read_labels(const Params& p, RunManifest& m) {
  m.add_input("labels", need(p.labels, "--labels"));
  return io::load_labels(p.labels);
}

std::vector<Prediction> read_scores(const std::string& path, RunManifest& m,
                                    const std::string& role = "scores") {
  m.add_input(role, path);
  return io::load_scores(path).rows;
}

/// Baseline score of each labelled eye with a known outcome.
PredictionSet labelled_predictions(const Params& p, RunManifest& m, Json& out) {
  const auto labels = read_labels(p, m);
  const auto scores = read_scores(need(p.scores, "--scores"), m);
  io::JoinReport report;
  PredictionSet preds = io::join_baseline_scores(scores, labels, &report);
  out["join"] = join_json(report);
  return preds;
}

Cohort read_cohort(const Params& p, RunManifest& m, std::optional<long long>* epoch = nullptr) {
  m.add_input("visits", need(p.visits, "--visits"));
  io::VisitsData data = io::load_visits(p.visits, p.protocol);
  if (epoch) *epoch = data.epoch_days;
  return std::move(data.cohort);
}

Json diag_json(const io::Diagnostic& d) {
  Json j;
  j["severity"] = d.severity == io::Severity::Error ? "error" : "warning";
  j["file"] = std::filesystem::path(d.file).filename().string();
  if (d.line) j["line"] = d.line;
  if (d.other_line) j["other_line"] = d.other_line;
  j["message"] = d.message;
  return j;
}

// ------------------------------------------------------------------ validate

int cmd_validate(const Params& p) {
  RunManifest m("validate", p);
  Json out;
  std::vector<io::Diagnostic> diags;
  Json files = Json::array();
  auto file_entry = [&](const std::string& role, const std::string& path, std::size_t rows,
                        const std::vector<io::Diagnostic>& d) {
    Json f;
    f["role"] = role;
    f["file"] = std::filesystem::path(path).filename().string();
    f["rows"] = rows;
    f["errors"] = io::count_errors(d);
    f["warnings"] = d.size() - io::count_errors(d);
    files.push_back(f);
    diags.insert(diags.end(), d.begin(), d.end());
  };

  std::optional<long long> epoch;
  std::set<EyeKey> eyes;
  std::set<std::string> patients;
  std::set<PredictionKey> visit_keys;
  const bool have_visits = !p.visits.empty();
  if (have_visits) {
    m.add_input("visits", p.visits);
    io::VisitsData v = io::parse_visits(csv::read_file(p.visits), p.protocol, p.visits);
    epoch = v.epoch_days;
    for (const auto& e : v.cohort.eyes) {
      eyes.insert({e.patient_id, e.side});
      patients.insert(e.patient_id);
      for (const auto& vis : e.visits) visit_keys.insert({e.patient_id, e.side, vis.day});
    }
    file_entry("visits", p.visits, v.rows, v.diagnostics);
  }
  if (!p.scores.empty()) {
    m.add_input("scores", p.scores);
    io::ScoresData s = io::parse_scores(csv::read_file(p.scores), p.scores, epoch);
    std::vector<io::Diagnostic> d = s.diagnostics;
    if (have_visits) {
      std::size_t no_eye = 0, no_visit = 0;
      for (const auto& row : s.rows) {
        if (!eyes.count({row.key.patient_id, row.key.side})) {
          ++no_eye;
        } else if (!visit_keys.count(row.key)) {
          ++no_visit;
        }
      }
      if (no_eye) {
        d.push_back({io::Severity::Warning, p.scores, 0, 0,
                     std::to_string(no_eye) + " score rows reference eyes absent from the visits file"});
      }
      if (no_visit) {
        d.push_back({io::Severity::Warning, p.scores, 0, 0,
                     std::to_string(no_visit) + " score rows do not match a visit day"});
      }
    }
    file_entry("scores", p.scores, s.rows_read, d);
  }
  if (!p.risk_factors.empty()) {
    m.add_input("risk_factors", p.risk_factors);
    const csv::Table t = csv::read_file(p.risk_factors);
    io::RiskFactorsData r = io::parse_risk_factors(t, p.risk_factors);
    std::vector<io::Diagnostic> d = r.diagnostics;
    if (have_visits) {
      std::set<std::string> covered;
      for (const auto& rec : r.records) covered.insert(rec.patient_id);
      std::size_t orphan = 0, uncovered = 0;
      for (const auto& pid : covered) orphan += patients.count(pid) ? 0 : 1;
      for (const auto& pid : patients) uncovered += covered.count(pid) ? 0 : 1;
      if (orphan) {
        d.push_back({io::Severity::Warning, p.risk_factors, 0, 0,
                     std::to_string(orphan) + " patients are absent from the visits file"});
      }
      if (uncovered) {
        d.push_back({io::Severity::Warning, p.risk_factors, 0, 0,
                     std::to_string(uncovered) + " patients in the visits file have no risk factors"});
      }
    }
    file_entry("risk_factors", p.risk_factors, t.rows.size(), d);
  }
  if (files.empty()) fail(ErrorKind::InvalidInput, "validate: no input files given");

  const std::size_t errors = io::count_errors(diags);
  out["valid"] = errors == 0;
  out["errors"] = errors;
  out["warnings"] = diags.size() - errors;
  out["files"] = files;
  Json list = Json::array();
  for (const auto& d : diags) list.push_back(diag_json(d));
  out["diagnostics"] = list;
  for (const auto& d : diags) {
    if (d.severity == io::Severity::Error) {
      std::cerr << d.file << (d.line ? ":" + std::to_string(d.line) : std::string()) << ": "
                << d.message << '\n';
    }
  }
  write_json(out_path(p, "validate.json"), out, m);
  return errors == 0 ? kOk : kInputError;
}

// --------------------------------------------------------------- select-eyes

int cmd_select_eyes(const Params& p) {
  RunManifest m("select-eyes", p);
  const Cohort cohort = read_cohort(p, m);
  const Cohort selected = select_one_eye_per_patient(cohort, p.seed);
  std::ostringstream csv_out;
  io::write_visits(csv_out, selected);
  write_text(out_path(p, "visits_selected.csv"), csv_out.str());
  Json out;
  out["n_eyes_in"] = cohort.eyes.size();
  out["n_eyes_out"] = selected.eyes.size();
  write_json(out_path(p, "select-eyes.json"), out, m);
  return kOk;
}

// --------------------------------------------------------------------- label

int cmd_label(const Params& p) {
  RunManifest m("label", p);
  m.extra()["one_eye_per_patient"] = p.one_eye;
  std::optional<long long> epoch;
  Cohort cohort = read_cohort(p, m, &epoch);
  if (p.one_eye) cohort = select_one_eye_per_patient(cohort, p.seed);
  const LabelTable table = label_cohort(cohort, p.threshold, p.horizon, p.threads);

  std::ostringstream labels_csv;
  io::write_labels(labels_csv, table);
  write_text(out_path(p, "labels.csv"), labels_csv.str());

  Json out;
  out["n_eyes"] = table.rows.size();
  out["n_positive"] = table.n_positive;
  out["n_negative"] = table.n_negative;
  out["n_unknown"] = table.n_unknown;
  out["n_excluded"] = table.n_error;
  put(out, "incidence", table.incidence(), "no eye with a known outcome");
  if (table.n_known() > 0) {
    const auto ci = clopper_pearson(static_cast<std::int64_t>(table.n_positive),
                                    static_cast<std::int64_t>(table.n_known()), p.alpha);
    out["incidence_ci"] = {num(ci.first), num(ci.second)};
  } else {
    out["incidence_ci"] = nullptr;
    out["incidence_ci_null_reason"] = "no eye with a known outcome";
  }

  if (!p.scores.empty()) {
    const auto scores = read_scores(p.scores, m);
    const auto baseline = io::baseline_scores(scores);
    std::vector<std::optional<RiskFactorRecord>> factors(table.rows.size());
    Json join;
    if (!p.risk_factors.empty()) {
      m.add_input("risk_factors", p.risk_factors);
      io::JoinReport report;
      factors = io::join_risk_factors(table.rows, io::load_risk_factors(p.risk_factors).records,
                                      &report);
      join["eyes_without_risk_factors"] = report.unmatched_left.size();
      join["risk_factor_rows_unused"] = report.unmatched_right.size();
    }
    std::size_t known_without_score = 0;
    for (const auto& row : table.rows) {
      if (row.outcome && *row.outcome != OutcomeLabel::Unknown &&
          !baseline.count({row.patient_id, row.side})) {
        ++known_without_score;
      }
    }
    join["known_eyes_without_score"] = known_without_score;
    out["analysis_join"] = join;
    std::ostringstream analysis;
    io::write_analysis(analysis, table.rows, baseline, factors);
    write_text(out_path(p, "analysis.csv"), analysis.str());
  }
  write_json(out_path(p, "label.json"), out, m);
  return kOk;
}

// ------------------------------------------------------------------ eval-auc

int cmd_eval_auc(const Params& p) {
  RunManifest m("eval-auc", p);
  m.extra()["ci"] = p.ci;
  Json out;
  const PredictionSet preds = labelled_predictions(p, m, out);
  AucCiTransform transform = AucCiTransform::Wald;
  if (p.ci == "logit") {
    transform = AucCiTransform::LogitWald;
  } else if (p.ci != "wald") {
    fail(ErrorKind::InvalidInput, "unknown --ci " + p.ci);
  }
  const AUCResult auc = auc_delong(preds, p.alpha, transform);
  out["auc"] = auc_json(auc);
  std::ostringstream roc;
  roc << "threshold,fpr,tpr\n";
  for (const auto& pt : roc_curve(preds)) {
    roc << (std::isfinite(pt.threshold) ? csv::format_double(pt.threshold) : std::string()) << ','
        << csv::format_double(pt.fpr) << ',' << csv::format_double(pt.tpr) << '\n';
  }
  write_text(out_path(p, "roc.csv"), roc.str());
  write_json(out_path(p, "eval-auc.json"), out, m);
  return kOk;
}

// ---------------------------------------------------------- eval-calibration

int cmd_eval_calibration(const Params& p) {
  RunManifest m("eval-calibration", p);
  m.extra()["bins"] = p.bins;
  Json out;
  const PredictionSet preds = labelled_predictions(p, m, out);
  const CalibrationTable table = calibration_table(preds, p.bins);
  std::ostringstream csv_out;
  csv_out << "bin,n,score_lo,score_hi,mean_predicted,observed_rate,observed_ci_lo,observed_ci_hi\n";
  Json bins = Json::array();
  for (std::size_t b = 0; b < table.bins.size(); ++b) {
    const auto& bin = table.bins[b];
    const auto events = static_cast<std::int64_t>(std::llround(bin.observed_rate * bin.n));
    const auto ci = clopper_pearson(events, static_cast<std::int64_t>(bin.n), p.alpha);
    Json j;
    j["bin"] = b + 1;
    j["n"] = bin.n;
    j["score_lo"] = num(bin.score_lo);
    j["score_hi"] = num(bin.score_hi);
    j["mean_predicted"] = num(bin.mean_predicted);
    j["observed_rate"] = num(bin.observed_rate);
    j["observed_ci"] = {num(ci.first), num(ci.second)};
    bins.push_back(j);
    csv_out << b + 1 << ',' << bin.n << ',' << csv::format_double(bin.score_lo) << ','
            << csv::format_double(bin.score_hi) << ',' << csv::format_double(bin.mean_predicted)
            << ',' << csv::format_double(bin.observed_rate) << ',' << csv::format_double(ci.first)
            << ',' << csv::format_double(ci.second) << '\n';
  }
  double mean = 0.0;
  for (const auto& x : preds.items()) mean += x.score;
  out["n"] = preds.size();
  out["mean_predicted"] = num(mean / static_cast<double>(preds.size()));
  out["incidence"] = num(static_cast<double>(preds.n_positive()) / static_cast<double>(preds.size()));
  out["bins"] = bins;
  write_text(out_path(p, "calibration.csv"), csv_out.str());
  write_json(out_path(p, "eval-calibration.json"), out, m);
  return kOk;
}

// ------------------------------------------------------------- eval-ppv-npv

int cmd_eval_ppv_npv(const Params& p) {
  RunManifest m("eval-ppv-npv", p);
  m.extra()["quantile"] = p.quantile;
  Json out;
  const PredictionSet preds = labelled_predictions(p, m, out);
  const auto rows = ppv_npv_curve(preds, p.alpha, quantile_method(p.quantile), p.threads);
  std::ostringstream csv_out;
  csv_out << "percentile,threshold,n_above,n_below,ppv,ppv_ci_lo,ppv_ci_hi,npv,npv_ci_lo,npv_ci_hi\n";
  Json list = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["percentile"] = r.percentile;
    j["threshold"] = num(r.threshold);
    j["n_above"] = r.n_above;
    j["n_below"] = r.n_below;
    put(j, "ppv", r.ppv, "no score at or above the threshold");
    j["ppv_ci"] = r.ppv_ci ? Json{num(r.ppv_ci->first), num(r.ppv_ci->second)} : Json(nullptr);
    put(j, "npv", r.npv, "no score below the threshold");
    j["npv_ci"] = r.npv_ci ? Json{num(r.npv_ci->first), num(r.npv_ci->second)} : Json(nullptr);
    list.push_back(j);
    auto lo = [](const auto& ci) { return ci ? std::optional<double>(ci->first) : std::nullopt; };
    auto hi = [](const auto& ci) { return ci ? std::optional<double>(ci->second) : std::nullopt; };
    csv_out << r.percentile << ',' << csv::format_double(r.threshold) << ',' << r.n_above << ','
            << r.n_below << ',' << cell(r.ppv) << ',' << cell(lo(r.ppv_ci)) << ','
            << cell(hi(r.ppv_ci)) << ',' << cell(r.npv) << ',' << cell(lo(r.npv_ci)) << ','
            << cell(hi(r.npv_ci)) << '\n';
  }
  out["n"] = preds.size();
  out["n_positive"] = preds.n_positive();
  out["rows"] = list;
  write_text(out_path(p, "ppv_npv.csv"), csv_out.str());
  write_json(out_path(p, "eval-ppv-npv.json"), out, m);
  return kOk;
}

// --------------------------------------------------------------- recalibrate

int cmd_recalibrate(const Params& p) {
  RunManifest m("recalibrate", p);
  m.extra()["calibration_fraction"] = p.fraction;
  Json out;
  const auto labels = read_labels(p, m);
  auto scores = read_scores(need(p.scores, "--scores"), m);
  io::JoinReport report;
  const PredictionSet preds = io::join_baseline_scores(scores, labels, &report);
  out["join"] = join_json(report);
  const RecalibrationResult r = recalibrate_constant(preds, p.fraction, p.seed);
  out["factor"] = num(r.factor);
  out["subsample_size"] = r.subsample.size();
  out["subsample_incidence"] = num(r.subsample_incidence);
  out["subsample_mean_score"] = num(r.subsample_mean_score);
  out["n_clipped_evaluation"] = r.n_clipped;

  std::size_t clipped = 0;
  for (auto& s : scores) {
    const double v = r.factor * s.score;
    if (v > 1.0) ++clipped;
    s.score = std::min(1.0, v);
  }
  out["n_clipped_all_visits"] = clipped;
  if (clipped) std::cerr << "recalibrate: " << clipped << " rescaled scores clipped at 1\n";
  try {
    out["auc_before"] = num(auc_delong(preds, p.alpha).auc);
    out["auc_after"] = num(auc_delong(r.rescaled, p.alpha).auc);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Precondition) throw;
    out["auc_before"] = nullptr;
    out["auc_after"] = nullptr;
    out["auc_null_reason"] = e.what();
  }
  std::ostringstream csv_out;
  io::write_scores(csv_out, scores);
  write_text(out_path(p, "scores_recalibrated.csv"), csv_out.str());
  write_json(out_path(p, "recalibrate.json"), out, m);
  return kOk;
}

// --------------------------------------------------------------- risk-groups

int cmd_risk_groups(const Params& p) {
  RunManifest m("risk-groups", p);
  m.extra()["quantile"] = p.quantile;
  const auto labels = read_labels(p, m);
  const auto base = io::baseline_scores(read_scores(need(p.scores, "--scores"), m));
  std::vector<Prediction> items;
  for (const auto& row : labels) {
    const auto it = base.find({row.patient_id, row.side});
    if (it == base.end() || !row.survival) continue;
    Prediction x = it->second;
    x.label = row.outcome && *row.outcome == OutcomeLabel::Positive;
    items.push_back(std::move(x));
  }
  const PredictionSet eval(std::move(items));
  std::vector<double> tune;
  if (!p.tune_scores.empty()) {
    for (const auto& [k, v] : io::baseline_scores(read_scores(p.tune_scores, m, "tune_scores"))) {
      tune.push_back(v.score);
    }
  } else {
    tune = eval.scores();
  }
  if (tune.empty()) fail(ErrorKind::Precondition, "risk-groups: no tuning scores");
  const RiskGroupAssignment a = assign_risk_groups(tune, eval, quantile_method(p.quantile));

  std::ostringstream csv_out;
  csv_out << "patient_id,eye,score,group\n";
  std::map<RiskGroup, std::size_t> counts;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const auto& x = eval.items()[i];
    csv_out << csv::escape(x.key.patient_id) << ',' << to_string(x.key.side) << ','
            << csv::format_fixed(x.score, 6) << ',' << to_string(a.groups[i]) << '\n';
    ++counts[a.groups[i]];
  }
  Json out;
  out["n_tuning"] = tune.size();
  out["low_cut"] = num(a.thresholds.low_cut);
  out["high_cut"] = num(a.thresholds.high_cut);
  Json c;
  for (RiskGroup g : {RiskGroup::Low, RiskGroup::Medium, RiskGroup::High}) {
    c[std::string(to_string(g))] = counts[g];
  }
  out["counts"] = c;
  write_text(out_path(p, "groups.csv"), csv_out.str());
  write_json(out_path(p, "risk-groups.json"), out, m);
  return kOk;
}

// ------------------------------------------------------------------ survival

struct GroupedSurvival {
  std::vector<std::string> names;
  std::vector<std::vector<SurvivalRecord>> records;
};

GroupedSurvival grouped_survival(const Params& p, RunManifest& m, bool require_groups) {
  const auto labels = read_labels(p, m);
  GroupedSurvival out;
  if (p.groups.empty()) {
    if (require_groups) fail(ErrorKind::InvalidInput, "missing required option --groups");
    out.names = {"all"};
    out.records.emplace_back();
    for (const auto& row : labels) {
      if (row.survival) out.records[0].push_back(*row.survival);
    }
    return out;
  }
  m.add_input("groups", p.groups);
  const csv::Table t = csv::read_file(p.groups);
  const auto c_pid = t.column("patient_id");
  const auto c_eye = t.column("eye");
  const auto c_group = t.column("group");
  if (!c_pid || !c_eye || !c_group) {
    fail(ErrorKind::InvalidInput, p.groups + ": malformed header: need patient_id, eye, group");
  }
  std::map<EyeKey, std::string> group_of;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto side = side_from_string(t.rows[r][*c_eye]);
    if (!side) {
      fail(ErrorKind::InvalidInput, p.groups + ":" + std::to_string(t.lines[r]) + ": bad eye");
    }
    group_of[{t.rows[r][*c_pid], *side}] = t.rows[r][*c_group];
  }
  std::map<std::pair<int, std::string>, std::vector<SurvivalRecord>> by_group;
  for (const auto& row : labels) {
    const auto it = group_of.find({row.patient_id, row.side});
    if (it == group_of.end() || !row.survival) continue;
    const auto g = risk_group_from_string(it->second);
    by_group[{g ? static_cast<int>(*g) : 3, it->second}].push_back(*row.survival);
  }
  for (auto& [k, v] : by_group) {
    out.names.push_back(k.second);
    out.records.push_back(std::move(v));
  }
  if (out.names.empty()) fail(ErrorKind::Precondition, "no labelled eye has a group");
  return out;
}

Json logrank_json(const GroupedSurvival& g) {
  const LogRankResult lr = log_rank(g.records);
  Json j;
  j["chi2"] = num(lr.chi2);
  j["df"] = lr.df;
  j["p"] = num(lr.p);
  Json groups = Json::array();
  for (std::size_t i = 0; i < g.names.size(); ++i) {
    Json e;
    e["group"] = g.names[i];
    e["observed"] = num(lr.observed[i]);
    e["expected"] = num(lr.expected[i]);
    groups.push_back(e);
  }
  j["groups"] = groups;
  return j;
}

int cmd_km(const Params& p) {
  RunManifest m("km", p);
  const GroupedSurvival g = grouped_survival(p, m, false);
  std::ostringstream csv_out;
  csv_out << "group,time,survival,ci_lo,ci_hi,at_risk,n_events,n_censored\n";
  Json groups = Json::array();
  for (std::size_t k = 0; k < g.names.size(); ++k) {
    const KMCurve km = kaplan_meier(g.records[k], p.alpha);
    Json j;
    j["group"] = g.names[k];
    j["n"] = g.records[k].size();
    std::size_t events = 0;
    for (const auto& r : g.records[k]) events += r.event ? 1 : 0;
    j["n_events"] = events;
    std::optional<double> median;
    for (std::size_t i = 0; i < km.times.size(); ++i) {
      csv_out << csv::escape(g.names[k]) << ',' << csv::format_double(km.times[i]) << ','
              << csv::format_double(km.survival[i]) << ',' << csv::format_double(km.ci_lo[i]) << ','
              << csv::format_double(km.ci_hi[i]) << ',' << km.at_risk[i] << ',' << km.n_events[i]
              << ',' << km.n_censored[i] << '\n';
      if (!median && km.survival[i] <= 0.5) median = km.times[i];
    }
    put(j, "median_days", median, "survival stays above 0.5");
    Json marks = Json::array();
    for (int year = 1; year <= 5; ++year) {
      const double t = 365.0 * year;
      Json e;
      e["day"] = t;
      if (km.times.empty() || t > km.times.back()) {
        e["survival"] = nullptr;
        e["survival_null_reason"] = "beyond last follow-up";
      } else {
        const auto it = std::upper_bound(km.times.begin(), km.times.end(), t);
        if (it == km.times.begin()) {
          e["survival"] = 1.0;
          e["ci"] = {1.0, 1.0};
        } else {
          const auto i = static_cast<std::size_t>(it - km.times.begin() - 1);
          e["survival"] = num(km.survival[i]);
          e["ci"] = {num(km.ci_lo[i]), num(km.ci_hi[i])};
        }
      }
      marks.push_back(e);
    }
    j["survival_at"] = marks;
    groups.push_back(j);
  }
  Json out;
  out["groups"] = groups;
  if (g.names.size() >= 2) {
    out["logrank"] = logrank_json(g);
  } else {
    out["logrank"] = nullptr;
    out["logrank_null_reason"] = "fewer than two groups";
  }
  write_text(out_path(p, "km.csv"), csv_out.str());
  write_json(out_path(p, "km.json"), out, m);
  return kOk;
}

int cmd_logrank(const Params& p) {
  RunManifest m("logrank", p);
  const GroupedSurvival g = grouped_survival(p, m, true);
  if (g.names.size() < 2) fail(ErrorKind::Precondition, "log-rank test needs at least two groups");
  Json out;
  out["logrank"] = logrank_json(g);
  write_json(out_path(p, "logrank.json"), out, m);
  return kOk;
}

// ----------------------------------------------------------------------- cox

Json cox_json(const CoxModel& c) {
  Json j;
  j["n"] = c.n;
  j["n_events"] = c.n_events;
  j["iterations"] = c.iterations;
  j["log_partial_likelihood"] = num(c.log_partial_likelihood);
  j["null_log_partial_likelihood"] = num(c.null_log_partial_likelihood);
  j["lrt"] = {{"statistic", num(c.lrt_statistic)}, {"df", c.lrt_df}, {"p", num(c.lrt_p)}};
  Json coefs = Json::array();
  for (std::size_t i = 0; i < c.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    Json e;
    e["name"] = c.names[i];
    e["beta"] = num(c.coefficients(k));
    e["se"] = num(c.se(k));
    e["hazard_ratio"] = num(c.hazard_ratios(k));
    e["ci_lo"] = num(c.hr_ci_lo(k));
    e["ci_hi"] = num(c.hr_ci_hi(k));
    e["p"] = num(c.wald_p(k));
    coefs.push_back(e);
  }
  j["coefficients"] = coefs;
  return j;
}

int cmd_cox(const Params& p) {
  RunManifest m("cox", p);
  if (p.covariates.empty()) fail(ErrorKind::InvalidInput, "missing required option --covariates");
  m.extra()["covariates"] = p.covariates;
  m.extra()["standardize"] = p.standardize;
  m.extra()["ties"] = p.ties;
  CoxOptions options;
  options.alpha = p.alpha;
  if (p.ties == "breslow") {
    options.ties = CoxTies::Breslow;
  } else if (p.ties != "efron") {
    fail(ErrorKind::InvalidInput, "unknown --ties " + p.ties);
  }

  const auto labels = read_labels(p, m);
  m.add_input("risk_factors", need(p.risk_factors, "--risk-factors"));
  const auto factors = io::join_risk_factors(labels, io::load_risk_factors(p.risk_factors).records);
  std::map<EyeKey, Prediction> base;
  if (!p.scores.empty()) base = io::baseline_scores(read_scores(p.scores, m));
  const bool wants_score =
      std::find(p.covariates.begin(), p.covariates.end(), "score") != p.covariates.end();
  if (wants_score && p.scores.empty()) {
    fail(ErrorKind::InvalidInput, "covariate 'score' needs --scores");
  }

  std::vector<RiskFactorRecord> records;
  std::vector<SurvivalRecord> surv;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!factors[i] || !labels[i].survival) continue;
    RiskFactorRecord r = clean_risk_factors(*factors[i]);
    if (wants_score) {
      const auto it = base.find({labels[i].patient_id, labels[i].side});
      if (it == base.end()) continue;
      r.extra_numeric["score"] = it->second.score;
    }
    records.push_back(std::move(r));
    surv.push_back(*labels[i].survival);
  }

  auto fit = [&](const std::vector<std::string>& covs, const std::vector<std::string>& stdz) {
    const DesignLayout layout = fit_design_layout(records, covs, stdz);
    const CovariateMatrix x = apply_design_layout(layout, records);
    std::vector<double> durations;
    std::unique_ptr<bool[]> events(new bool[x.rows()]);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      durations.push_back(surv[x.source_rows[r]].duration_days);
      events[r] = surv[x.source_rows[r]].event;
    }
    const std::span<const bool> ev(events.get(), x.rows());
    CoxModel model = cox_fit(durations, ev, x, options);
    const ScoreTest st = cox_score_test(durations, ev, x.values, options.ties);
    Json j = cox_json(model);
    j["score_test"] = {{"statistic", num(st.statistic)}, {"df", st.df}, {"p", num(st.p)}};
    return j;
  };

  Json out;
  out["multivariable"] = fit(p.covariates, p.standardize);
  if (p.univariable) {
    std::vector<Json> uni(p.covariates.size());
    parallel_for(p.covariates.size(), p.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        std::vector<std::string> stdz;
        const auto& c = p.covariates[i];
        if (std::find(p.standardize.begin(), p.standardize.end(), c) != p.standardize.end()) {
          stdz.push_back(c);
        }
        try {
          uni[i] = fit({c}, stdz);
        } catch (const Error& err) {
          uni[i] = Json{{"error", err.what()}, {"error_kind", std::string(to_string(err.kind()))}};
        }
        uni[i]["covariate"] = c;
      }
    });
    out["univariable"] = uni;
  }

  std::ostringstream csv_out;
  csv_out << "name,beta,se,hazard_ratio,ci_lo,ci_hi,p\n";
  for (const auto& c : out["multivariable"]["coefficients"]) {
    csv_out << csv::escape(c["name"].get<std::string>());
    for (const char* key : {"beta", "se", "hazard_ratio", "ci_lo", "ci_hi", "p"}) {
      csv_out << ',' << (c[key].is_null() ? std::string() : csv::format_double(c[key].get<double>()));
    }
    csv_out << '\n';
  }
  write_text(out_path(p, "cox.csv"), csv_out.str());
  write_json(out_path(p, "cox.json"), out, m);
  return kOk;
}

// ------------------------------------------------------------- logit-compare

Json optional_auc(const std::optional<AUCResult>& a) {
  return a ? auc_json(*a) : Json(nullptr);
}

int cmd_logit_compare(const Params& p) {
  RunManifest m("logit-compare", p);
  if (p.factor_sets.empty()) fail(ErrorKind::InvalidInput, "missing required option --factors");
  m.extra()["factors"] = p.factor_sets;
  m.add_input("dev", need(p.dev, "--dev"));
  m.add_input("val", need(p.val, "--val"));
  const auto dev = io::load_analysis(p.dev);
  const auto val = io::load_analysis(p.val);
  const auto rows = run_experiments(dev, val, p.factor_sets, p.alpha, p.threads);
  Json list = Json::array();
  std::ostringstream csv_out;
  csv_out << "factors,n_dev,events_dev,n_val,events_val,auc_factors,auc_factors_lo,auc_factors_hi,"
             "auc_score,auc_score_lo,auc_score_hi,auc_combined,auc_combined_lo,auc_combined_hi,error\n";
  for (const auto& r : rows) {
    Json j;
    j["factors"] = r.factors;
    j["n_dev"] = r.n_dev;
    j["events_dev"] = r.events_dev;
    j["n_val"] = r.n_val;
    j["events_val"] = r.events_val;
    j["auc_factors"] = optional_auc(r.auc_factors);
    j["auc_score"] = optional_auc(r.auc_score);
    j["auc_combined"] = optional_auc(r.auc_combined);
    if (!r.error.empty()) j["null_reason"] = r.error;
    list.push_back(j);
    std::string joined;
    for (const auto& f : r.factors) joined += (joined.empty() ? "" : "+") + f;
    csv_out << csv::escape(joined) << ',' << r.n_dev << ',' << r.events_dev << ',' << r.n_val << ','
            << r.events_val;
    for (const auto* a : {&r.auc_factors, &r.auc_score, &r.auc_combined}) {
      if (*a) {
        csv_out << ',' << csv::format_double((*a)->auc) << ',' << csv::format_double((*a)->ci_lo)
                << ',' << csv::format_double((*a)->ci_hi);
      } else {
        csv_out << ",,,";
      }
    }
    csv_out << ',' << csv::escape(r.error) << '\n';
  }
  Json out;
  out["rows"] = list;
  write_text(out_path(p, "logit_compare.csv"), csv_out.str());
  write_json(out_path(p, "logit-compare.json"), out, m);
  return kOk;
}

// ------------------------------------------------------------------ leadtime

int cmd_leadtime(const Params& p) {
  RunManifest m("leadtime", p);
  std::optional<long long> epoch;
  const Cohort cohort = read_cohort(p, m, &epoch);
  m.add_input("scores", need(p.scores, "--scores"));
  const auto scores = io::load_scores(p.scores, epoch).rows;
  const LabelTable table = label_cohort(cohort, p.threshold, p.horizon, p.threads);
  std::map<EyeKey, EyeOutcome> outcomes;
  for (const auto& row : table.rows) {
    if (row.survival) outcomes[{row.patient_id, row.side}] = {row.baseline_day, *row.survival};
  }
  const auto buckets = lead_time_summary(PredictionSet(scores), outcomes);
  std::ostringstream csv_out;
  csv_out << "years_before_event,n,q1,median,q3\n";
  Json list = Json::array();
  for (const auto& b : buckets) {
    csv_out << b.years_before_event << ',' << b.n << ',' << csv::format_double(b.q1) << ','
            << csv::format_double(b.median) << ',' << csv::format_double(b.q3) << '\n';
    list.push_back({{"years_before_event", b.years_before_event},
                    {"n", b.n},
                    {"q1", num(b.q1)},
                    {"median", num(b.median)},
                    {"q3", num(b.q3)}});
  }
  Json out;
  out["buckets"] = list;
  write_text(out_path(p, "leadtime.csv"), csv_out.str());
  write_json(out_path(p, "leadtime.json"), out, m);
  return kOk;
}

// ------------------------------------------------------------------ simulate

SimConfig effective_config(const Params& p, RunManifest& m) {
  SimConfig config;
  if (!p.config.empty()) {
    m.add_input("config", p.config);
    std::ifstream in(p.config);
    if (!in) fail(ErrorKind::InvalidInput, "cannot read " + p.config);
    std::stringstream buf;
    buf << in.rdbuf();
    config = sim_config_from_json(buf.str());
  }
  if (p.seed_given) config.seed = p.seed;
  if (p.n_patients) config.n_patients = *p.n_patients;
  config.validate();
  return config;
}

int cmd_simulate(const Params& p) {
  RunManifest m("simulate", p);
  const SimConfig config = effective_config(p, m);
  m.extra()["config"] = Json::parse(sim_config_to_json(config));
  simulate_to_directory(config, p.out_dir, p.threads);
  Json out;
  out["n_patients"] = config.n_patients;
  out["n_eyes"] = config.n_patients * static_cast<std::size_t>(config.eyes_per_patient);
  Json files = Json::array();
  for (const char* f : {"visits.csv", "scores.csv", "risk_factors.csv", "ground_truth.json"}) {
    files.push_back({{"file", f}, {"sha256", sha256_file(out_path(p, f))}});
  }
  out["files"] = files;
  write_json(out_path(p, "simulate.json"), out, m);
  return kOk;
}

// --------------------------------------------------------------------- check

int cmd_check(const Params& p) {
  RunManifest m("check", p);
  const std::filesystem::path dir(p.sim_dir.empty() ? p.out_dir : p.sim_dir);
  const std::string truth_path = (dir / "ground_truth.json").string();
  const std::string visits_path = (dir / "visits.csv").string();
  const std::string scores_path = (dir / "scores.csv").string();
  m.add_input("ground_truth", truth_path);
  m.add_input("visits", visits_path);
  m.add_input("scores", scores_path);
  const GroundTruth truth = load_ground_truth(truth_path);
  const io::VisitsData visits = io::load_visits(visits_path, GradingProtocol::EyePacsModifiedEtdrs);
  const auto scores = io::load_scores(scores_path, visits.epoch_days).rows;
  const CheckReport report = analytic_checks(truth, visits.cohort, scores, p.horizon);
  Json items = Json::array();
  for (const auto& c : report.items) {
    Json j;
    j["name"] = c.name;
    j["status"] = c.skipped ? "skipped" : (c.passed ? "pass" : "fail");
    if (c.skipped) {
      j["statistic"] = nullptr;
      j["statistic_null_reason"] = c.detail;
    } else {
      j["statistic"] = num(c.statistic);
      j["threshold"] = num(c.threshold);
    }
    j["detail"] = c.detail;
    items.push_back(j);
    std::cerr << (c.skipped ? "SKIP " : (c.passed ? "PASS " : "FAIL ")) << c.name << ": "
              << c.detail << '\n';
  }
  Json out;
  out["all_passed"] = report.all_passed();
  out["items"] = items;
  write_json(out_path(p, "check.json"), out, m);
  return report.all_passed() ? kOk : kCheckFailed;
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput:
      return kInputError;
    case ErrorKind::NonConvergence:
      return kNonConvergence;
    case ErrorKind::Precondition:
    case ErrorKind::Degenerate:
    case ErrorKind::Separation:
    case ErrorKind::Collinearity:
      return kPreconditionError;
  }
  return kInputError;
}

int run_command(const std::string& name, const Params& params) {
  params.horizon.validate();
  if (!(params.alpha > 0.0 && params.alpha < 1.0)) {
    fail(ErrorKind::InvalidInput, "--alpha must be in (0, 1)");
  }
  static const std::map<std::string, int (*)(const Params&)> table = {
      {"validate", cmd_validate},
      {"select-eyes", cmd_select_eyes},
      {"label", cmd_label},
      {"eval-auc", cmd_eval_auc},
      {"eval-calibration", cmd_eval_calibration},
      {"eval-ppv-npv", cmd_eval_ppv_npv},
      {"recalibrate", cmd_recalibrate},
      {"risk-groups", cmd_risk_groups},
      {"km", cmd_km},
      {"logrank", cmd_logrank},
      {"cox", cmd_cox},
      {"logit-compare", cmd_logit_compare},
      {"leadtime", cmd_leadtime},
      {"simulate", cmd_simulate},
      {"check", cmd_check},
      {"run", run_pipeline},
  };
  const auto it = table.find(name);
  if (it == table.end()) fail(ErrorKind::InvalidInput, "unknown subcommand " + name);
  return it->second(params);
}

}  // namespace retinarisk::cli
