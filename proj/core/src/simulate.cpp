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

#include "retinarisk/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <map>
#include <memory>

#include <json.hpp>

#include "retinarisk/csv.hpp"
#include "retinarisk/error.hpp"
#include "retinarisk/io.hpp"
#include "retinarisk/parallel.hpp"
#include "retinarisk/random.hpp"
#include "retinarisk/regression.hpp"
#include "retinarisk/special_functions.hpp"
#include "retinarisk/survival.hpp"

namespace retinarisk {

using nlohmann::json;

namespace {

constexpr double kDaysPerYear = 365.25;
constexpr std::size_t kBlockSize = 4096;

double normal01(Rng& rng) {
  // Box-Muller on our own uniforms keeps draws identical across toolchains.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double exponential(Rng& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

double round1(double x) { return std::round(x * 10.0) / 10.0; }

std::string patient_id(std::size_t index, std::size_t n) {
  std::size_t width = 6;
  for (std::size_t m = n; m >= 1000000; m /= 10) ++width;
  std::string digits = std::to_string(index + 1);
  return "P" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

DiabeticControl control_from_hba1c(double value) {
  if (value < 6.5) return DiabeticControl::Excellent;
  if (value < 7.5) return DiabeticControl::Good;
  if (value < 8.5) return DiabeticControl::Moderate;
  if (value < 9.5) return DiabeticControl::Fair;
  return DiabeticControl::Poor;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

PatientSample simulate_patient(const SimConfig& c, std::size_t index) {
  Rng rng(substream_seed(c.seed, index));
  PatientSample out;
  const std::string pid = patient_id(index, c.n_patients);

  // Patient-level covariates.
  const double hba1c = std::clamp(round1(c.hba1c_center * std::exp(c.hba1c_log_sd * normal01(rng))),
                                  4.0, 16.0);
  const double years = round1(1.0 + 19.0 * uniform01(rng));
  const bool insulin = bernoulli(rng, c.insulin_prob);
  const double age = std::round(30.0 + 50.0 * uniform01(rng));
  const bool female = bernoulli(rng, 0.5);
  const bool hypertension = bernoulli(rng, 0.4);
  const DiabeticControl control = control_from_hba1c(hba1c + 0.5 * normal01(rng));
  const bool hba1c_missing = bernoulli(rng, c.hba1c_missing_prob);
  const bool control_missing = bernoulli(rng, c.control_missing_prob);

  RiskFactorRecord& rf = out.risk_factors;
  rf.patient_id = pid;
  rf.age = age;
  rf.sex = female ? "F" : "M";
  if (!hba1c_missing) rf.hba1c = hba1c;
  rf.years_with_diabetes = years;
  if (!control_missing) rf.diabetic_control = control;
  rf.insulin_use = insulin;
  rf.hypertension = hypertension;

  // Visit schedule shared by both eyes.
  const double dropout_day =
      c.dropout_rate > 0.0 ? exponential(rng, c.dropout_rate) * kDaysPerYear : 1e18;
  const int censor_cap = static_cast<int>(std::min<double>(c.max_followup_days, std::floor(dropout_day)));
  std::vector<int> schedule = {0};
  double t = 0.0;
  for (;;) {
    t += c.visit_interval_mean_days +
         c.visit_interval_jitter_days * (2.0 * uniform01(rng) - 1.0);
    const int day = static_cast<int>(std::lround(t));
    if (day > censor_cap) break;
    if (day > schedule.back()) schedule.push_back(day);
  }

  const double covariate_part = c.coefficients.hba1c * (hba1c - c.hba1c_center) +
                                c.coefficients.years_with_diabetes * (years - c.years_center) +
                                c.coefficients.insulin_use * (insulin ? 1.0 : 0.0);

  for (int e = 0; e < c.eyes_per_patient; ++e) {
    EyeTruth truth;
    truth.patient_id = pid;
    truth.side = e == 0 ? EyeSide::OD : EyeSide::OS;
    truth.frailty = normal01(rng);
    truth.log_hazard = c.baseline_log_hazard + covariate_part + c.coefficients.frailty * truth.frailty;
    truth.hba1c = hba1c;
    truth.years_with_diabetes = years;
    truth.insulin_use = insulin;
    truth.censor_day = schedule.back();
    const double rate = std::exp(truth.log_hazard);
    truth.conversion_day = exponential(rng, rate) * kDaysPerYear;
    truth.moderate_day = truth.conversion_day + exponential(rng, c.rate_mild_to_moderate) * kDaysPerYear;
    truth.severe_day = truth.moderate_day + exponential(rng, c.rate_moderate_to_severe) * kDaysPerYear;
    const double proliferative_day =
        truth.severe_day + exponential(rng, c.rate_severe_to_proliferative) * kDaysPerYear;

    EyeRecord eye;
    eye.patient_id = pid;
    eye.side = truth.side;
    for (const int day : schedule) {
      Visit v;
      v.day = day;
      v.gradable = bernoulli(rng, c.gradable_prob);
      const double noise = normal01(rng);
      if (v.gradable) {
        const double d = day;
        DRGrade g = DRGrade::NoDR;
        if (d >= proliferative_day) {
          g = DRGrade::Proliferative;
        } else if (d >= truth.severe_day) {
          g = DRGrade::Severe;
        } else if (d >= truth.moderate_day) {
          g = DRGrade::Moderate;
        } else if (d >= truth.conversion_day) {
          g = DRGrade::Mild;
        }
        v.grade = g;
        v.dme = false;
        const double years_until = std::max(0.0, (truth.conversion_day - d) / kDaysPerYear);
        const double seen = truth.log_hazard - (1.0 - c.score_covariate_weight) * covariate_part;
        const double logit = c.score_intercept + c.score_slope * seen +
                             c.lead_slope * std::exp(-years_until) + c.score_noise_sd * noise;
        Prediction p;
        p.key = {pid, truth.side, day};
        // Scores are published with six decimals; round here so that the
        // in-memory and on-disk cohorts agree exactly.
        p.score = std::round(sigmoid(logit) * 1e6) / 1e6;
        out.scores.push_back(std::move(p));
      }
      eye.visits.push_back(v);
    }
    out.eyes.push_back(std::move(eye));
    out.truth.push_back(std::move(truth));
  }
  return out;
}

json config_json(const SimConfig& c) {
  return json{
      {"n_patients", c.n_patients},
      {"eyes_per_patient", c.eyes_per_patient},
      {"visit_interval_mean_days", c.visit_interval_mean_days},
      {"visit_interval_jitter_days", c.visit_interval_jitter_days},
      {"max_followup_days", c.max_followup_days},
      {"dropout_rate", c.dropout_rate},
      {"baseline_log_hazard", c.baseline_log_hazard},
      {"coefficients",
       {{"hba1c", c.coefficients.hba1c},
        {"years_with_diabetes", c.coefficients.years_with_diabetes},
        {"insulin_use", c.coefficients.insulin_use},
        {"frailty", c.coefficients.frailty}}},
      {"hba1c_center", c.hba1c_center},
      {"years_center", c.years_center},
      {"hba1c_log_sd", c.hba1c_log_sd},
      {"insulin_prob", c.insulin_prob},
      {"hba1c_missing_prob", c.hba1c_missing_prob},
      {"control_missing_prob", c.control_missing_prob},
      {"rate_mild_to_moderate", c.rate_mild_to_moderate},
      {"rate_moderate_to_severe", c.rate_moderate_to_severe},
      {"rate_severe_to_proliferative", c.rate_severe_to_proliferative},
      {"score_intercept", c.score_intercept},
      {"score_slope", c.score_slope},
      {"score_covariate_weight", c.score_covariate_weight},
      {"score_noise_sd", c.score_noise_sd},
      {"lead_slope", c.lead_slope},
      {"gradable_prob", c.gradable_prob},
      {"seed", c.seed},
  };
}

SimConfig config_from(const json& j) {
  SimConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("n_patients", c.n_patients);
  get("eyes_per_patient", c.eyes_per_patient);
  get("visit_interval_mean_days", c.visit_interval_mean_days);
  get("visit_interval_jitter_days", c.visit_interval_jitter_days);
  get("max_followup_days", c.max_followup_days);
  get("dropout_rate", c.dropout_rate);
  get("baseline_log_hazard", c.baseline_log_hazard);
  if (j.contains("coefficients")) {
    const json& k = j.at("coefficients");
    if (k.contains("hba1c")) k.at("hba1c").get_to(c.coefficients.hba1c);
    if (k.contains("years_with_diabetes")) k.at("years_with_diabetes").get_to(c.coefficients.years_with_diabetes);
    if (k.contains("insulin_use")) k.at("insulin_use").get_to(c.coefficients.insulin_use);
    if (k.contains("frailty")) k.at("frailty").get_to(c.coefficients.frailty);
  }
  get("hba1c_center", c.hba1c_center);
  get("years_center", c.years_center);
  get("hba1c_log_sd", c.hba1c_log_sd);
  get("insulin_prob", c.insulin_prob);
  get("hba1c_missing_prob", c.hba1c_missing_prob);
  get("control_missing_prob", c.control_missing_prob);
  get("rate_mild_to_moderate", c.rate_mild_to_moderate);
  get("rate_moderate_to_severe", c.rate_moderate_to_severe);
  get("rate_severe_to_proliferative", c.rate_severe_to_proliferative);
  get("score_intercept", c.score_intercept);
  get("score_slope", c.score_slope);
  get("score_covariate_weight", c.score_covariate_weight);
  get("score_noise_sd", c.score_noise_sd);
  get("lead_slope", c.lead_slope);
  get("gradable_prob", c.gradable_prob);
  get("seed", c.seed);
  return c;
}

}  // namespace

double EyeTruth::hazard_per_day() const { return std::exp(log_hazard) / kDaysPerYear; }

void SimConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::InvalidInput, std::string("simulation config: ") + what);
  };
  require(eyes_per_patient == 1 || eyes_per_patient == 2, "eyes_per_patient must be 1 or 2");
  require(visit_interval_mean_days >= 1.0, "visit_interval_mean_days must be >= 1");
  require(visit_interval_jitter_days >= 0.0 && visit_interval_jitter_days < visit_interval_mean_days,
          "jitter must be smaller than the visit interval");
  require(max_followup_days > 0, "max_followup_days must be positive");
  require(dropout_rate >= 0.0, "dropout_rate must be >= 0");
  require(rate_mild_to_moderate > 0.0 && rate_moderate_to_severe > 0.0 &&
              rate_severe_to_proliferative > 0.0,
          "stage progression rates must be positive");
  require(gradable_prob > 0.0 && gradable_prob <= 1.0, "gradable_prob must be in (0, 1]");
  require(insulin_prob >= 0.0 && insulin_prob <= 1.0, "insulin_prob must be in [0, 1]");
  require(hba1c_missing_prob >= 0.0 && hba1c_missing_prob <= 1.0, "hba1c_missing_prob must be in [0, 1]");
  require(control_missing_prob >= 0.0 && control_missing_prob <= 1.0,
          "control_missing_prob must be in [0, 1]");
  require(score_covariate_weight >= 0.0 && score_covariate_weight <= 1.0,
          "score_covariate_weight must be in [0, 1]");
  require(score_noise_sd >= 0.0 && hba1c_log_sd >= 0.0, "standard deviations must be >= 0");
  require(std::isfinite(baseline_log_hazard) && std::isfinite(score_slope) &&
              std::isfinite(score_intercept) && std::isfinite(lead_slope),
          "coefficients must be finite");
}

SimConfig sim_config_from_json(const std::string& text) {
  try {
    SimConfig c = config_from(json::parse(text));
    c.validate();
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("simulation config: ") + e.what());
  }
}

std::string sim_config_to_json(const SimConfig& config) { return config_json(config).dump(2); }

void simulate_stream(const SimConfig& config, const std::function<void(PatientSample&&)>& sink,
                     unsigned threads) {
  config.validate();
  std::vector<PatientSample> block;
  for (std::size_t start = 0; start < config.n_patients; start += kBlockSize) {
    const std::size_t count = std::min(kBlockSize, config.n_patients - start);
    block.assign(count, PatientSample{});
    parallel_for(count, threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) block[i] = simulate_patient(config, start + i);
    });
    for (auto& p : block) sink(std::move(p));
  }
}

SimulationOutput simulate(const SimConfig& config, unsigned threads) {
  SimulationOutput out;
  out.truth.config = config;
  out.cohort.protocol = GradingProtocol::EyePacsModifiedEtdrs;
  simulate_stream(
      config,
      [&](PatientSample&& p) {
        for (auto& e : p.eyes) out.cohort.eyes.push_back(std::move(e));
        for (auto& s : p.scores) out.scores.push_back(std::move(s));
        out.risk_factors.push_back(std::move(p.risk_factors));
        for (auto& t : p.truth) out.truth.eyes.push_back(std::move(t));
      },
      threads);
  return out;
}

void simulate_to_directory(const SimConfig& config, const std::string& out_dir, unsigned threads) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  std::ofstream visits(dir / "visits.csv", std::ios::binary);
  std::ofstream scores(dir / "scores.csv", std::ios::binary);
  std::ofstream factors(dir / "risk_factors.csv", std::ios::binary);
  std::ofstream truth(dir / "ground_truth.json", std::ios::binary);
  if (!visits || !scores || !factors || !truth) {
    fail(ErrorKind::InvalidInput, "cannot write simulation output to " + out_dir);
  }
  visits << "patient_id,eye,visit_day,gradable,dr_grade,dme\n";
  scores << "patient_id,eye,visit_day,score\n";
  factors << "patient_id,eye,age,sex,hba1c,years_with_diabetes,diabetic_control,insulin_use,"
             "hypertension\n";
  truth << "{\n\"config\": " << config_json(config).dump() << ",\n\"eyes\": [\n";
  bool first_truth = true;

  simulate_stream(
      config,
      [&](PatientSample&& p) {
        std::ostringstream v, s, f, g;
        Cohort c;
        c.eyes = std::move(p.eyes);
        std::ostringstream tmp;
        io::write_visits(tmp, c);
        const std::string text = tmp.str();
        v << text.substr(text.find('\n') + 1);
        for (const auto& sc : p.scores) {
          s << sc.key.patient_id << ',' << to_string(sc.key.side) << ',' << sc.key.visit_day << ','
            << csv::format_fixed(sc.score, 6) << '\n';
        }
        const auto& r = p.risk_factors;
        f << r.patient_id << ",," << csv::format_double(*r.age) << ',' << *r.sex << ',';
        if (r.hba1c) f << csv::format_fixed(*r.hba1c, 1);
        f << ',' << csv::format_fixed(*r.years_with_diabetes, 1) << ',';
        if (r.diabetic_control) f << to_string(*r.diabetic_control);
        f << ',' << (*r.insulin_use ? 1 : 0) << ',' << (*r.hypertension ? 1 : 0) << '\n';
        for (const auto& t : p.truth) {
          g << (first_truth ? "" : ",\n");
          first_truth = false;
          g << "{\"patient_id\":\"" << t.patient_id << "\",\"eye\":\"" << to_string(t.side)
            << "\",\"conversion_day\":" << csv::format_double(t.conversion_day)
            << ",\"moderate_day\":" << csv::format_double(t.moderate_day)
            << ",\"severe_day\":" << csv::format_double(t.severe_day)
            << ",\"log_hazard\":" << csv::format_double(t.log_hazard)
            << ",\"frailty\":" << csv::format_double(t.frailty) << ",\"censor_day\":" << t.censor_day
            << ",\"hba1c\":" << csv::format_double(t.hba1c)
            << ",\"years_with_diabetes\":" << csv::format_double(t.years_with_diabetes)
            << ",\"insulin_use\":" << (t.insulin_use ? "true" : "false") << "}";
        }
        visits << v.str();
        scores << s.str();
        factors << f.str();
        truth << g.str();
      },
      threads);
  truth << "\n]\n}\n";
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open " + path);
  try {
    const json j = json::parse(in);
    GroundTruth g;
    g.config = config_from(j.at("config"));
    for (const auto& e : j.at("eyes")) {
      EyeTruth t;
      t.patient_id = e.at("patient_id").get<std::string>();
      const auto side = side_from_string(e.at("eye").get<std::string>());
      if (!side) fail(ErrorKind::InvalidInput, path + ": bad eye in ground truth");
      t.side = *side;
      t.conversion_day = e.at("conversion_day").get<double>();
      t.moderate_day = e.at("moderate_day").get<double>();
      t.severe_day = e.at("severe_day").get<double>();
      t.log_hazard = e.at("log_hazard").get<double>();
      t.frailty = e.at("frailty").get<double>();
      t.censor_day = e.at("censor_day").get<int>();
      t.hba1c = e.at("hba1c").get<double>();
      t.years_with_diabetes = e.at("years_with_diabetes").get<double>();
      t.insulin_use = e.at("insulin_use").get<bool>();
      g.eyes.push_back(std::move(t));
    }
    return g;
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidInput, path + ": " + e.what());
  }
}

// ------------------------------------------------------------ verification

bool CheckReport::all_passed() const {
  return std::all_of(items.begin(), items.end(),
                     [](const CheckItem& c) { return c.passed || c.skipped; });
}

OutcomeProbabilities outcome_probabilities(const std::vector<int>& relative_days,
                                           double hazard_per_day, const HorizonSpec& spec) {
  const int late = spec.horizon_days + spec.buffer_days;
  const int early = spec.horizon_days - spec.buffer_days;
  // Positive iff onset precedes the last visit inside the window; Negative iff
  // onset also follows the first visit at or after the early edge.
  int last_in_window = 0;
  std::optional<int> first_late;
  for (int d : relative_days) {
    if (d <= late) last_in_window = std::max(last_in_window, d);
    if (d >= early && (!first_late || d < *first_late)) first_late = d;
  }
  OutcomeProbabilities p;
  p.positive = -std::expm1(-hazard_per_day * last_in_window);
  if (first_late) {
    p.negative = std::exp(-hazard_per_day * std::max(last_in_window, *first_late));
  }
  return p;
}

namespace {

CheckItem check_item(std::string name, bool passed, double statistic, double threshold,
                     std::string detail) {
  CheckItem c;
  c.name = std::move(name);
  c.passed = passed;
  c.statistic = statistic;
  c.threshold = threshold;
  c.detail = std::move(detail);
  return c;
}

CheckItem skipped_item(std::string name, std::string detail) {
  CheckItem c;
  c.name = std::move(name);
  c.skipped = true;
  c.detail = std::move(detail);
  return c;
}

}  // namespace

CheckReport analytic_checks(const GroundTruth& truth, const Cohort& cohort,
                            const std::vector<Prediction>& scores, const HorizonSpec& spec) {
  spec.validate();
  CheckReport report;
  std::map<EyeKey, const EyeTruth*> by_eye;
  for (const auto& t : truth.eyes) by_eye[{t.patient_id, t.side}] = &t;

  // Conversion is never observed before it happens.
  {
    std::size_t checked = 0, violations = 0;
    for (const auto& eye : cohort.eyes) {
      const auto it = by_eye.find({eye.patient_id, eye.side});
      if (it == by_eye.end()) continue;
      for (const auto& v : eye.visits) {
        if (v.gradable && v.grade && *v.grade >= DRGrade::Mild) {
          ++checked;
          if (it->second->conversion_day > v.day) ++violations;
          break;
        }
      }
    }
    report.items.push_back(check_item("conversion_precedes_first_mild_visit", violations == 0,
                                      static_cast<double>(violations), 0.0,
                                      std::to_string(checked) + " eyes with an observed conversion"));
  }

  const Cohort included = inclusion_filter(cohort, DRGrade::Mild);
  const LabelTable labels = label_cohort(included, OutcomeThreshold::MildPlus, spec);

  // Labels agree with the planted onset times.
  std::size_t inconsistent = 0;
  double expected_pos = 0.0, var_pos = 0.0;
  std::size_t observed_pos = 0;
  std::size_t matched = 0;
  std::vector<double> durations;
  std::vector<char> events;
  std::vector<double> hazards;
  std::vector<double> followups;
  {
    std::map<EyeKey, const EyeRecord*> eyes;
    for (const auto& e : included.eyes) eyes[{e.patient_id, e.side}] = &e;
    for (const auto& row : labels.rows) {
      if (!row.outcome) continue;
      const auto it = by_eye.find({row.patient_id, row.side});
      if (it == by_eye.end()) continue;
      const EyeTruth& t = *it->second;
      ++matched;
      const double onset = t.conversion_day - row.baseline_day;
      if (*row.outcome == OutcomeLabel::Positive &&
          onset > spec.horizon_days + spec.buffer_days) {
        ++inconsistent;
      }
      if (*row.outcome == OutcomeLabel::Negative && onset <= spec.horizon_days - spec.buffer_days) {
        ++inconsistent;
      }
      std::vector<int> rel;
      for (const auto& v : eyes.at({row.patient_id, row.side})->visits) {
        if (v.gradable) rel.push_back(v.day - row.baseline_day);
      }
      const auto p = outcome_probabilities(rel, t.hazard_per_day(), spec);
      expected_pos += p.positive;
      var_pos += p.positive * (1.0 - p.positive);
      if (*row.outcome == OutcomeLabel::Positive) ++observed_pos;

      // Ground-truth survival for KM / Cox, on the baseline time axis.
      const double follow = t.censor_day - row.baseline_day;
      durations.push_back(std::min(onset, follow));
      events.push_back(onset <= follow ? 1 : 0);
      hazards.push_back(t.hazard_per_day());
      followups.push_back(follow);
    }
  }
  report.items.push_back(check_item("labels_consistent_with_truth", inconsistent == 0,
                                    static_cast<double>(inconsistent), 0.0,
                                    std::to_string(matched) + " labelled eyes"));
  if (var_pos > 0.0) {
    const double z = (static_cast<double>(observed_pos) - expected_pos) / std::sqrt(var_pos);
    report.items.push_back(check_item(
        "positive_count_matches_schedule", std::fabs(z) < 4.0, z, 4.0,
        "observed " + std::to_string(observed_pos) + ", expected " + csv::format_fixed(expected_pos, 1)));
  } else {
    report.items.push_back(skipped_item("positive_count_matches_schedule", "no variance"));
  }

  if (durations.size() >= 50) {
    const std::size_t n = durations.size();
    std::unique_ptr<bool[]> ev(new bool[n]);
    for (std::size_t i = 0; i < n; ++i) ev[i] = events[i] != 0;
    const std::span<const bool> ev_span(ev.get(), n);

    // KM of the true onset times versus the planted survival mixture.
    const KMCurve km = kaplan_meier(durations, ev_span);
    const std::size_t min_at_risk = std::max<std::size_t>(50, n / 20);
    double worst = 0.0;
    const std::size_t stride = std::max<std::size_t>(1, km.times.size() / 200);
    for (std::size_t i = 0; i < km.times.size(); i += stride) {
      if (km.at_risk[i] < min_at_risk) break;
      double s_true = 0.0;
      for (double h : hazards) s_true += std::exp(-h * km.times[i]);
      s_true /= static_cast<double>(n);
      worst = std::max(worst, std::fabs(km.survival[i] - s_true));
    }
    const double tol = std::max(0.03, 2.1 / std::sqrt(static_cast<double>(n)));
    report.items.push_back(check_item("km_matches_true_survival", worst < tol, worst, tol,
                                      "max |KM - S_true| while at risk >= " +
                                          std::to_string(min_at_risk)));

    // Cox on the planted covariates recovers the planted coefficients.
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 4);
    std::size_t row = 0;
    for (const auto& lr : labels.rows) {
      if (!lr.outcome) continue;
      const auto it = by_eye.find({lr.patient_id, lr.side});
      if (it == by_eye.end()) continue;
      const EyeTruth& t = *it->second;
      const auto r = static_cast<Eigen::Index>(row++);
      x(r, 0) = t.hba1c;
      x(r, 1) = t.years_with_diabetes;
      x(r, 2) = t.insulin_use ? 1.0 : 0.0;
      x(r, 3) = t.frailty;
    }
    const SimCoefficients& k = truth.config.coefficients;
    const double planted[4] = {k.hba1c, k.years_with_diabetes, k.insulin_use, k.frailty};
    const char* names[4] = {"hba1c", "years_with_diabetes", "insulin_use", "frailty"};
    // 3 SE per coefficient, Bonferroni over the four so the check keeps that error rate
    const double z_max = special::normal_quantile(1.0 - 2.0 * special::normal_sf(3.0) / 8.0);
    try {
      const CoxModel cox = cox_fit(durations, ev_span, x,
                                   {names[0], names[1], names[2], names[3]});
      double worst_z = 0.0;
      std::string detail;
      for (int j = 0; j < 4; ++j) {
        const double z = (cox.coefficients(j) - planted[j]) / cox.se(j);
        worst_z = std::max(worst_z, std::fabs(z));
        detail += std::string(j ? ", " : "") + names[j] + "=" + csv::format_fixed(cox.coefficients(j), 4);
      }
      report.items.push_back(check_item("cox_recovers_planted_coefficients", worst_z < z_max, worst_z, z_max, detail));
    } catch (const Error& e) {
      report.items.push_back(check_item("cox_recovers_planted_coefficients", false, 0.0, z_max, e.what()));
    }

    // Logistic fit on realised H-day outcomes versus the best logistic
    // approximation of the true probabilities for the same eyes.
    std::vector<double> y, p_true;
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < n; ++i) {
      // Eyes followed past H, whatever happened, so selection ignores onset.
      if (followups[i] < spec.horizon_days) continue;
      keep.push_back(static_cast<Eigen::Index>(i));
      y.push_back(events[i] != 0 && durations[i] <= spec.horizon_days ? 1.0 : 0.0);
      p_true.push_back(-std::expm1(-hazards[i] * spec.horizon_days));
    }
    if (keep.size() >= 50) {
      Eigen::MatrixXd xs(static_cast<Eigen::Index>(keep.size()), 4);
      for (std::size_t i = 0; i < keep.size(); ++i) xs.row(static_cast<Eigen::Index>(i)) = x.row(keep[i]);
      try {
        const LogisticModel fitted = logistic_fit(xs, y);
        const LogisticModel target = logistic_fit(xs, p_true);
        double worst_z = 0.0;
        for (int j = 0; j < 4; ++j) {
          worst_z = std::max(worst_z, std::fabs(fitted.coefficients(j) - target.coefficients(j)) / fitted.se(j));
        }
        report.items.push_back(check_item("logistic_recovers_population_coefficients", worst_z < z_max,
                                          worst_z, z_max, std::to_string(keep.size()) + " eyes"));
      } catch (const Error& e) {
        report.items.push_back(check_item("logistic_recovers_population_coefficients", false, 0.0, z_max, e.what()));
      }
    }
  } else {
    report.items.push_back(skipped_item("km_matches_true_survival", "fewer than 50 labelled eyes"));
  }

  // Baseline score discriminates iff the simulator planted a signal.
  try {
    std::vector<LabelRow> rows = labels.rows;
    const PredictionSet preds = io::join_baseline_scores(scores, rows);
    const AUCResult auc = auc_delong(preds);
    const bool signal = truth.config.score_slope != 0.0 || truth.config.lead_slope != 0.0;
    const bool ok = signal ? auc.ci_lo > 0.5 : (auc.ci_lo <= 0.5 && auc.ci_hi >= 0.5);
    report.items.push_back(check_item(signal ? "auc_exceeds_chance" : "auc_consistent_with_chance", ok,
                                      auc.auc, 0.5,
                                      "95% CI [" + csv::format_fixed(auc.ci_lo, 3) + ", " +
                                          csv::format_fixed(auc.ci_hi, 3) + "]"));
  } catch (const Error& e) {
    report.items.push_back(skipped_item("auc_exceeds_chance", e.what()));
  }
  return report;
}

}  // namespace retinarisk
