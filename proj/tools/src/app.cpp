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

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "retinarisk/cli/app.hpp"
#include "retinarisk/parallel.hpp"

#ifndef RETINARISK_VERSION
#define RETINARISK_VERSION "0.0.0"
#endif

namespace retinarisk::cli {

namespace {

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main_entry(int argc, const char* const* argv) {
  CLI::App app{"Diabetic retinopathy endpoint derivation and risk-score evaluation"};
  app.set_version_flag("--version", RETINARISK_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Params p;
  std::string threshold = "mild";
  std::string protocol = "eyepacs";
  auto* seed_opt = app.add_option("--seed", p.seed, "Seed for every random draw");
  app.add_option("--alpha", p.alpha, "Two-sided level of confidence intervals")->capture_default_str();
  app.add_option("--horizon-days", p.horizon.horizon_days, "Outcome horizon H")->capture_default_str();
  app.add_option("--buffer-days", p.horizon.buffer_days, "Tolerance B around the horizon")
      ->capture_default_str();
  app.add_option("--threshold", threshold, "Outcome severity threshold")
      ->check(CLI::IsMember({"mild", "moderate", "vtdr"}))
      ->capture_default_str();
  app.add_option("--protocol", protocol, "Lesion grading protocol")
      ->check(CLI::IsMember({"eyepacs", "thailand"}))
      ->capture_default_str();
  auto* out_opt = app.add_option("--out-dir", p.out_dir, "Output directory")
                      ->envname("RETINARISK_OUT_DIR")
                      ->capture_default_str();
  app.add_option("--threads", p.threads, "Worker threads (0: all cores)")->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Check input files and report diagnostics");
  validate->add_option("--visits", p.visits);
  validate->add_option("--scores", p.scores);
  validate->add_option("--risk-factors", p.risk_factors);

  auto* select = app.add_subcommand("select-eyes", "Keep one random eye per patient");
  select->add_option("--visits", p.visits)->required();

  auto* label = app.add_subcommand("label", "Derive binary and survival endpoints");
  label->add_option("--visits", p.visits)->required();
  label->add_option("--scores", p.scores, "Also write analysis.csv");
  label->add_option("--risk-factors", p.risk_factors);
  label->add_flag("--one-eye", p.one_eye, "Select one eye per patient first");

  auto* auc = app.add_subcommand("eval-auc", "AUC with DeLong confidence interval");
  auc->add_option("--labels", p.labels)->required();
  auc->add_option("--scores", p.scores)->required();
  auc->add_option("--ci", p.ci)->check(CLI::IsMember({"wald", "logit"}))->capture_default_str();

  auto* cal = app.add_subcommand("eval-calibration", "Calibration by equal-count score bins");
  cal->add_option("--labels", p.labels)->required();
  cal->add_option("--scores", p.scores)->required();
  cal->add_option("--bins", p.bins)->capture_default_str();

  const auto quantiles = CLI::IsMember({"linear", "lower", "higher", "nearest"});
  auto* ppv = app.add_subcommand("eval-ppv-npv", "PPV and NPV across score percentiles");
  ppv->add_option("--labels", p.labels)->required();
  ppv->add_option("--scores", p.scores)->required();
  ppv->add_option("--quantile", p.quantile)->check(quantiles)->capture_default_str();

  auto* recal = app.add_subcommand("recalibrate", "Constant-factor recalibration");
  recal->add_option("--labels", p.labels)->required();
  recal->add_option("--scores", p.scores)->required();
  recal->add_option("--fraction", p.fraction, "Calibration subsample fraction")->capture_default_str();

  auto* groups = app.add_subcommand("risk-groups", "Quartile risk groups from a tuning set");
  groups->add_option("--labels", p.labels)->required();
  groups->add_option("--scores", p.scores)->required();
  groups->add_option("--tune-scores", p.tune_scores, "Tuning scores (default: evaluation scores)");
  groups->add_option("--quantile", p.quantile)->check(quantiles)->capture_default_str();

  auto* km = app.add_subcommand("km", "Kaplan-Meier curves");
  km->add_option("--labels", p.labels)->required();
  km->add_option("--groups", p.groups, "groups.csv from risk-groups");

  auto* lr = app.add_subcommand("logrank", "Log-rank test across groups");
  lr->add_option("--labels", p.labels)->required();
  lr->add_option("--groups", p.groups)->required();

  auto* cox = app.add_subcommand("cox", "Cox proportional hazards model");
  cox->add_option("--labels", p.labels)->required();
  cox->add_option("--risk-factors", p.risk_factors)->required();
  cox->add_option("--scores", p.scores, "Needed for the 'score' covariate");
  cox->add_option("--covariates", p.covariates)->delimiter(',')->required();
  cox->add_option("--standardize", p.standardize)->delimiter(',');
  cox->add_option("--ties", p.ties)->check(CLI::IsMember({"efron", "breslow"}))->capture_default_str();
  cox->add_flag("--univariable", p.univariable, "Also fit each covariate alone");

  std::vector<std::string> factor_lists;
  auto* logit = app.add_subcommand("logit-compare", "Risk factors versus score versus both");
  logit->add_option("--factors", factor_lists, "Comma-separated factors; repeat for more rows")
      ->required();
  logit->add_option("--dev", p.dev)->required();
  logit->add_option("--val", p.val)->required();

  auto* lead = app.add_subcommand("leadtime", "Scores by years before the event");
  lead->add_option("--visits", p.visits)->required();
  lead->add_option("--scores", p.scores)->required();

  std::size_t n_patients = 0;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic cohort");
  sim->add_option("--config", p.config);
  auto* n_opt = sim->add_option("--n-patients", n_patients);

  auto* check = app.add_subcommand("check", "Compare a simulated cohort with its ground truth");
  check->add_option("--dir", p.sim_dir, "Simulation directory (default: --out-dir)");

  auto* run = app.add_subcommand("run", "Run a JSON manifest end to end");
  run->add_option("--manifest", p.manifest)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  p.seed_given = seed_opt->count() > 0;
  p.out_dir_given = out_opt->count() > 0;
  if (n_opt->count() > 0) p.n_patients = n_patients;
  p.threshold = *threshold_from_string(threshold);
  p.protocol = protocol == "thailand" ? GradingProtocol::ThailandSpecialist
                                      : GradingProtocol::EyePacsModifiedEtdrs;
  p.threads = resolve_thread_count(p.threads);
  for (const auto& f : factor_lists) p.factor_sets.push_back(split_commas(f));

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run_command(name, p);
  } catch (const Error& e) {
    std::cerr << "retinarisk " << name << ": " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "retinarisk " << name << ": " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace retinarisk::cli
