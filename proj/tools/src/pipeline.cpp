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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "output.hpp"
#include "retinarisk/cli/app.hpp"
#include "retinarisk/csv.hpp"
#include "retinarisk/io.hpp"
#include "retinarisk/random.hpp"
#include "retinarisk/simulate.hpp"

namespace retinarisk::cli {

namespace {

namespace fs = std::filesystem;

std::string resolve(const fs::path& base, const std::string& path) {
  const fs::path p(path);
  return (p.is_absolute() ? p : base / p).lexically_normal().string();
}

bool in_development_split(const std::string& patient_id, std::uint64_t seed) {
  return (substream_seed(seed ^ 0x73706c6974ULL, fnv1a64(patient_id)) & 1U) == 0;
}

/// Splits an analysis table by patient into development and validation rows.
void split_analysis(const std::string& path, std::uint64_t seed, const std::string& dev,
                    const std::string& val) {
  const csv::Table t = csv::read_file(path);
  auto row_text = [](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += ',';
      line += csv::escape(cells[i]);
    }
    return line + '\n';
  };
  const std::string header = row_text(t.header);
  std::string d = header, v = header;
  const std::size_t pid = *t.column("patient_id");
  for (const auto& row : t.rows) {
    (in_development_split(row[pid], seed) ? d : v) += row_text(row);
  }
  write_text(dev, d);
  write_text(val, v);
}

void write_development_scores(const std::string& scores_path, std::uint64_t seed,
                              const std::string& out) {
  std::vector<Prediction> keep;
  for (auto& s : io::load_scores(scores_path).rows) {
    if (in_development_split(s.key.patient_id, seed)) keep.push_back(std::move(s));
  }
  std::ostringstream text;
  io::write_scores(text, keep);
  write_text(out, text.str());
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

}  // namespace

int run_pipeline(const Params& cli) {
  const std::string manifest_path = cli.manifest;
  if (manifest_path.empty()) fail(ErrorKind::InvalidInput, "missing required option --manifest");
  std::ifstream in(manifest_path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot read " + manifest_path);
  nlohmann::json spec;
  try {
    spec = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidInput, manifest_path + ": " + e.what());
  }
  const fs::path base = fs::absolute(manifest_path).parent_path();

  Params p = cli;
  std::vector<std::vector<std::string>> factor_sets = {
      {"hba1c", "years_with_diabetes"},
      {"hba1c", "years_with_diabetes", "insulin_use"},
  };
  std::vector<std::string> covariates = {"hba1c", "years_with_diabetes", "insulin_use", "score"};
  p.one_eye = true;
  try {
    if (spec.contains("out_dir") && !cli.out_dir_given) {
      p.out_dir = resolve(base, spec.at("out_dir").get<std::string>());
    }
    if (spec.contains("params")) {
      const auto& j = spec.at("params");
      if (j.contains("seed")) {
        j.at("seed").get_to(p.seed);
        p.seed_given = true;
      }
      take(j, "alpha", p.alpha);
      take(j, "horizon_days", p.horizon.horizon_days);
      take(j, "buffer_days", p.horizon.buffer_days);
      take(j, "one_eye_per_patient", p.one_eye);
      take(j, "bins", p.bins);
      take(j, "quantile", p.quantile);
      take(j, "calibration_fraction", p.fraction);
      take(j, "ci", p.ci);
      take(j, "ties", p.ties);
      if (j.contains("threshold")) {
        const auto t = threshold_from_string(j.at("threshold").get<std::string>());
        if (!t) fail(ErrorKind::InvalidInput, manifest_path + ": unknown threshold");
        p.threshold = *t;
      }
      if (j.contains("protocol")) {
        const auto name = j.at("protocol").get<std::string>();
        if (name == "thailand") {
          p.protocol = GradingProtocol::ThailandSpecialist;
        } else if (name == "eyepacs") {
          p.protocol = GradingProtocol::EyePacsModifiedEtdrs;
        } else {
          fail(ErrorKind::InvalidInput, manifest_path + ": unknown protocol " + name);
        }
      }
    }
    take(spec, "factors", factor_sets);
    take(spec, "covariates", covariates);
    take(spec, "standardize", p.standardize);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidInput, manifest_path + ": " + e.what());
  }
  fs::create_directories(p.out_dir);
  const fs::path out(p.out_dir);

  RunManifest m("run", p);
  m.add_input("manifest", manifest_path);
  Json steps = Json::array();
  int status = kOk;
  auto step = [&](const std::string& name, const Params& sp) {
    int rc = kOk;
    try {
      rc = run_command(name, sp);
    } catch (const Error& e) {
      throw Error(e.kind(), name + ": " + e.what());
    }
    steps.push_back({{"step", name}, {"status", rc == kOk ? "ok" : "failed"}});
    if (rc != kOk && status == kOk) status = rc;
  };

  bool simulated = false;
  if (spec.contains("simulate")) {
    SimConfig config;
    try {
      config = sim_config_from_json(spec.at("simulate").dump());
    } catch (const Error& e) {
      throw Error(e.kind(), "simulate: " + std::string(e.what()));
    }
    if (p.seed_given && !spec.at("simulate").contains("seed")) config.seed = p.seed;
    Params sp = p;
    sp.out_dir = (out / "data").string();
    sp.config.clear();
    sp.seed_given = true;
    sp.seed = config.seed;
    sp.n_patients = config.n_patients;
    const std::string config_path = (out / "simulation_config.json").string();
    write_text(config_path, sim_config_to_json(config) + "\n");
    sp.config = config_path;
    step("simulate", sp);
    p.visits = (out / "data" / "visits.csv").string();
    p.scores = (out / "data" / "scores.csv").string();
    p.risk_factors = (out / "data" / "risk_factors.csv").string();
    simulated = true;
  } else if (spec.contains("inputs")) {
    const auto& j = spec.at("inputs");
    if (j.contains("visits")) p.visits = resolve(base, j.at("visits").get<std::string>());
    if (j.contains("scores")) p.scores = resolve(base, j.at("scores").get<std::string>());
    if (j.contains("risk_factors")) {
      p.risk_factors = resolve(base, j.at("risk_factors").get<std::string>());
    }
  }
  if (p.visits.empty()) fail(ErrorKind::InvalidInput, manifest_path + ": needs simulate or inputs.visits");

  {
    Params sp = p;
    step("validate", sp);
    if (status != kOk) fail(ErrorKind::InvalidInput, "validate: inputs have hard errors");
  }
  step("label", p);
  p.labels = (out / "labels.csv").string();

  if (!p.scores.empty()) {
    step("eval-auc", p);
    step("eval-calibration", p);
    step("eval-ppv-npv", p);
    step("recalibrate", p);

    const std::string tune = (out / "scores_development.csv").string();
    write_development_scores(p.scores, p.seed, tune);
    Params rg = p;
    rg.tune_scores = tune;
    step("risk-groups", rg);
    Params km = p;
    km.groups = (out / "groups.csv").string();
    step("km", km);
    step("logrank", km);
    step("leadtime", p);

    if (!p.risk_factors.empty()) {
      Params cx = p;
      cx.covariates = covariates;
      cx.univariable = true;
      step("cox", cx);
      const std::string dev = (out / "analysis_development.csv").string();
      const std::string val = (out / "analysis_validation.csv").string();
      split_analysis((out / "analysis.csv").string(), p.seed, dev, val);
      Params lc = p;
      lc.dev = dev;
      lc.val = val;
      lc.factor_sets = factor_sets;
      step("logit-compare", lc);
    }
  }
  if (simulated) {
    Params ck = p;
    ck.sim_dir = (out / "data").string();
    step("check", ck);
  }

  Json summary;
  summary["steps"] = steps;
  summary["status"] = status == kOk ? "ok" : "failed";
  write_json((out / "run.json").string(), summary, m);
  return status;
}

}  // namespace retinarisk::cli
