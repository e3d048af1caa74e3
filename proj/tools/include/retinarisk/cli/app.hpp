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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "retinarisk/cohort.hpp"
#include "retinarisk/endpoint.hpp"
#include "retinarisk/error.hpp"

namespace retinarisk::cli {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kInputError = 2,
  kPreconditionError = 3,
  kNonConvergence = 4,
};

int exit_code_for(ErrorKind kind) noexcept;

/// Flags shared by every subcommand plus the union of subcommand options.
struct Params {
  std::uint64_t seed = 0;
  bool seed_given = false;
  double alpha = 0.05;
  HorizonSpec horizon;
  OutcomeThreshold threshold = OutcomeThreshold::MildPlus;
  GradingProtocol protocol = GradingProtocol::EyePacsModifiedEtdrs;
  std::string out_dir = ".";
  bool out_dir_given = false;
  unsigned threads = 1;

  // inputs
  std::vector<std::string> validate_paths;
  std::string visits;
  std::string scores;
  std::string labels;
  std::string risk_factors;
  std::string groups;
  std::string tune_scores;
  std::string config;
  std::string dev;
  std::string val;
  std::string sim_dir;
  std::string manifest;

  // subcommand options
  bool one_eye = false;
  std::string ci = "wald";          // wald | logit
  std::size_t bins = 10;
  std::string quantile = "linear";  // linear | lower | higher | nearest
  double fraction = 0.05;
  std::vector<std::vector<std::string>> factor_sets;
  std::vector<std::string> covariates;
  std::vector<std::string> standardize;
  std::string ties = "efron";       // efron | breslow
  bool univariable = false;
  std::optional<std::size_t> n_patients;
};

/// Runs one subcommand. Module errors propagate as retinarisk::Error.
/// Returns kOk or kCheckFailed.
int run_command(const std::string& name, const Params& params);

/// Executes a JSON manifest: optional simulation, then label and every
/// evaluation that the available inputs allow. Output goes to
/// params.out_dir unless the manifest names one.
int run_pipeline(const Params& params);

/// Parses argv, dispatches and maps errors to exit codes.
int main_entry(int argc, const char* const* argv);

}  // namespace retinarisk::cli
