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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "retinarisk/cli/app.hpp"

namespace retinarisk::cli {

using Json = nlohmann::ordered_json;

/// Finite numbers pass through, anything else becomes null.
Json num(double value);

/// Sets obj[key] to the value, or to null with obj[key + "_null_reason"].
void put(Json& obj, const std::string& key, const std::optional<double>& value,
         const std::string& reason);

std::string sha256_file(const std::string& path);

/// Provenance block embedded in every JSON output. Input files are recorded
/// by base name and digest so that the block does not depend on where the
/// run happened.
class RunManifest {
 public:
  RunManifest(std::string subcommand, const Params& params);
  void add_input(const std::string& role, const std::string& path);
  Json& extra() { return extra_; }
  Json to_json() const;

 private:
  std::string subcommand_;
  Json params_;
  Json inputs_ = Json::array();
  Json extra_ = Json::object();
};

std::string out_path(const Params& params, const std::string& file);

/// Writes `body` with the manifest attached under "manifest".
void write_json(const std::string& path, Json body, const RunManifest& manifest);
void write_text(const std::string& path, const std::string& text);

}  // namespace retinarisk::cli
