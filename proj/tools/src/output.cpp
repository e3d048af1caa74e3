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

#include "output.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "retinarisk/error.hpp"

#ifndef RETINARISK_VERSION
#define RETINARISK_VERSION "0.0.0"
#endif

namespace retinarisk::cli {

Json num(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

void put(Json& obj, const std::string& key, const std::optional<double>& value,
         const std::string& reason) {
  if (value && std::isfinite(*value)) {
    obj[key] = *value;
  } else {
    obj[key] = nullptr;
    obj[key + "_null_reason"] = reason;
  }
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::InvalidInput, "cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

RunManifest::RunManifest(std::string subcommand, const Params& p)
    : subcommand_(std::move(subcommand)) {
  params_["seed"] = p.seed;
  params_["alpha"] = p.alpha;
  params_["horizon_days"] = p.horizon.horizon_days;
  params_["buffer_days"] = p.horizon.buffer_days;
  params_["threshold"] = std::string(to_string(p.threshold));
  params_["protocol"] = p.protocol == GradingProtocol::ThailandSpecialist ? "thailand" : "eyepacs";
}

void RunManifest::add_input(const std::string& role, const std::string& path) {
  Json in;
  in["role"] = role;
  in["file"] = std::filesystem::path(path).filename().string();
  in["sha256"] = sha256_file(path);
  inputs_.push_back(std::move(in));
}

Json RunManifest::to_json() const {
  Json j;
  j["tool"] = "retinarisk";
  j["version"] = RETINARISK_VERSION;
  j["subcommand"] = subcommand_;
  j["inputs"] = inputs_;
  Json params = params_;
  for (const auto& [k, v] : extra_.items()) params[k] = v;
  j["params"] = params;
  return j;
}

std::string out_path(const Params& params, const std::string& file) {
  std::filesystem::create_directories(params.out_dir);
  return (std::filesystem::path(params.out_dir) / file).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::InvalidInput, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorKind::InvalidInput, "write failed: " + path);
}

void write_json(const std::string& path, Json body, const RunManifest& manifest) {
  body["manifest"] = manifest.to_json();
  write_text(path, body.dump(2) + "\n");
}

}  // namespace retinarisk::cli
