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

#include "retinarisk/cohort.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

#include "retinarisk/error.hpp"
#include "retinarisk/random.hpp"

namespace retinarisk {

std::string_view to_string(DRGrade grade) noexcept {
  switch (grade) {
    case DRGrade::NoDR: return "no_dr";
    case DRGrade::Mild: return "mild";
    case DRGrade::Moderate: return "moderate";
    case DRGrade::Severe: return "severe";
    case DRGrade::Proliferative: return "proliferative";
  }
  return "unknown";
}

std::optional<DRGrade> grade_from_int(int code) noexcept {
  if (code < 0 || code > 4) return std::nullopt;
  return static_cast<DRGrade>(code);
}

std::string_view to_string(GradingProtocol protocol) noexcept {
  switch (protocol) {
    case GradingProtocol::EyePacsModifiedEtdrs: return "eyepacs";
    case GradingProtocol::ThailandSpecialist: return "thailand";
  }
  return "unknown";
}

std::string_view to_string(EyeSide side) noexcept {
  return side == EyeSide::OD ? "OD" : "OS";
}

std::optional<EyeSide> side_from_string(std::string_view text) noexcept {
  if (text == "OD" || text == "od") return EyeSide::OD;
  if (text == "OS" || text == "os") return EyeSide::OS;
  return std::nullopt;
}

const std::vector<std::string>& LesionSet::field_names() {
  static const std::vector<std::string> names = {
      "microaneurysms",        "hma_lt_2a",
      "hma_ge_2a",             "irma_lt_8a",
      "irma_ge_8a",            "hard_exudates",
      "cotton_wool_spots",     "focal_laser_scars",
      "venous_beading",        "neovascularization",
      "fibrovascular_proliferation", "preretinal_hemorrhage",
      "vitreous_hemorrhage",   "prp_scars",
      "hard_exudates_within_2dd",
  };
  return names;
}

namespace {

// Field order must match LesionSet::field_names().
constexpr bool LesionSet::*kLesionFields[LesionSet::kFieldCount] = {
    &LesionSet::microaneurysms,
    &LesionSet::hma_lt_2a,
    &LesionSet::hma_ge_2a,
    &LesionSet::irma_lt_8a,
    &LesionSet::irma_ge_8a,
    &LesionSet::hard_exudates,
    &LesionSet::cotton_wool_spots,
    &LesionSet::focal_laser_scars,
    &LesionSet::venous_beading,
    &LesionSet::neovascularization,
    &LesionSet::fibrovascular_proliferation,
    &LesionSet::preretinal_hemorrhage,
    &LesionSet::vitreous_hemorrhage,
    &LesionSet::prp_scars,
    &LesionSet::hard_exudates_within_2dd,
};

bool any_proliferative(const LesionSet& l) {
  return l.neovascularization || l.fibrovascular_proliferation ||
         l.preretinal_hemorrhage || l.vitreous_hemorrhage || l.prp_scars;
}

DRGrade eyepacs_grade(const LesionSet& l) {
  if (any_proliferative(l)) return DRGrade::Proliferative;
  if (l.hma_ge_2a || l.venous_beading || l.irma_ge_8a) return DRGrade::Severe;
  if (l.hma_lt_2a || l.irma_lt_8a || l.hard_exudates || l.focal_laser_scars ||
      (l.cotton_wool_spots && l.microaneurysms)) {
    return DRGrade::Moderate;
  }
  if (l.microaneurysms) return DRGrade::Mild;
  return DRGrade::NoDR;
}

DRGrade thailand_grade(const LesionSet& l) {
  if (any_proliferative(l)) return DRGrade::Proliferative;
  if (l.hma_ge_2a || l.venous_beading || l.irma_ge_8a) return DRGrade::Severe;
  const bool with_ma = l.microaneurysms;
  if (l.focal_laser_scars || l.irma_lt_8a ||
      (with_ma && (l.hma_lt_2a || l.hard_exudates || l.cotton_wool_spots))) {
    return DRGrade::Moderate;
  }
  if (with_ma) return DRGrade::Mild;
  return DRGrade::NoDR;
}

}  // namespace

bool LesionSet::get(std::size_t index) const {
  if (index >= kFieldCount) fail(ErrorKind::InvalidInput, "lesion index out of range");
  return this->*kLesionFields[index];
}

void LesionSet::set(std::size_t index, bool value) {
  if (index >= kFieldCount) fail(ErrorKind::InvalidInput, "lesion index out of range");
  this->*kLesionFields[index] = value;
}

std::string LesionSet::violation() const {
  if (hard_exudates_within_2dd && !hard_exudates) {
    return "hard_exudates_within_2dd set without hard_exudates";
  }
  if (hma_lt_2a && hma_ge_2a) return "hma_lt_2a and hma_ge_2a are mutually exclusive";
  if (irma_lt_8a && irma_ge_8a) return "irma_lt_8a and irma_ge_8a are mutually exclusive";
  return {};
}

GradeResult map_lesions_to_grade(const LesionSet& lesions, GradingProtocol protocol) {
  GradeResult out;
  out.grade = protocol == GradingProtocol::EyePacsModifiedEtdrs ? eyepacs_grade(lesions)
                                                                : thailand_grade(lesions);
  out.dme = lesions.hard_exudates_within_2dd && lesions.microaneurysms;
  return out;
}

bool is_vtdr(DRGrade grade, bool dme) noexcept {
  return grade >= DRGrade::Severe || dme;
}

std::vector<const Visit*> EyeRecord::gradable_visits() const {
  std::vector<const Visit*> out;
  for (const auto& v : visits) {
    if (v.gradable) out.push_back(&v);
  }
  return out;
}

void resolve_visit(Visit& visit, GradingProtocol protocol) {
  if (visit.lesions && !visit.lesions->valid()) {
    fail(ErrorKind::InvalidInput, "lesion flags: " + visit.lesions->violation());
  }
  if (!visit.gradable) {
    if (visit.grade || visit.dme) {
      fail(ErrorKind::InvalidInput, "ungradable visit carries a grade or DME flag");
    }
    return;
  }
  if (visit.grade) return;  // directly supplied grades take precedence
  if (!visit.lesions) {
    fail(ErrorKind::InvalidInput, "gradable visit has neither a grade nor lesion flags");
  }
  const GradeResult mapped = map_lesions_to_grade(*visit.lesions, protocol);
  visit.grade = mapped.grade;
  if (!visit.dme) visit.dme = mapped.dme;
}

void validate_cohort(const Cohort& cohort) {
  std::set<std::pair<std::string, EyeSide>> seen;
  for (const auto& eye : cohort.eyes) {
    const std::string key = eye.patient_id + "/" + std::string(to_string(eye.side));
    if (!seen.emplace(eye.patient_id, eye.side).second) {
      fail(ErrorKind::InvalidInput, "duplicate eye " + key);
    }
    for (std::size_t i = 0; i < eye.visits.size(); ++i) {
      const Visit& v = eye.visits[i];
      if (i > 0 && v.day <= eye.visits[i - 1].day) {
        fail(ErrorKind::InvalidInput, "visit days not strictly increasing for " + key);
      }
      if (v.gradable && !v.grade) {
        fail(ErrorKind::InvalidInput, "gradable visit without grade for " + key);
      }
      if (!v.gradable && (v.grade || v.dme)) {
        fail(ErrorKind::InvalidInput, "ungradable visit carries a grade for " + key);
      }
    }
  }
}

Cohort select_one_eye_per_patient(const Cohort& cohort, std::uint64_t seed) {
  std::map<std::string, std::vector<const EyeRecord*>> by_patient;
  for (const auto& eye : cohort.eyes) by_patient[eye.patient_id].push_back(&eye);

  Cohort out;
  out.protocol = cohort.protocol;
  out.eyes.reserve(by_patient.size());
  for (auto& [patient, eyes] : by_patient) {
    std::sort(eyes.begin(), eyes.end(),
              [](const EyeRecord* a, const EyeRecord* b) { return a->side < b->side; });
    std::size_t pick = 0;
    if (eyes.size() > 1) {
      Rng rng(substream_seed(seed, fnv1a64(patient)));
      pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(eyes.size()));
      pick = std::min(pick, eyes.size() - 1);
    }
    out.eyes.push_back(*eyes[pick]);
  }
  return out;
}

Cohort inclusion_filter(const Cohort& cohort, DRGrade threshold) {
  Cohort out;
  out.protocol = cohort.protocol;
  for (const auto& eye : cohort.eyes) {
    const auto gradable = eye.gradable_visits();
    if (gradable.size() < 2) continue;
    if (!gradable.front()->grade || *gradable.front()->grade >= threshold) continue;
    out.eyes.push_back(eye);
  }
  return out;
}

}  // namespace retinarisk
