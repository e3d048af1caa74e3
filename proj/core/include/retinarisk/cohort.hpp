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
#include <string_view>
#include <vector>

namespace retinarisk {

/// Five-level DR severity scale. Ordered; comparisons follow severity.
enum class DRGrade : std::uint8_t {
  NoDR = 0,
  Mild = 1,
  Moderate = 2,
  Severe = 3,
  Proliferative = 4,
};

std::string_view to_string(DRGrade grade) noexcept;
std::optional<DRGrade> grade_from_int(int code) noexcept;

/// Presence flags for the graded lesions of one visit.
///
/// hma_* and irma_* are severity buckets of a single measurement, so at most
/// one of each pair may be set. hard_exudates_within_2dd is a location
/// refinement of hard_exudates.
struct LesionSet {
  bool microaneurysms = false;
  bool hma_lt_2a = false;
  bool hma_ge_2a = false;
  bool irma_lt_8a = false;
  bool irma_ge_8a = false;
  bool hard_exudates = false;
  bool cotton_wool_spots = false;
  bool focal_laser_scars = false;
  bool venous_beading = false;
  bool neovascularization = false;
  bool fibrovascular_proliferation = false;
  bool preretinal_hemorrhage = false;
  bool vitreous_hemorrhage = false;
  bool prp_scars = false;
  bool hard_exudates_within_2dd = false;

  static constexpr std::size_t kFieldCount = 15;

  /// Column / field names in declaration order.
  static const std::vector<std::string>& field_names();
  bool get(std::size_t index) const;
  void set(std::size_t index, bool value);

  /// Empty string when valid, otherwise a description of the violation.
  std::string violation() const;
  bool valid() const { return violation().empty(); }

  bool operator==(const LesionSet&) const = default;
};

enum class GradingProtocol {
  EyePacsModifiedEtdrs,
  ThailandSpecialist,
};

std::string_view to_string(GradingProtocol protocol) noexcept;

enum class EyeSide : std::uint8_t { OD = 0, OS = 1 };

std::string_view to_string(EyeSide side) noexcept;
std::optional<EyeSide> side_from_string(std::string_view text) noexcept;

struct Visit {
  int day = 0;  // days since cohort epoch
  bool gradable = false;
  std::optional<LesionSet> lesions;
  std::optional<DRGrade> grade;
  std::optional<bool> dme;

  /// dme defaults to absent-is-false for gradable visits.
  bool has_dme() const { return dme.value_or(false); }
};

struct EyeRecord {
  std::string patient_id;
  EyeSide side = EyeSide::OD;
  std::vector<Visit> visits;  // strictly increasing day

  std::vector<const Visit*> gradable_visits() const;
};

struct Cohort {
  std::vector<EyeRecord> eyes;
  GradingProtocol protocol = GradingProtocol::EyePacsModifiedEtdrs;
};

struct GradeResult {
  DRGrade grade = DRGrade::NoDR;
  bool dme = false;

  bool operator==(const GradeResult&) const = default;
};

/// Maps a lesion set to (DR level, DME) under the given protocol's table.
///
/// EyePACS (modified ETDRS):
///   microaneurysms only                                   -> Mild
///   HMA < 2A, IRMA < 8A, hard exudates, focal laser scars -> Moderate
///   cotton wool spots (only with microaneurysms)          -> Moderate
///   HMA >= 2A, venous beading, IRMA >= 8A                 -> Severe
///   NV, fibrovascular proliferation, preretinal / vitreous
///   hemorrhage, PRP scars                                 -> Proliferative
/// The Severe band is not labelled in the source table; it is placed by the
/// ETDRS 4-2-1 convention.
///
/// Thailand (retina specialist):
///   hemorrhages, hard exudates and cotton wool spots count as Moderate only
///   when microaneurysms are present, otherwise they imply nothing.
///   Greater density of hemorrhages (HMA >= 2A), definite venous beading and
///   prominent IRMA (>= 8A) are Severe; IRMA < 8A is Moderate.
///
/// Under both protocols DME requires hard exudates within 2 disc diameters
/// together with microaneurysms.
GradeResult map_lesions_to_grade(const LesionSet& lesions, GradingProtocol protocol);

/// Vision-threatening DR: severe NPDR or worse, and/or DME.
bool is_vtdr(DRGrade grade, bool dme) noexcept;

/// Fills in grade/dme for gradable visits that only carry lesions.
/// Throws InvalidInput when a visit violates the Visit invariants.
void resolve_visit(Visit& visit, GradingProtocol protocol);

/// Throws InvalidInput on the first violated cohort invariant: duplicate
/// (patient_id, side), non-increasing visit days, or an unresolved visit.
void validate_cohort(const Cohort& cohort);

/// Keeps one uniformly chosen eye per patient. The draw for each patient
/// depends only on (seed, patient_id), so the result does not depend on row
/// order. Output is sorted by (patient_id, side).
Cohort select_one_eye_per_patient(const Cohort& cohort, std::uint64_t seed);

/// Keeps eyes with at least two gradable visits whose first gradable visit is
/// graded strictly below `threshold`.
Cohort inclusion_filter(const Cohort& cohort, DRGrade threshold = DRGrade::Mild);

}  // namespace retinarisk
