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

// Brute-force evaluator of the development endpoint, written directly from
// the rule text and sharing no code with the library.

#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "retinarisk/endpoint.hpp"
#include "retinarisk/error.hpp"

namespace oracle {

using namespace retinarisk;

struct OracleVisit {
  int day;
  bool gradable;
  int grade;  // 0..4
  bool dme;
};

inline bool meets(const OracleVisit& v, OutcomeThreshold t) {
  switch (t) {
    case OutcomeThreshold::MildPlus:
      return v.grade >= 1;
    case OutcomeThreshold::ModeratePlus:
      return v.grade >= 2;
    case OutcomeThreshold::VTDR:
      return v.grade >= 3 || v.dme;
  }
  return false;
}

// nullopt: precondition violated.
inline std::optional<OutcomeLabel> binary(const std::vector<OracleVisit>& visits, OutcomeThreshold t,
                                          int h, int b) {
  int base = -1;
  for (const auto& v : visits) {
    if (v.gradable) {
      base = v.day;
      if (meets(v, t)) return std::nullopt;
      break;
    }
  }
  if (base < 0) return std::nullopt;
  bool pos = false, neg = false;
  for (const auto& v : visits) {
    if (!v.gradable) continue;
    const int rel = v.day - base;
    if (meets(v, t) && rel <= h + b) pos = true;
    if (!meets(v, t) && rel >= h - b) neg = true;
  }
  if (pos) return OutcomeLabel::Positive;
  if (neg) return OutcomeLabel::Negative;
  return OutcomeLabel::Unknown;
}

inline std::optional<SurvivalRecord> survival(const std::vector<OracleVisit>& visits,
                                              OutcomeThreshold t) {
  std::vector<OracleVisit> g;
  for (const auto& v : visits) {
    if (v.gradable) g.push_back(v);
  }
  if (g.empty() || meets(g.front(), t)) return std::nullopt;
  for (const auto& v : g) {
    if (meets(v, t)) return SurvivalRecord{v.day - g.front().day, true};
  }
  return SurvivalRecord{g.back().day - g.front().day, false};
}

struct GridStats {
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  std::string first_mismatch;
};

/// Every sequence of up to `max_visits` visits on a day grid around H - B and
/// H + B, every grade assignment from `grades` and every gradability pattern,
/// at two baseline offsets. With `vary_dme` each gradable visit also toggles DME.
inline GridStats run_grid(HorizonSpec spec, OutcomeThreshold threshold,
                          const std::vector<DRGrade>& grades, int max_visits, bool vary_dme = false) {
  const int h = spec.horizon_days, b = spec.buffer_days;
  const std::vector<int> grid = {0,         1,     h / 2,     h - b - 1, h - b, h - b + 1,
                                 h,         h + b - 1, h + b, h + b + 1, h + 3 * b};
  const int n = static_cast<int>(grid.size());
  const int g = static_cast<int>(grades.size());
  GridStats stats;

  std::vector<int> idx;
  auto visit_sets = [&](auto&& self, int start, int depth, auto&& emit) -> void {
    if (depth > 0) emit();
    if (depth == max_visits) return;
    for (int i = start; i < n; ++i) {
      idx.push_back(i);
      self(self, i + 1, depth + 1, emit);
      idx.pop_back();
    }
  };
  const int states = g * 2 * (vary_dme ? 2 : 1);  // grade x gradable x dme
  for (int offset : {0, 45}) {
    visit_sets(visit_sets, 0, 0, [&] {
      const int k = static_cast<int>(idx.size());
      long long combos = 1;
      for (int i = 0; i < k; ++i) combos *= states;
      for (long long c = 0; c < combos; ++c) {
        long long code = c;
        std::vector<OracleVisit> ov;
        EyeRecord eye;
        eye.patient_id = "G";
        for (int i = 0; i < k; ++i) {
          const int s = static_cast<int>(code % states);
          code /= states;
          const int gi = s % g;
          const bool gradable = (s / g) % 2 == 1;
          const bool dme = vary_dme && gradable && (s / (2 * g)) == 1;
          const int day = grid[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] + offset;
          ov.push_back({day, gradable, static_cast<int>(grades[static_cast<std::size_t>(gi)]), dme});
          Visit v;
          v.day = day;
          v.gradable = gradable;
          if (gradable) {
            v.grade = grades[static_cast<std::size_t>(gi)];
            v.dme = dme;
          }
          eye.visits.push_back(v);
        }
        ++stats.cases;
        const auto want_b = binary(ov, threshold, h, b);
        const auto want_s = survival(ov, threshold);
        std::optional<OutcomeLabel> got_b;
        std::optional<SurvivalRecord> got_s;
        try {
          got_b = derive_binary_outcome(eye, threshold, spec);
        } catch (const Error&) {
        }
        try {
          got_s = derive_survival_record(eye, threshold);
        } catch (const Error&) {
        }
        if (got_b != want_b || got_s != want_s) {
          if (stats.mismatches++ == 0) {
            std::ostringstream os;
            for (const auto& v : ov) {
              os << "(" << v.day << (v.gradable ? ",g" : ",u") << v.grade << (v.dme ? ",dme" : "") << ") ";
            }
            stats.first_mismatch = os.str();
          }
        }
      }
    });
  }
  return stats;
}

}  // namespace oracle
