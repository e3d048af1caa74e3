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

#include "retinarisk/error.hpp"

namespace retinarisk {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Separation: return "separation";
    case ErrorKind::Collinearity: return "collinearity";
    case ErrorKind::NonConvergence: return "non_convergence";
  }
  return "unknown";
}

}  // namespace retinarisk
