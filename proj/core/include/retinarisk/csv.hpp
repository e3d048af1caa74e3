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

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace retinarisk::csv {

/// A parsed CSV file: header plus rows with their 1-based source line numbers.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;

  /// Index of a header column, nullopt if absent.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// RFC 4180-style reader: comma separated, optional double quotes with ""
/// escapes, CRLF tolerated, no embedded newlines. A header row is required.
/// Throws InvalidInput on a missing header or a row with the wrong width.
Table read(std::istream& in, const std::string& source = "<stream>");
Table read_file(const std::string& path);

/// Quotes a field when it contains a comma, quote or leading/trailing space.
std::string escape(std::string_view field);

/// Shortest round-trip-safe decimal text ("%.17g" trimmed); "nan"/"inf" are
/// never produced since callers only pass finite values.
std::string format_double(double value);
/// Fixed number of decimals.
std::string format_fixed(double value, int decimals);

/// Strict numeric parsing; nullopt on empty or malformed text.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

}  // namespace retinarisk::csv
