/**
 * Copyright 2026 The apnea-screen Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace apnea::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Minimal comma-separated reader: no quoting, header row required.
Table read(const std::filesystem::path& path);

/// Empty fields and "nan" map to NaN; anything else unparsable throws MalformedCsv.
double parse_double(std::string_view field, std::string_view context);

/// Shortest representation that round-trips.
std::string format_double(double value);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace apnea::csv
