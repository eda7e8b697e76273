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
#include <optional>
#include <string>

#include "apnea/evaluation.hpp"

namespace apnea {

/// Deterministic JSON rendering; undefined statistics are null and an
/// infinite LR+ is the string "inf".
std::string report_json(const EvalReport& report);
std::string report_markdown(const EvalReport& report);

/// Two-lane event timeline (expert annotations above, detections below).
std::string timeline_svg(const SubjectResult& subject);

/// Writes report.json at json_path, the Markdown rendering next to it with an
/// .md extension, and one SVG per subject into plots_dir when given.
void write_report(const EvalReport& report, const std::filesystem::path& json_path,
                  const std::optional<std::filesystem::path>& plots_dir = std::nullopt);

}  // namespace apnea
