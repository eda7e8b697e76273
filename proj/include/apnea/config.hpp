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
#include <string_view>

#include "apnea/evaluation.hpp"

namespace apnea {

/// Contents of a run-config file. Every section and key is optional; anything
/// not recognized is rejected with InvalidConfig.
struct RunConfig {
  PipelineConfig pipeline;
  std::optional<std::filesystem::path> db_path;
  std::optional<std::filesystem::path> out_path;
};

/// Applies the keys present in `text` on top of `base`.
RunConfig parse_run_config(std::string_view text, const RunConfig& base = {});
RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base = {});

/// Canonical JSON of the pipeline settings (as echoed into reports).
std::string pipeline_config_json(const PipelineConfig& cfg, int indent = 2);

}  // namespace apnea
