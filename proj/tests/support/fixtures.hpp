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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "apnea/recording.hpp"

namespace apnea::testing {

/// Directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

PhenotypeProfile profile(Gender gender, double age, double bmi, bool htn = false, bool dm = false,
                         bool thyroid = false);

/// Clean breathing recording: both effort channels carry the same sinusoid,
/// SpO2 is constant.
Subject breathing_subject(const std::string& id, double duration_s, double effort_fs_hz = 8.0,
                          double breath_hz = 0.25, double spo2 = 97.0,
                          std::optional<std::vector<EventAnnotation>> events = std::nullopt);

std::string read_file(const std::filesystem::path& path);

}  // namespace apnea::testing
