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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "apnea/detector.hpp"
#include "apnea/recording.hpp"

namespace apnea {

struct CohortSpec {
  std::size_t n_subjects = 0;
  std::uint64_t seed = 0;
  double duration_min = 30.0;
  /// Fractions for Normal, Mild, Moderate, Severe; the default mirrors a
  /// 10/11/4/37 clinical cohort.
  std::array<double, kSeverityCount> severity_mix{10.0 / 62.0, 11.0 / 62.0, 4.0 / 62.0, 37.0 / 62.0};
  double effort_fs_hz = 8.0;
  /// Additive noise standard deviation relative to the breathing amplitude.
  double noise_level = 0.05;
  /// Share of events with anti-phase abdominal effort.
  double paradox_fraction = 0.6;
  /// Overrides the per-severity event-rate draw (events per hour).
  std::optional<double> fixed_rate_per_hour;
};

void validate(const CohortSpec& spec);

struct SyntheticSubject {
  Subject subject;
  Severity severity = Severity::kNormal;
  double target_rate_per_hour = 0.0;
};

/// Subjects are independent given their derived seeds, so the result does
/// not depend on `jobs`.
std::vector<SyntheticSubject> generate_subjects(const CohortSpec& spec, std::size_t jobs = 1);

/// Writes the database layout plus cohort_spec.json under out_dir.
std::vector<SyntheticSubject> generate(const CohortSpec& spec, const std::filesystem::path& out_dir,
                                       std::size_t jobs = 1);

std::string cohort_spec_json(const CohortSpec& spec, const std::vector<SyntheticSubject>& subjects);

}  // namespace apnea
