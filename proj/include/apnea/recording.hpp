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
#include <string_view>
#include <vector>

#include "apnea/epoch_grid.hpp"

namespace apnea {

enum class Gender { kMale, kFemale };

std::string_view to_string(Gender gender);
std::optional<Gender> parse_gender(std::string_view text);

struct Comorbidities {
  bool hypertension = false;
  bool diabetes = false;
  bool hypothyroidism = false;

  bool operator==(const Comorbidities&) const = default;
};

struct PhenotypeProfile {
  Gender gender = Gender::kMale;
  double age = 0.0;  // years
  double bmi = 0.0;  // kg/m^2
  Comorbidities comorbidities;

  bool operator==(const PhenotypeProfile&) const = default;
};

struct SignalChannel {
  double sample_rate_hz = 0.0;
  std::vector<double> samples;
  std::string unit;

  double duration_s() const noexcept {
    return sample_rate_hz > 0.0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

enum class EventKind { kOsa, kCsa, kMsa, kHyp };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct EventAnnotation {
  EventKind kind = EventKind::kOsa;
  double start_s = 0.0;
  double duration_s = 0.0;

  double end_s() const noexcept { return start_s + duration_s; }
};

inline constexpr double kMinEventS = 10.0;
inline constexpr double kMaxEventS = 120.0;

/// One database entry. SpO2 runs on the 1 Hz reference clock, so the
/// recording length is defined by its sample count.
struct Subject {
  std::string id;
  PhenotypeProfile profile;
  SignalChannel spo2;
  SignalChannel thoracic;
  SignalChannel abdominal;
  std::optional<std::vector<EventAnnotation>> annotations;

  double duration_s() const noexcept { return spo2.duration_s(); }
  double recording_hours() const noexcept { return static_cast<double>(spo2.samples.size()) / 3600.0; }
};

/// Checks every Subject invariant; throws InvariantViolation naming the subject.
void validate_subject(const Subject& subject);

/// Linearly fills runs of non-finite samples no longer than max_gap_s; leading
/// and trailing gaps take the nearest valid value. Longer gaps throw.
void fill_gaps(std::vector<double>& samples, double sample_rate_hz, double max_gap_s,
               std::string_view what);

Subject load_subject(const std::filesystem::path& dir);

/// Loads every subject directory under root, sorted by id. Plain files at the
/// root (for example cohort_spec.json) are ignored.
std::vector<Subject> load_database(const std::filesystem::path& root);

/// Writes the on-disk layout read by load_subject. Output is deterministic.
void write_subject(const std::filesystem::path& dir, const Subject& subject);

std::vector<EventAnnotation> read_events_csv(const std::filesystem::path& path);
void write_events_csv(const std::filesystem::path& path, const std::vector<EventAnnotation>& events);

enum class EpochLabel { kNormal, kApnea };

/// APN iff at least 50% of the epoch overlaps the union of annotated events.
std::vector<EpochLabel> label_epochs(const Subject& subject, const EpochGrid& grid,
                                     double min_overlap_fraction = 0.5);

}  // namespace apnea
