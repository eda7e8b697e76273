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
#include <span>
#include <string_view>
#include <vector>

#include "apnea/epoch_grid.hpp"
#include "apnea/features.hpp"
#include "apnea/recording.hpp"
#include "apnea/svm.hpp"

namespace apnea {

enum class EventSource { kSvm, kDesatCorrection };
std::string_view to_string(EventSource source);
std::optional<EventSource> parse_event_source(std::string_view text);

struct DetectedEvent {
  double start_s = 0.0;
  double duration_s = 0.0;
  EventSource source = EventSource::kSvm;

  double end_s() const noexcept { return start_s + duration_s; }
  bool operator==(const DetectedEvent&) const = default;
};

struct DetectorConfig {
  static constexpr double frame_s = kEpochStrideS;
  double merge_gap_s = 5.0;
  double paradox_vote_bonus = 1.0;
  double vote_threshold = 0.5;
  double desat_threshold = 3.0;
  /// A desaturation starting within this long after a detected event is
  /// attributed to that event (SpO2 trails the breathing change).
  double desat_lag_s = 30.0;
};

void validate(const DetectorConfig& cfg);

/// Per-frame apnea score: (APN votes + bonus * paradox votes) divided by
/// (covering epochs * (1 + bonus)).
std::vector<double> frame_votes(std::span<const Prediction> predictions, std::span<const EpochFeatures> features,
                                const EpochGrid& grid, const DetectorConfig& cfg);

std::vector<bool> threshold_frames(std::span<const double> scores, const DetectorConfig& cfg);

/// Half-open run of frames [begin, end).
struct FrameRun {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Maximal apneic runs with gaps shorter than merge_gap_s bridged, before any
/// duration filtering.
std::vector<FrameRun> merge_runs(const std::vector<bool>& frame_flags, const DetectorConfig& cfg);

/// Runs shorter than 10 s are dropped; runs over 120 s are cut into 120 s
/// events and a trailing piece shorter than 10 s is dropped.
std::vector<DetectedEvent> extract_events(const std::vector<bool>& frame_flags, const DetectorConfig& cfg);

struct CorrectedEvents {
  std::vector<DetectedEvent> events;
  std::vector<bool> frame_flags;
};

/// Marks epochs that lie entirely outside the detected events (each extended
/// by desat_lag_s past its end) and show a
/// desaturation >= desat_threshold as apneic, then re-extracts events from the
/// union until no further epochs qualify. Events overlapping an input event
/// keep its source; new ones are tagged desat_correction. Idempotent when fed
/// its own output.
CorrectedEvents desaturation_correction(std::span<const DetectedEvent> events, const std::vector<bool>& frame_flags,
                                        std::span<const EpochFeatures> features, const DetectorConfig& cfg);

enum class Severity { kNormal = 0, kMild = 1, kModerate = 2, kSevere = 3 };
inline constexpr std::size_t kSeverityCount = 4;
std::string_view to_string(Severity severity);

/// Normal < 5 <= Mild < 15 <= Moderate < 30 <= Severe (events per hour).
Severity severity_from_rei(double rei);

struct ScreeningReport {
  std::vector<DetectedEvent> events;
  double recording_hours = 0.0;
  double rei = 0.0;
  Severity severity = Severity::kNormal;
};

struct ScreenConfig {
  FeatureConfig feature;
  DetectorConfig detector;
};

/// Runs the classifier over every epoch, votes frames, extracts events and
/// applies the desaturation correction.
ScreeningReport screen_features(std::span<const EpochFeatures> features, double recording_hours,
                                const TrainedModel& model, const DetectorConfig& cfg);
ScreeningReport screen(const Subject& subject, const TrainedModel& model, const ScreenConfig& cfg = {});

void write_predicted_events_csv(const std::filesystem::path& path, std::span<const DetectedEvent> events);
std::vector<DetectedEvent> read_predicted_events_csv(const std::filesystem::path& path);

}  // namespace apnea
