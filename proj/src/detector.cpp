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

#include "apnea/detector.hpp"

#include <algorithm>
#include <cmath>

#include "apnea/error.hpp"
#include "csv.hpp"

namespace apnea {

namespace {

constexpr std::size_t kMinEventFrames = 20;   // 10 s
constexpr std::size_t kMaxEventFrames = 240;  // 120 s

bool overlaps(double a_lo, double a_hi, double b_lo, double b_hi) {
  return std::min(a_hi, b_hi) - std::max(a_lo, b_lo) > 0.0;
}

/// Index of the first event (sorted, disjoint) overlapping [lo, hi), if any.
/// First event whose span, extended by `tail_s` past its end, overlaps [lo, hi).
std::optional<std::size_t> find_overlap(std::span<const DetectedEvent> events, double lo, double hi,
                                        double tail_s = 0.0) {
  auto it = std::upper_bound(events.begin(), events.end(), lo,
                             [&](double t, const DetectedEvent& e) { return t < e.end_s() + tail_s; });
  if (it != events.end() && overlaps(lo, hi, it->start_s, it->end_s() + tail_s)) {
    return static_cast<std::size_t>(it - events.begin());
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(EventSource source) {
  return source == EventSource::kSvm ? "svm" : "desat_correction";
}

std::optional<EventSource> parse_event_source(std::string_view text) {
  if (text == "svm") return EventSource::kSvm;
  if (text == "desat_correction") return EventSource::kDesatCorrection;
  return std::nullopt;
}

void validate(const DetectorConfig& cfg) {
  if (!(cfg.merge_gap_s > 0.0) || !(cfg.paradox_vote_bonus > 0.0) || !(cfg.desat_threshold > 0.0)) {
    raise(ErrorKind::kInvalidConfig, "detector parameters must be positive");
  }
  if (!(cfg.vote_threshold > 0.0 && cfg.vote_threshold <= 1.0)) {
    raise(ErrorKind::kInvalidConfig, "vote_threshold must lie in (0, 1]");
  }
  if (!(cfg.desat_lag_s >= 0.0)) raise(ErrorKind::kInvalidConfig, "desat_lag_s must be non-negative");
}

std::vector<double> frame_votes(std::span<const Prediction> predictions, std::span<const EpochFeatures> features,
                                const EpochGrid& grid, const DetectorConfig& cfg) {
  const std::size_t n = grid.size();
  if (predictions.size() != n || features.size() != n) {
    raise(ErrorKind::kGridMismatch, "predictions (" + std::to_string(predictions.size()) + ") and features (" +
                                        std::to_string(features.size()) + ") must match the grid (" +
                                        std::to_string(n) + ")");
  }
  std::vector<std::size_t> apnea_prefix(n + 1, 0), paradox_prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    apnea_prefix[i + 1] = apnea_prefix[i] + (predictions[i].label == EpochLabel::kApnea ? 1 : 0);
    paradox_prefix[i + 1] = paradox_prefix[i] + (features[i].paradox_flag ? 1 : 0);
  }
  std::vector<double> scores(grid.frame_count(), 0.0);
  for (std::size_t f = 0; f < scores.size(); ++f) {
    const std::size_t lo = f >= kEpochsPerFrame - 1 ? f - (kEpochsPerFrame - 1) : 0;
    const std::size_t hi = std::min(f, n - 1) + 1;
    const double covering = static_cast<double>(hi - lo);
    const double apnea = static_cast<double>(apnea_prefix[hi] - apnea_prefix[lo]);
    const double paradox = static_cast<double>(paradox_prefix[hi] - paradox_prefix[lo]);
    scores[f] = (apnea + cfg.paradox_vote_bonus * paradox) / (covering * (1.0 + cfg.paradox_vote_bonus));
  }
  return scores;
}

std::vector<bool> threshold_frames(std::span<const double> scores, const DetectorConfig& cfg) {
  std::vector<bool> flags(scores.size());
  for (std::size_t f = 0; f < scores.size(); ++f) flags[f] = scores[f] >= cfg.vote_threshold;
  return flags;
}

std::vector<FrameRun> merge_runs(const std::vector<bool>& frame_flags, const DetectorConfig& cfg) {
  std::vector<FrameRun> runs;
  const std::size_t n = frame_flags.size();
  std::size_t f = 0;
  while (f < n) {
    if (!frame_flags[f]) {
      ++f;
      continue;
    }
    std::size_t end = f;
    while (end < n && frame_flags[end]) ++end;
    if (!runs.empty()) {
      const double gap_s = static_cast<double>(f - runs.back().end) * DetectorConfig::frame_s;
      if (gap_s < cfg.merge_gap_s) {
        runs.back().end = end;
        f = end;
        continue;
      }
    }
    runs.push_back({f, end});
    f = end;
  }
  return runs;
}

std::vector<DetectedEvent> extract_events(const std::vector<bool>& frame_flags, const DetectorConfig& cfg) {
  std::vector<DetectedEvent> events;
  for (const auto& run : merge_runs(frame_flags, cfg)) {
    std::size_t begin = run.begin;
    std::size_t remaining = run.end - run.begin;
    if (remaining < kMinEventFrames) continue;
    while (remaining > 0) {
      const std::size_t piece = std::min(remaining, kMaxEventFrames);
      if (piece < kMinEventFrames) break;
      events.push_back({static_cast<double>(begin) * DetectorConfig::frame_s,
                        static_cast<double>(piece) * DetectorConfig::frame_s, EventSource::kSvm});
      begin += piece;
      remaining -= piece;
    }
  }
  return events;
}

CorrectedEvents desaturation_correction(std::span<const DetectedEvent> events, const std::vector<bool>& frame_flags,
                                        std::span<const EpochFeatures> features, const DetectorConfig& cfg) {
  const EpochGrid grid(features.size());
  if (frame_flags.size() != grid.frame_count()) {
    raise(ErrorKind::kGridMismatch, "frame flags do not match the epoch grid");
  }
  CorrectedEvents out{{events.begin(), events.end()}, frame_flags};
  bool changed_any = false;
  while (true) {
    bool changed = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (features[i].spo2_desat_depth < cfg.desat_threshold) continue;
      if (find_overlap(out.events, grid.start(i), grid.end(i), cfg.desat_lag_s)) continue;
      for (std::size_t f = i; f < i + kEpochsPerFrame; ++f) {
        if (!out.frame_flags[f]) {
          out.frame_flags[f] = true;
          changed = true;
        }
      }
    }
    if (!changed) break;
    changed_any = true;
    out.events = extract_events(out.frame_flags, cfg);
  }
  if (changed_any) {
    for (auto& e : out.events) {
      const auto hit = find_overlap(events, e.start_s, e.end_s());
      e.source = hit ? events[*hit].source : EventSource::kDesatCorrection;
    }
  }
  return out;
}

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::kNormal: return "Normal";
    case Severity::kMild: return "Mild";
    case Severity::kModerate: return "Moderate";
    case Severity::kSevere: return "Severe";
  }
  return "Normal";
}

Severity severity_from_rei(double rei) {
  if (rei >= 30.0) return Severity::kSevere;
  if (rei >= 15.0) return Severity::kModerate;
  if (rei >= 5.0) return Severity::kMild;
  return Severity::kNormal;
}

ScreeningReport screen_features(std::span<const EpochFeatures> features, double recording_hours,
                                const TrainedModel& model, const DetectorConfig& cfg) {
  validate(cfg);
  const EpochGrid grid(features.size());
  const auto inputs = classifier_inputs(features);
  std::vector<Prediction> predictions;
  predictions.reserve(inputs.rows);
  for (std::size_t i = 0; i < inputs.rows; ++i) predictions.push_back(predict(model, inputs.row(i)));

  const auto flags = threshold_frames(frame_votes(predictions, features, grid, cfg), cfg);
  const auto events = extract_events(flags, cfg);
  auto corrected = desaturation_correction(events, flags, features, cfg);

  ScreeningReport report;
  report.events = std::move(corrected.events);
  report.recording_hours = recording_hours;
  report.rei = recording_hours > 0.0 ? static_cast<double>(report.events.size()) / recording_hours : 0.0;
  report.severity = severity_from_rei(report.rei);
  return report;
}

ScreeningReport screen(const Subject& subject, const TrainedModel& model, const ScreenConfig& cfg) {
  const auto features = extract_features(subject, cfg.feature);
  return screen_features(features, subject.recording_hours(), model, cfg.detector);
}

void write_predicted_events_csv(const std::filesystem::path& path, std::span<const DetectedEvent> events) {
  std::string out = "start_s,duration_s,source\n";
  for (const auto& e : events) {
    out += csv::format_double(e.start_s) + ',' + csv::format_double(e.duration_s) + ',';
    out += to_string(e.source);
    out += '\n';
  }
  csv::write_text(path, out);
}

std::vector<DetectedEvent> read_predicted_events_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - table.header.begin());
  };
  const auto start = column("start_s");
  const auto duration = column("duration_s");
  if (!start || !duration) raise(ErrorKind::kMalformedCsv, path.string() + ": need start_s and duration_s columns");
  const auto source = column("source");
  std::vector<DetectedEvent> events;
  for (const auto& row : table.rows) {
    DetectedEvent e;
    e.start_s = csv::parse_double(row[*start], path.string());
    e.duration_s = csv::parse_double(row[*duration], path.string());
    if (!std::isfinite(e.start_s) || !std::isfinite(e.duration_s)) {
      raise(ErrorKind::kMalformedCsv, path.string() + ": missing start or duration");
    }
    if (source) {
      const auto parsed = parse_event_source(row[*source]);
      if (!parsed) raise(ErrorKind::kMalformedCsv, path.string() + ": unknown source '" + row[*source] + "'");
      e.source = *parsed;
    }
    events.push_back(e);
  }
  return events;
}

}  // namespace apnea
