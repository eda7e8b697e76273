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

#include "apnea/recording.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "apnea/error.hpp"
#include "csv.hpp"

namespace apnea {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kMaxInterpolatedGapS = 5.0;
constexpr double kMinEffortRateHz = 4.0;
constexpr double kDurationSlackS = 1.0;

[[noreturn]] void violation(const std::string& id, const std::string& check) {
  raise(ErrorKind::kInvariantViolation, "subject '" + id + "': " + check);
}

[[noreturn]] void bad_manifest(const fs::path& path, const std::string& why) {
  raise(ErrorKind::kMalformedManifest, path.string() + ": " + why);
}

const json& require(const json& object, const char* key, const fs::path& path) {
  if (!object.is_object() || !object.contains(key)) bad_manifest(path, std::string("missing key '") + key + "'");
  return object.at(key);
}

double require_number(const json& object, const char* key, const fs::path& path) {
  const auto& value = require(object, key, path);
  if (!value.is_number()) bad_manifest(path, std::string("'") + key + "' must be a number");
  return value.get<double>();
}

bool require_bool(const json& object, const char* key, const fs::path& path) {
  const auto& value = require(object, key, path);
  if (!value.is_boolean()) bad_manifest(path, std::string("'") + key + "' must be a boolean");
  return value.get<bool>();
}

std::string require_string(const json& object, const char* key, const fs::path& path) {
  const auto& value = require(object, key, path);
  if (!value.is_string()) bad_manifest(path, std::string("'") + key + "' must be a string");
  return value.get<std::string>();
}

json number_json(double value) {
  if (std::isfinite(value) && value == std::floor(value) && std::fabs(value) < 9.0e15) {
    return json(static_cast<std::int64_t>(value));
  }
  return json(value);
}

std::size_t column_index(const csv::Table& table, std::string_view name, const fs::path& path) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) {
    raise(ErrorKind::kMalformedCsv, path.string() + ": missing column '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - table.header.begin());
}

std::vector<double> read_column(const csv::Table& table, std::size_t column, const fs::path& path) {
  std::vector<double> values;
  values.reserve(table.rows.size());
  for (const auto& row : table.rows) values.push_back(csv::parse_double(row[column], path.string()));
  return values;
}

}  // namespace

std::string_view to_string(Gender gender) { return gender == Gender::kMale ? "male" : "female"; }

std::optional<Gender> parse_gender(std::string_view text) {
  if (text == "male") return Gender::kMale;
  if (text == "female") return Gender::kFemale;
  return std::nullopt;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kOsa: return "OSA";
    case EventKind::kCsa: return "CSA";
    case EventKind::kMsa: return "MSA";
    case EventKind::kHyp: return "HYP";
  }
  return "OSA";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  if (text == "OSA") return EventKind::kOsa;
  if (text == "CSA") return EventKind::kCsa;
  if (text == "MSA") return EventKind::kMsa;
  if (text == "HYP") return EventKind::kHyp;
  return std::nullopt;
}

void validate_subject(const Subject& s) {
  if (s.id.empty()) violation(s.id, "empty id");
  const auto& p = s.profile;
  if (!(p.age > 0.0 && p.age <= 130.0)) violation(s.id, "age " + csv::format_double(p.age) + " outside (0, 130]");
  if (!(p.bmi > 5.0 && p.bmi <= 100.0)) violation(s.id, "bmi " + csv::format_double(p.bmi) + " outside (5, 100]");

  if (s.spo2.sample_rate_hz != 1.0) violation(s.id, "spo2 must be sampled at 1 Hz");
  if (s.spo2.samples.empty()) violation(s.id, "spo2 channel is empty");
  for (double v : s.spo2.samples) {
    if (!std::isfinite(v) || v < 0.0 || v > 100.0) violation(s.id, "spo2 sample outside [0, 100]");
  }

  if (s.thoracic.sample_rate_hz != s.abdominal.sample_rate_hz) {
    violation(s.id, "thoracic and abdominal sample rates differ");
  }
  if (!(s.thoracic.sample_rate_hz >= kMinEffortRateHz)) violation(s.id, "effort sample rate below 4 Hz");
  if (s.thoracic.samples.size() != s.abdominal.samples.size()) {
    violation(s.id, "thoracic and abdominal lengths differ");
  }
  if (s.thoracic.samples.empty()) violation(s.id, "effort channels are empty");
  for (const auto* channel : {&s.thoracic, &s.abdominal}) {
    for (double v : channel->samples) {
      if (!std::isfinite(v)) violation(s.id, "non-finite effort sample");
    }
  }
  if (std::fabs(s.thoracic.duration_s() - s.spo2.duration_s()) > kDurationSlackS) {
    violation(s.id, "effort duration " + csv::format_double(s.thoracic.duration_s()) +
                        " s differs from spo2 duration " + csv::format_double(s.spo2.duration_s()) + " s by > 1 s");
  }

  if (s.annotations) {
    const double duration = s.duration_s();
    double previous_end = -1.0;
    for (const auto& e : *s.annotations) {
      if (!std::isfinite(e.start_s) || !std::isfinite(e.duration_s)) violation(s.id, "non-finite annotation");
      if (e.duration_s < kMinEventS || e.duration_s > kMaxEventS) {
        violation(s.id, "annotation at " + csv::format_double(e.start_s) + " s has duration " +
                            csv::format_double(e.duration_s) + " s outside [10, 120]");
      }
      if (e.start_s < 0.0 || e.end_s() > duration) {
        violation(s.id, "annotation at " + csv::format_double(e.start_s) + " s lies outside the recording");
      }
      if (e.start_s < previous_end) {
        violation(s.id, "annotations overlap or are unsorted at " + csv::format_double(e.start_s) + " s");
      }
      previous_end = e.end_s();
    }
  }
}

void fill_gaps(std::vector<double>& samples, double sample_rate_hz, double max_gap_s, std::string_view what) {
  const std::size_t n = samples.size();
  const auto max_gap = static_cast<std::size_t>(std::floor(max_gap_s * sample_rate_hz + 1e-9));
  std::size_t i = 0;
  while (i < n) {
    if (std::isfinite(samples[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !std::isfinite(samples[j])) ++j;
    const std::size_t gap = j - i;
    if (gap > max_gap) {
      raise(ErrorKind::kInvariantViolation, std::string(what) + ": gap of " + std::to_string(gap) +
                                                " samples at index " + std::to_string(i) + " exceeds 5 s");
    }
    if (i == 0 && j == n) raise(ErrorKind::kInvariantViolation, std::string(what) + ": no valid samples");
    if (i == 0) {
      std::fill(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(j), samples[j]);
    } else if (j == n) {
      std::fill(samples.begin() + static_cast<std::ptrdiff_t>(i), samples.end(), samples[i - 1]);
    } else {
      const double left = samples[i - 1];
      const double right = samples[j];
      const double span = static_cast<double>(gap + 1);
      for (std::size_t k = i; k < j; ++k) {
        const double t = static_cast<double>(k - i + 1) / span;
        samples[k] = left + (right - left) * t;
      }
    }
    i = j;
  }
}

std::vector<EventAnnotation> read_events_csv(const fs::path& path) {
  const auto table = csv::read(path);
  const auto kind_col = column_index(table, "kind", path);
  const auto start_col = column_index(table, "start_s", path);
  const auto duration_col = column_index(table, "duration_s", path);
  std::vector<EventAnnotation> events;
  events.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const auto kind = parse_event_kind(row[kind_col]);
    if (!kind) raise(ErrorKind::kMalformedCsv, path.string() + ": unknown event kind '" + row[kind_col] + "'");
    EventAnnotation e;
    e.kind = *kind;
    e.start_s = csv::parse_double(row[start_col], path.string());
    e.duration_s = csv::parse_double(row[duration_col], path.string());
    events.push_back(e);
  }
  return events;
}

void write_events_csv(const fs::path& path, const std::vector<EventAnnotation>& events) {
  std::string out = "kind,start_s,duration_s\n";
  for (const auto& e : events) {
    out += to_string(e.kind);
    out += ',' + csv::format_double(e.start_s) + ',' + csv::format_double(e.duration_s) + '\n';
  }
  csv::write_text(path, out);
}

Subject load_subject(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) raise(ErrorKind::kMissingFile, manifest_path.string());

  json manifest;
  {
    std::ifstream in(manifest_path);
    try {
      manifest = json::parse(in);
    } catch (const json::exception& e) {
      bad_manifest(manifest_path, e.what());
    }
  }

  Subject s;
  s.id = require_string(manifest, "id", manifest_path);
  const auto gender = parse_gender(require_string(manifest, "gender", manifest_path));
  if (!gender) bad_manifest(manifest_path, "gender must be 'male' or 'female'");
  s.profile.gender = *gender;
  s.profile.age = require_number(manifest, "age", manifest_path);
  s.profile.bmi = require_number(manifest, "bmi", manifest_path);
  const auto& comorbid = require(manifest, "comorbidities", manifest_path);
  s.profile.comorbidities.hypertension = require_bool(comorbid, "hypertension", manifest_path);
  s.profile.comorbidities.diabetes = require_bool(comorbid, "diabetes", manifest_path);
  s.profile.comorbidities.hypothyroidism = require_bool(comorbid, "hypothyroidism", manifest_path);

  const auto& channels = require(manifest, "channels", manifest_path);
  const auto& spo2_entry = require(channels, "spo2", manifest_path);
  const auto& effort_entry = require(channels, "effort", manifest_path);

  const auto spo2_path = dir / require_string(spo2_entry, "file", manifest_path);
  const auto effort_path = dir / require_string(effort_entry, "file", manifest_path);
  if (!fs::exists(spo2_path)) raise(ErrorKind::kMissingFile, spo2_path.string());
  if (!fs::exists(effort_path)) raise(ErrorKind::kMissingFile, effort_path.string());

  s.spo2.sample_rate_hz = require_number(spo2_entry, "fs_hz", manifest_path);
  s.spo2.unit = "percent";
  {
    const auto table = csv::read(spo2_path);
    s.spo2.samples = read_column(table, column_index(table, "spo2_percent", spo2_path), spo2_path);
  }

  const double effort_fs = require_number(effort_entry, "fs_hz", manifest_path);
  if (!(effort_fs > 0.0) || !(s.spo2.sample_rate_hz > 0.0)) bad_manifest(manifest_path, "fs_hz must be positive");
  s.thoracic.sample_rate_hz = s.abdominal.sample_rate_hz = effort_fs;
  s.thoracic.unit = s.abdominal.unit = "a.u.";
  {
    const auto table = csv::read(effort_path);
    s.thoracic.samples = read_column(table, column_index(table, "thoracic", effort_path), effort_path);
    s.abdominal.samples = read_column(table, column_index(table, "abdominal", effort_path), effort_path);
  }

  fill_gaps(s.spo2.samples, s.spo2.sample_rate_hz, kMaxInterpolatedGapS, s.id + " spo2");
  fill_gaps(s.thoracic.samples, effort_fs, kMaxInterpolatedGapS, s.id + " thoracic");
  fill_gaps(s.abdominal.samples, effort_fs, kMaxInterpolatedGapS, s.id + " abdominal");

  const auto events_path = dir / "events.csv";
  if (fs::exists(events_path)) s.annotations = read_events_csv(events_path);

  validate_subject(s);
  return s;
}

std::vector<Subject> load_database(const fs::path& root) {
  if (!fs::is_directory(root)) raise(ErrorKind::kMissingFile, "database root " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  std::vector<Subject> subjects;
  subjects.reserve(dirs.size());
  for (const auto& dir : dirs) subjects.push_back(load_subject(dir));
  std::sort(subjects.begin(), subjects.end(), [](const Subject& a, const Subject& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < subjects.size(); ++i) {
    if (subjects[i].id == subjects[i - 1].id) {
      raise(ErrorKind::kInvariantViolation, "duplicate subject id '" + subjects[i].id + "'");
    }
  }
  return subjects;
}

void write_subject(const fs::path& dir, const Subject& s) {
  fs::create_directories(dir);
  json manifest;
  manifest["id"] = s.id;
  manifest["gender"] = std::string(to_string(s.profile.gender));
  manifest["age"] = number_json(s.profile.age);
  manifest["bmi"] = number_json(s.profile.bmi);
  manifest["comorbidities"] = {{"hypertension", s.profile.comorbidities.hypertension},
                               {"diabetes", s.profile.comorbidities.diabetes},
                               {"hypothyroidism", s.profile.comorbidities.hypothyroidism}};
  manifest["channels"] = {
      {"spo2", {{"file", "spo2.csv"}, {"fs_hz", number_json(s.spo2.sample_rate_hz)}}},
      {"effort", {{"file", "effort.csv"}, {"fs_hz", number_json(s.thoracic.sample_rate_hz)}}}};
  csv::write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  std::string spo2 = "spo2_percent\n";
  for (double v : s.spo2.samples) spo2 += csv::format_double(v) + '\n';
  csv::write_text(dir / "spo2.csv", spo2);

  std::string effort = "thoracic,abdominal\n";
  effort.reserve(s.thoracic.samples.size() * 20);
  for (std::size_t i = 0; i < s.thoracic.samples.size(); ++i) {
    effort += csv::format_double(s.thoracic.samples[i]);
    effort += ',';
    effort += csv::format_double(s.abdominal.samples[i]);
    effort += '\n';
  }
  csv::write_text(dir / "effort.csv", effort);

  if (s.annotations) write_events_csv(dir / "events.csv", *s.annotations);
}

std::vector<EpochLabel> label_epochs(const Subject& subject, const EpochGrid& grid, double min_overlap_fraction) {
  if (!subject.annotations) raise(ErrorKind::kNoAnnotations, "subject '" + subject.id + "' has no annotations");

  // Union of annotated intervals, sorted.
  std::vector<std::pair<double, double>> spans;
  for (const auto& e : *subject.annotations) spans.emplace_back(e.start_s, e.end_s());
  std::sort(spans.begin(), spans.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& span : spans) {
    if (!merged.empty() && span.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, span.second);
    } else {
      merged.push_back(span);
    }
  }

  const double needed = min_overlap_fraction * grid.window_s();
  std::vector<EpochLabel> labels(grid.size(), EpochLabel::kNormal);
  std::size_t first = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double lo = grid.start(i);
    const double hi = grid.end(i);
    while (first < merged.size() && merged[first].second <= lo) ++first;
    double overlap = 0.0;
    for (std::size_t k = first; k < merged.size() && merged[k].first < hi; ++k) {
      overlap += std::min(hi, merged[k].second) - std::max(lo, merged[k].first);
    }
    if (overlap > 0.0 && overlap >= needed - 1e-9) labels[i] = EpochLabel::kApnea;
  }
  return labels;
}

}  // namespace apnea
