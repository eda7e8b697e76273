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

#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unistd.h>

namespace apnea::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("apnea-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

PhenotypeProfile profile(Gender gender, double age, double bmi, bool htn, bool dm, bool thyroid) {
  PhenotypeProfile p;
  p.gender = gender;
  p.age = age;
  p.bmi = bmi;
  p.comorbidities = {htn, dm, thyroid};
  return p;
}

Subject breathing_subject(const std::string& id, double duration_s, double effort_fs_hz, double breath_hz,
                          double spo2, std::optional<std::vector<EventAnnotation>> events) {
  Subject s;
  s.id = id;
  s.profile = profile(Gender::kMale, 50.0, 27.0);
  const auto n_spo2 = static_cast<std::size_t>(duration_s);
  s.spo2 = {1.0, std::vector<double>(n_spo2, spo2), "percent"};
  const auto n_effort = static_cast<std::size_t>(std::llround(duration_s * effort_fs_hz));
  s.thoracic = {effort_fs_hz, std::vector<double>(n_effort), "a.u."};
  s.abdominal = {effort_fs_hz, std::vector<double>(n_effort), "a.u."};
  for (std::size_t i = 0; i < n_effort; ++i) {
    const double t = static_cast<double>(i) / effort_fs_hz;
    s.thoracic.samples[i] = std::sin(2.0 * std::numbers::pi * breath_hz * t);
    s.abdominal.samples[i] = 0.8 * std::sin(2.0 * std::numbers::pi * breath_hz * t);
  }
  s.annotations = std::move(events);
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

}  // namespace apnea::testing
