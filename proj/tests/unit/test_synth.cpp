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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "apnea/error.hpp"
#include "apnea/synth.hpp"
#include "fixtures.hpp"

using namespace apnea;

namespace {

CohortSpec base_spec(std::size_t n, std::uint64_t seed) {
  CohortSpec spec;
  spec.n_subjects = n;
  spec.seed = seed;
  return spec;
}

double peak_to_peak(const SignalChannel& ch, double t0, double t1) {
  const auto a = static_cast<std::size_t>(std::max(0.0, t0) * ch.sample_rate_hz);
  const auto b = std::min(ch.samples.size(), static_cast<std::size_t>(t1 * ch.sample_rate_hz));
  const auto [lo, hi] = std::minmax_element(ch.samples.begin() + a, ch.samples.begin() + b);
  return *hi - *lo;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::map<std::string, std::string> tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = testing::read_file(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("same seed gives a byte-identical database") {
  testing::TempDir a("synth-a"), b("synth-b");
  auto spec = base_spec(6, 42);
  spec.duration_min = 10.0;
  generate(spec, a.path(), 1);
  generate(spec, b.path(), 3);
  const auto ta = tree(a.path());
  CHECK(ta.size() > 6);
  CHECK(ta == tree(b.path()));

  testing::TempDir c("synth-c");
  spec.seed = 43;
  generate(spec, c.path());
  CHECK(ta != tree(c.path()));
}

TEST_CASE("written subjects load back and satisfy the recording invariants") {
  testing::TempDir dir("synth-load");
  auto spec = base_spec(5, 9);
  spec.duration_min = 10.0;
  const auto made = generate(spec, dir.path());
  const auto loaded = load_database(dir.path());
  REQUIRE(loaded.size() == made.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == made[i].subject.id);
    CHECK_NOTHROW(validate_subject(loaded[i]));
    CHECK(loaded[i].spo2.samples == made[i].subject.spo2.samples);
    CHECK(loaded[i].thoracic.samples == made[i].subject.thoracic.samples);
    CHECK(loaded[i].duration_s() == doctest::Approx(600.0));
  }
  CHECK(std::filesystem::exists(dir / "cohort_spec.json"));
}

TEST_CASE("planted event counts follow the drawn rates") {
  const auto subjects = generate_subjects(base_spec(40, 5));
  std::array<std::size_t, 4> seen{};
  for (const auto& s : subjects) {
    ++seen[static_cast<std::size_t>(s.severity)];
    const double expected = s.target_rate_per_hour * s.subject.recording_hours();
    CHECK(std::fabs(static_cast<double>(s.subject.annotations->size()) - expected) <= 1.0);
    CHECK(severity_from_rei(s.target_rate_per_hour) == s.severity);
    const auto& ev = *s.subject.annotations;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      CHECK(ev[i].duration_s >= 10.0);
      CHECK(ev[i].duration_s <= 120.0);
      if (i > 0) CHECK(ev[i - 1].end_s() <= ev[i].start_s);
    }
  }
  // Largest-remainder allocation of 40 * (10, 11, 4, 37) / 62.
  CHECK(seen == std::array<std::size_t, 4>{6, 7, 3, 24});
}

TEST_CASE("severe and normal event counts") {
  auto severe = base_spec(1, 1);
  severe.fixed_rate_per_hour = 63.8;
  const auto s = generate_subjects(severe).front();
  CHECK(std::fabs(static_cast<double>(s.subject.annotations->size()) - 31.9) <= 1.0);

  auto normal = base_spec(1, 2);
  normal.severity_mix = {1.0, 0.0, 0.0, 0.0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    normal.seed = seed;
    const auto n = generate_subjects(normal).front();
    CHECK(n.severity == Severity::kNormal);
    CHECK(n.subject.annotations->size() <= 2);
  }
}

TEST_CASE("planted events suppress effort and lower SpO2") {
  auto spec = base_spec(6, 17);
  spec.severity_mix = {0.0, 0.0, 0.0, 1.0};
  spec.noise_level = 0.0;
  const auto quiet = generate_subjects(spec);
  spec.noise_level = 0.05;
  const auto noisy = generate_subjects(spec);
  for (const auto& s : quiet) {
    for (const auto& e : *s.subject.annotations) {
      const double before = peak_to_peak(s.subject.thoracic, e.start_s - 20.0, e.start_s);
      CHECK(peak_to_peak(s.subject.thoracic, e.start_s, e.end_s()) <= 0.1 * before);
      CHECK(peak_to_peak(s.subject.abdominal, e.start_s, e.end_s()) <=
            0.1 * peak_to_peak(s.subject.abdominal, e.start_s - 20.0, e.start_s));
    }
  }
  for (const auto* cohort : {&quiet, &noisy}) {
    for (const auto& s : *cohort) {
      const auto& spo2 = s.subject.spo2.samples;
      for (const auto& e : *s.subject.annotations) {
        const auto onset = static_cast<std::size_t>(e.start_s);
        const double base = median_of({spo2.begin() + static_cast<long>(onset) - 5, spo2.begin() + static_cast<long>(onset)});
        const auto stop = std::min(spo2.size(), static_cast<std::size_t>(e.end_s()) + 21);
        const double low = *std::min_element(spo2.begin() + static_cast<long>(onset), spo2.begin() + static_cast<long>(stop));
        CHECK(base - low >= 3.0);
      }
    }
  }
}

TEST_CASE("paradoxical events are anti-phase on the abdominal channel") {
  auto spec = base_spec(4, 23);
  spec.severity_mix = {0.0, 0.0, 0.0, 1.0};
  spec.noise_level = 0.0;
  spec.paradox_fraction = 1.0;
  for (const auto& s : generate_subjects(spec)) {
    for (const auto& e : *s.subject.annotations) {
      CHECK(e.kind == EventKind::kOsa);
      const auto& th = s.subject.thoracic;
      const auto& ab = s.subject.abdominal;
      const auto a = static_cast<std::size_t>(e.start_s * th.sample_rate_hz);
      const auto b = static_cast<std::size_t>(e.end_s() * th.sample_rate_hz);
      double mt = 0.0, ma = 0.0;
      for (auto i = a; i < b; ++i) {
        mt += th.samples[i];
        ma += ab.samples[i];
      }
      mt /= static_cast<double>(b - a);
      ma /= static_cast<double>(b - a);
      double cov = 0.0;
      for (auto i = a; i < b; ++i) cov += (th.samples[i] - mt) * (ab.samples[i] - ma);
      CHECK(cov < 0.0);
    }
  }
  spec.paradox_fraction = 0.0;
  for (const auto& s : generate_subjects(spec)) {
    for (const auto& e : *s.subject.annotations) CHECK(e.kind == EventKind::kCsa);
  }
}

TEST_CASE("invalid cohort specs are rejected") {
  auto check_invalid = [](CohortSpec spec) {
    try {
      validate(spec);
      FAIL("expected InvalidSpec");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kInvalidSpec);
    }
  };
  check_invalid(base_spec(0, 1));
  auto s = base_spec(3, 1);
  s.severity_mix = {0.5, 0.5, 0.5, 0.0};
  check_invalid(s);
  s = base_spec(3, 1);
  s.severity_mix = {-0.5, 0.5, 0.5, 0.5};
  check_invalid(s);
  s = base_spec(3, 1);
  s.duration_min = 0.0;
  check_invalid(s);
  s = base_spec(3, 1);
  s.noise_level = -0.1;
  check_invalid(s);
  s = base_spec(3, 1);
  s.effort_fs_hz = 1.0;
  check_invalid(s);
  CHECK_NOTHROW(validate(base_spec(3, 1)));
}
