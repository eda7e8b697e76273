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

#include <cmath>
#include <numbers>
#include <vector>

#include "apnea/error.hpp"
#include "apnea/features.hpp"
#include "apnea/stats.hpp"
#include "fixtures.hpp"

using namespace apnea;

namespace {

std::vector<double> sine(double freq, double fs, double seconds, double amp = 1.0, double phase = 0.0,
                         double offset = 0.0) {
  std::vector<double> out(static_cast<std::size_t>(std::lround(seconds * fs)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = offset + amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs + phase);
  }
  return out;
}

}  // namespace

TEST_CASE("stats helpers") {
  const std::vector<double> v{0.1, 0.5, 0.9};
  CHECK(stats::median(v) == doctest::Approx(0.5));
  CHECK(stats::mad(v) == doctest::Approx(0.4));
  const std::vector<double> even{4.0, 1.0, 3.0, 2.0};
  CHECK(stats::median(even) == 2.5);
  CHECK(stats::quantile(even, 0.25) == doctest::Approx(1.75));
  CHECK(stats::interquartile_range(even) == doctest::Approx(1.5));
  CHECK(stats::variance(even) == doctest::Approx(1.25));
  CHECK(stats::pearson(even, std::vector<double>{1.0, 1.0, 1.0, 1.0}) == 0.0);
}

TEST_CASE("frequency of a swept sinusoid is within one bin of the truth") {
  // One bin of a 10 s window is 0.1 Hz.
  const double bin = 1.0 / 10.0;
  for (double fs : {4.0, 8.0, 25.0}) {
    for (int k = 0; k <= 53; ++k) {
      const double f = 0.12 + 0.01 * k;
      for (double phase : {0.0, 1.0, 2.5}) {
        const auto x = sine(f, fs, 10.0, 1.0, phase);
        const auto r = respiratory_features(x, x, fs);
        CHECK_MESSAGE(std::abs(r.frequency_hz - f) <= bin, "fs=" << fs << " f=" << f << " got " << r.frequency_hz);
        CHECK_FALSE(r.degenerate);
      }
    }
  }
}

TEST_CASE("paradox score separates in-phase from anti-phase effort") {
  const auto t = sine(0.3, 8.0, 10.0);
  const auto a = sine(0.3, 8.0, 10.0, -0.7);
  const auto anti = respiratory_features(t, a, 8.0);
  CHECK(anti.paradox_score <= -0.95);
  CHECK(anti.paradox_flag);
  CHECK(anti.frequency_hz == doctest::Approx(0.3).epsilon(0.34));

  const auto in = respiratory_features(t, sine(0.3, 8.0, 10.0, 0.4, 0.0, 3.0), 8.0);
  CHECK(in.paradox_score >= 0.95);
  CHECK_FALSE(in.paradox_flag);
}

TEST_CASE("amplitude is 1-homogeneous and paradox score is gain and offset invariant") {
  const auto t = sine(0.22, 8.0, 10.0, 1.0, 0.3);
  const auto a = sine(0.22, 8.0, 10.0, 0.6, 2.0);
  const auto base = respiratory_features(t, a, 8.0);
  std::vector<double> t2 = t, a2 = a;
  for (auto& v : t2) v = 2.0 * v + 5.0;
  for (auto& v : a2) v = 2.0 * v - 1.0;
  const auto scaled = respiratory_features(t2, a2, 8.0);
  CHECK(scaled.amplitude_thoracic == doctest::Approx(2.0 * base.amplitude_thoracic));
  CHECK(scaled.amplitude_abdominal == doctest::Approx(2.0 * base.amplitude_abdominal));
  CHECK(scaled.paradox_score == doctest::Approx(base.paradox_score));
  CHECK(scaled.frequency_hz == base.frequency_hz);
}

TEST_CASE("flat effort is degenerate") {
  const std::vector<double> zero(80, 0.0);
  const auto r = respiratory_features(zero, zero, 8.0);
  CHECK(r.degenerate);
  CHECK(r.amplitude_thoracic == 0.0);
  CHECK(r.amplitude_abdominal == 0.0);
  CHECK(r.paradox_score == 0.0);
  CHECK_FALSE(r.paradox_flag);
}

TEST_CASE("channel windows must have equal length") {
  const std::vector<double> x(80, 1.0), y(79, 1.0);
  CHECK_THROWS_AS(respiratory_features(x, y, 8.0), Error);
}

TEST_CASE("SpO2 features of a constant signal are exact") {
  const std::vector<double> w10(10, 97.0), w20(20, 97.0);
  const auto s = spo2_features(w10, w20);
  CHECK(s.min == 97.0);
  CHECK(s.max == 97.0);
  CHECK(s.median == 97.0);
  CHECK(s.mean == 97.0);
  CHECK(s.deriv_var == 0.0);
  CHECK(s.desat_depth == 0.0);
}

TEST_CASE("SpO2 desaturation depth and derivative variance") {
  std::vector<double> w20(15, 96.0);
  w20.insert(w20.end(), 5, 92.0);
  const std::vector<double> w10(10, 96.0);
  CHECK(spo2_features(w10, w20).desat_depth == 4.0);

  std::vector<double> ramp;
  for (int i = 0; i < 10; ++i) ramp.push_back(98.0 - i);
  const auto r = spo2_features(ramp, std::vector<double>(20, 95.0));
  CHECK(r.deriv_var == 0.0);
  CHECK(r.min == 89.0);
  CHECK(r.max == 98.0);
  CHECK(r.median == 93.5);
  CHECK(r.mean == 93.5);

  // Rising window: median below nothing, depth floored at zero.
  std::vector<double> rising;
  for (int i = 0; i < 20; ++i) rising.push_back(90.0 + 0.1 * i);
  CHECK(spo2_features(w10, rising).desat_depth >= 0.0);
}

TEST_CASE("block-average resampling") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  CHECK(resample_by_averaging(x, 8.0, 4.0) == std::vector<double>{1.5, 3.5, 5.5});
  CHECK(resample_by_averaging(x, 4.0, 4.0) == x);
}

TEST_CASE("extract_features produces one row per grid epoch") {
  const auto s = testing::breathing_subject("A", 20.0);
  const auto rows = extract_features(s);
  REQUIRE(rows.size() == 21);
  CHECK(rows[20].start_s == 10.0);
  for (const auto& r : rows) {
    CHECK(r.spo2_min <= r.spo2_median);
    CHECK(r.spo2_median <= r.spo2_max);
    CHECK(r.spo2_desat_depth >= 0.0);
    CHECK(r.resp_frequency >= 0.05);
    CHECK(r.resp_frequency <= 1.0);
    CHECK(r.paradox_score >= 0.95);
  }
  CHECK(extract_features(s) == rows);
}

TEST_CASE("scaling effort channels scales amplitudes only") {
  auto s = testing::breathing_subject("A", 60.0);
  const auto base = extract_features(s);
  for (auto& v : s.thoracic.samples) v *= 2.0;
  for (auto& v : s.abdominal.samples) v *= 2.0;
  const auto scaled = extract_features(s);
  REQUIRE(scaled.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(scaled[i].resp_amplitude_thoracic == doctest::Approx(2.0 * base[i].resp_amplitude_thoracic));
    CHECK(scaled[i].resp_amplitude_abdominal == doctest::Approx(2.0 * base[i].resp_amplitude_abdominal));
    CHECK(scaled[i].resp_frequency == base[i].resp_frequency);
    CHECK(scaled[i].paradox_score == doctest::Approx(base[i].paradox_score));
  }
}

TEST_CASE("appending signal leaves earlier rows unchanged") {
  auto s = testing::breathing_subject("A", 90.0, 8.0, 0.27);
  for (std::size_t k = 0; k < s.spo2.samples.size(); ++k) s.spo2.samples[k] = 95.0 + std::sin(0.3 * k);
  auto longer = testing::breathing_subject("A", 100.0, 8.0, 0.27);
  for (std::size_t k = 0; k < longer.spo2.samples.size(); ++k) longer.spo2.samples[k] = 95.0 + std::sin(0.3 * k);

  const auto a = extract_features(s);
  const auto b = extract_features(longer);
  REQUIRE(b.size() == a.size() + 20);
  // Rows whose centered 20 s SpO2 window is clamped at the end of the shorter
  // recording (the last ten) are the only ones allowed to differ.
  for (std::size_t i = 0; i + 10 < a.size(); ++i) CHECK(a[i] == b[i]);
  for (std::size_t i = a.size() - 10; i < a.size(); ++i) {
    CHECK(a[i].resp_amplitude_thoracic == b[i].resp_amplitude_thoracic);
    CHECK(a[i].spo2_min == b[i].spo2_min);
  }
}

TEST_CASE("classifier inputs are subject-referenced") {
  auto s = testing::breathing_subject("A", 60.0);
  const auto rows = extract_features(s);
  const auto m = classifier_inputs(rows);
  CHECK(m.rows == rows.size());
  CHECK(m.cols == kClassifierInputDim);
  CHECK(classifier_input_names().size() == kClassifierInputDim);
  // Amplitudes are relative to their subject median; constant SpO2 sits at 0.
  std::vector<double> thor, abd;
  for (std::size_t i = 0; i < m.rows; ++i) {
    thor.push_back(m.row(i)[0]);
    abd.push_back(m.row(i)[1]);
    CHECK(m.row(i)[6] == 0.0);
  }
  CHECK(stats::median(thor) == doctest::Approx(1.0));
  CHECK(stats::median(abd) == doctest::Approx(1.0));

  for (auto& v : s.spo2.samples) v -= 3.0;
  const auto shifted = classifier_inputs(extract_features(s));
  CHECK(shifted.data == m.data);
}

TEST_CASE("recordings shorter than 20 s are rejected") {
  const auto s = testing::breathing_subject("A", 19.0);
  CHECK_THROWS_AS(extract_features(s), Error);
}
