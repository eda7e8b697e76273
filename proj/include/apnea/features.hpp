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
#include <span>
#include <string>
#include <vector>

#include "apnea/epoch_grid.hpp"
#include "apnea/recording.hpp"

namespace apnea {

struct FeatureConfig {
  double band_low_hz = 0.1;
  double band_high_hz = 0.7;
  /// Pearson correlation below this marks paradoxical (anti-phase) effort.
  double paradox_threshold = -0.3;
  /// Effort channels are block-averaged to this rate before windowing.
  double analysis_rate_hz = 4.0;
};

void validate(const FeatureConfig& cfg);

struct RespiratoryFeatures {
  double amplitude_thoracic = 0.0;
  double amplitude_abdominal = 0.0;
  double frequency_hz = 0.0;
  double paradox_score = 0.0;
  bool paradox_flag = false;
  /// Both channels flat: amplitudes and paradox score are 0, frequency is not meaningful.
  bool degenerate = false;
};

/// Amplitude (IQR), dominant breathing frequency and thoraco-abdominal
/// correlation of one 10 s window. Each channel is detrended and band-limited
/// with an FFT-domain mask; the frequency is the peak of the summed magnitude
/// spectra (zero-padded 8x) inside the breathing band.
RespiratoryFeatures respiratory_features(std::span<const double> thoracic, std::span<const double> abdominal,
                                         double sample_rate_hz, const FeatureConfig& cfg = {});

struct Spo2Features {
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double deriv_var = 0.0;
  double desat_depth = 0.0;
};

/// Level statistics over the 10 s window; desaturation depth (median - min,
/// floored at 0) over the 20 s window.
Spo2Features spo2_features(std::span<const double> window_10s, std::span<const double> window_20s);

struct EpochFeatures {
  double start_s = 0.0;
  double resp_amplitude_thoracic = 0.0;
  double resp_amplitude_abdominal = 0.0;
  double resp_frequency = 0.0;
  double paradox_score = 0.0;
  bool paradox_flag = false;
  bool degenerate = false;
  double spo2_min = 0.0;
  double spo2_max = 0.0;
  double spo2_median = 0.0;
  double spo2_mean = 0.0;
  double spo2_deriv_var = 0.0;
  double spo2_desat_depth = 0.0;

  bool operator==(const EpochFeatures&) const = default;
};

/// Block-average resampling; output sample k is the mean of the input samples
/// falling in [k / rate, (k + 1) / rate).
std::vector<double> resample_by_averaging(std::span<const double> samples, double input_rate_hz,
                                          double output_rate_hz);

/// Analysis duration: the shorter of the SpO2 and resampled effort spans.
double analysis_duration_s(const Subject& subject, const FeatureConfig& cfg = {});

std::vector<EpochFeatures> extract_features(const Subject& subject, const FeatureConfig& cfg = {});

void write_features_csv(const std::filesystem::path& path, std::span<const EpochFeatures> rows);

/// Classifier input built from epoch features. Amplitudes are divided by the
/// subject's median amplitude and SpO2 levels are taken relative to the
/// subject's median SpO2, so rows from different subjects share one scale.
inline constexpr std::size_t kClassifierInputDim = 10;
std::vector<std::string> classifier_input_names();

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  void append(std::span<const double> values);
};

FeatureMatrix classifier_inputs(std::span<const EpochFeatures> epochs);

}  // namespace apnea
