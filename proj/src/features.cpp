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

#include "apnea/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <unsupported/Eigen/FFT>

#include "apnea/error.hpp"
#include "apnea/stats.hpp"
#include "csv.hpp"

namespace apnea {

namespace {

constexpr std::size_t kZeroPadFactor = 8;

std::vector<double> detrend(std::span<const double> x) {
  const std::size_t n = x.size();
  const double t_mean = 0.5 * static_cast<double>(n - 1);
  const double x_mean = stats::mean(x);
  double stt = 0.0, stx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - t_mean;
    stt += dt * dt;
    stx += dt * (x[i] - x_mean);
  }
  const double slope = stt > 0.0 ? stx / stt : 0.0;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - x_mean - slope * (static_cast<double>(i) - t_mean);
  return out;
}

bool in_band(std::size_t bin, std::size_t nfft, double rate, const FeatureConfig& cfg) {
  const std::size_t folded = std::min(bin, nfft - bin);
  const double f = static_cast<double>(folded) * rate / static_cast<double>(nfft);
  return f >= cfg.band_low_hz - 1e-12 && f <= cfg.band_high_hz + 1e-12;
}

std::vector<double> band_limit(Eigen::FFT<double>& fft, const std::vector<double>& x, double rate,
                               const FeatureConfig& cfg) {
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, x);
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    if (!in_band(k, spectrum.size(), rate, cfg)) spectrum[k] = 0.0;
  }
  std::vector<double> out;
  fft.inv(out, spectrum);
  out.resize(x.size());
  return out;
}

double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

bool is_flat(std::span<const double> limited, std::span<const double> raw) {
  return energy(limited) <= 1e-20 * std::max(1.0, energy(raw));
}

}  // namespace

void validate(const FeatureConfig& cfg) {
  if (!(cfg.band_low_hz > 0.0 && cfg.band_high_hz > cfg.band_low_hz)) {
    raise(ErrorKind::kInvalidConfig, "feature band must satisfy 0 < low < high");
  }
  if (!(cfg.paradox_threshold >= -1.0 && cfg.paradox_threshold <= 1.0)) {
    raise(ErrorKind::kInvalidConfig, "paradox_threshold must lie in [-1, 1]");
  }
  const double per_stride = cfg.analysis_rate_hz * kEpochStrideS;
  if (!(cfg.analysis_rate_hz > 0.0) || per_stride != std::floor(per_stride)) {
    raise(ErrorKind::kInvalidConfig, "analysis_rate_hz must give a whole number of samples per 0.5 s");
  }
  if (cfg.band_high_hz >= 0.5 * cfg.analysis_rate_hz) {
    raise(ErrorKind::kInvalidConfig, "band_high_hz must stay below the analysis Nyquist rate");
  }
}

RespiratoryFeatures respiratory_features(std::span<const double> thoracic, std::span<const double> abdominal,
                                         double sample_rate_hz, const FeatureConfig& cfg) {
  if (thoracic.size() != abdominal.size()) {
    raise(ErrorKind::kDimensionMismatch, "thoracic and abdominal windows differ in length");
  }
  if (thoracic.size() < 4 || !(sample_rate_hz > 0.0)) {
    raise(ErrorKind::kDimensionMismatch, "respiratory window too short");
  }

  Eigen::FFT<double> fft;
  const auto thor_detrended = detrend(thoracic);
  const auto abd_detrended = detrend(abdominal);
  const auto thor = band_limit(fft, thor_detrended, sample_rate_hz, cfg);
  const auto abd = band_limit(fft, abd_detrended, sample_rate_hz, cfg);

  const bool thor_flat = is_flat(thor, thoracic);
  const bool abd_flat = is_flat(abd, abdominal);

  RespiratoryFeatures out;
  out.amplitude_thoracic = thor_flat ? 0.0 : stats::interquartile_range(thor);
  out.amplitude_abdominal = abd_flat ? 0.0 : stats::interquartile_range(abd);
  if (thor_flat && abd_flat) {
    out.degenerate = true;
    return out;
  }

  const std::size_t padded = thor.size() * kZeroPadFactor;
  std::vector<double> thor_padded(padded, 0.0), abd_padded(padded, 0.0);
  std::copy(thor.begin(), thor.end(), thor_padded.begin());
  std::copy(abd.begin(), abd.end(), abd_padded.begin());
  std::vector<std::complex<double>> thor_spec, abd_spec;
  fft.fwd(thor_spec, thor_padded);
  fft.fwd(abd_spec, abd_padded);

  double best = -1.0;
  for (std::size_t k = 1; k <= padded / 2; ++k) {
    const double f = static_cast<double>(k) * sample_rate_hz / static_cast<double>(padded);
    if (f < cfg.band_low_hz - 1e-12 || f > cfg.band_high_hz + 1e-12) continue;
    const double magnitude = std::abs(thor_spec[k]) + std::abs(abd_spec[k]);
    if (magnitude > best) {
      best = magnitude;
      out.frequency_hz = f;
    }
  }

  out.paradox_score = (thor_flat || abd_flat) ? 0.0 : stats::pearson(thor, abd);
  out.paradox_flag = out.paradox_score < cfg.paradox_threshold;
  return out;
}

Spo2Features spo2_features(std::span<const double> window_10s, std::span<const double> window_20s) {
  Spo2Features out;
  if (window_10s.empty() || window_20s.empty()) return out;
  const auto [lo, hi] = std::minmax_element(window_10s.begin(), window_10s.end());
  out.min = *lo;
  out.max = *hi;
  out.median = stats::median(window_10s);
  out.mean = stats::mean(window_10s);
  if (window_10s.size() >= 2) {
    std::vector<double> diffs(window_10s.size() - 1);
    for (std::size_t i = 0; i + 1 < window_10s.size(); ++i) diffs[i] = window_10s[i + 1] - window_10s[i];
    out.deriv_var = stats::variance(diffs);
  }
  const double wide_min = *std::min_element(window_20s.begin(), window_20s.end());
  out.desat_depth = std::max(0.0, stats::median(window_20s) - wide_min);
  return out;
}

std::vector<double> resample_by_averaging(std::span<const double> samples, double input_rate_hz,
                                          double output_rate_hz) {
  if (input_rate_hz == output_rate_hz) return {samples.begin(), samples.end()};
  const double ratio = input_rate_hz / output_rate_hz;
  const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(samples.size()) / ratio + 1e-9));
  auto boundary = [&](std::size_t k) {
    const double b = std::ceil(static_cast<double>(k) * ratio - 1e-9);
    return std::min(samples.size(), static_cast<std::size_t>(std::max(0.0, b)));
  };
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t lo = boundary(k);
    const std::size_t hi = std::max(lo + 1, boundary(k + 1));
    double sum = 0.0;
    for (std::size_t j = lo; j < hi && j < samples.size(); ++j) sum += samples[j];
    out.push_back(sum / static_cast<double>(std::min(hi, samples.size()) - lo));
  }
  return out;
}

double analysis_duration_s(const Subject& subject, const FeatureConfig& cfg) {
  const double ratio = subject.thoracic.sample_rate_hz / cfg.analysis_rate_hz;
  const double effort_samples =
      std::floor(static_cast<double>(subject.thoracic.samples.size()) / ratio + 1e-9);
  return std::min(subject.spo2.duration_s(), effort_samples / cfg.analysis_rate_hz);
}

std::vector<EpochFeatures> extract_features(const Subject& subject, const FeatureConfig& cfg) {
  validate(cfg);
  const double rate = cfg.analysis_rate_hz;
  const auto thor = resample_by_averaging(subject.thoracic.samples, subject.thoracic.sample_rate_hz, rate);
  const auto abd = resample_by_averaging(subject.abdominal.samples, subject.abdominal.sample_rate_hz, rate);
  const auto grid = build_epoch_grid(analysis_duration_s(subject, cfg));

  const auto window = static_cast<std::size_t>(std::lround(kEpochWindowS * rate));
  const auto stride = static_cast<std::size_t>(std::lround(kEpochStrideS * rate));
  const std::span<const double> spo2(subject.spo2.samples);
  const std::size_t n_spo2 = spo2.size();

  std::vector<EpochFeatures> rows(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto resp = respiratory_features(std::span<const double>(thor).subspan(i * stride, window),
                                           std::span<const double>(abd).subspan(i * stride, window), rate, cfg);
    // SpO2 sample k sits at t = k s; the epoch [i/2, i/2 + 10) starts at sample ceil(i/2).
    const std::size_t first = (i + 1) / 2;
    const auto wide_lo = static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(first) - 5, 0,
                                   static_cast<std::ptrdiff_t>(n_spo2) - 20));
    const auto sat = spo2_features(spo2.subspan(first, 10), spo2.subspan(wide_lo, 20));

    auto& r = rows[i];
    r.start_s = grid.start(i);
    r.resp_amplitude_thoracic = resp.amplitude_thoracic;
    r.resp_amplitude_abdominal = resp.amplitude_abdominal;
    r.resp_frequency = resp.frequency_hz;
    r.paradox_score = resp.paradox_score;
    r.paradox_flag = resp.paradox_flag;
    r.degenerate = resp.degenerate;
    r.spo2_min = sat.min;
    r.spo2_max = sat.max;
    r.spo2_median = sat.median;
    r.spo2_mean = sat.mean;
    r.spo2_deriv_var = sat.deriv_var;
    r.spo2_desat_depth = sat.desat_depth;
  }
  return rows;
}

void write_features_csv(const std::filesystem::path& path, std::span<const EpochFeatures> rows) {
  std::string out =
      "start_s,resp_amplitude_thoracic,resp_amplitude_abdominal,resp_frequency,paradox_score,paradox_flag,"
      "degenerate,spo2_min,spo2_max,spo2_median,spo2_mean,spo2_deriv_var,spo2_desat_depth\n";
  for (const auto& r : rows) {
    for (double v : {r.start_s, r.resp_amplitude_thoracic, r.resp_amplitude_abdominal, r.resp_frequency,
                     r.paradox_score}) {
      out += csv::format_double(v);
      out += ',';
    }
    out += r.paradox_flag ? "1," : "0,";
    out += r.degenerate ? "1" : "0";
    for (double v : {r.spo2_min, r.spo2_max, r.spo2_median, r.spo2_mean, r.spo2_deriv_var, r.spo2_desat_depth}) {
      out += ',';
      out += csv::format_double(v);
    }
    out += '\n';
  }
  csv::write_text(path, out);
}

std::vector<std::string> classifier_input_names() {
  return {"amplitude_thoracic_rel", "amplitude_abdominal_rel", "frequency", "paradox_score",
          "spo2_min_rel",           "spo2_max_rel",            "spo2_median_rel", "spo2_mean_rel",
          "spo2_deriv_var",         "spo2_desat_depth"};
}

void FeatureMatrix::append(std::span<const double> values) {
  if (rows == 0 && cols == 0) cols = values.size();
  if (values.size() != cols) raise(ErrorKind::kDimensionMismatch, "row width differs from matrix width");
  data.insert(data.end(), values.begin(), values.end());
  ++rows;
}

FeatureMatrix classifier_inputs(std::span<const EpochFeatures> epochs) {
  std::vector<double> thor, abd, level;
  thor.reserve(epochs.size());
  abd.reserve(epochs.size());
  level.reserve(epochs.size());
  for (const auto& e : epochs) {
    thor.push_back(e.resp_amplitude_thoracic);
    abd.push_back(e.resp_amplitude_abdominal);
    level.push_back(e.spo2_median);
  }
  auto reference = [](const std::vector<double>& v) {
    const double m = stats::median(v);
    return m > 0.0 ? m : 1.0;
  };
  const double thor_ref = reference(thor);
  const double abd_ref = reference(abd);
  const double spo2_ref = stats::median(level);

  FeatureMatrix m;
  m.cols = kClassifierInputDim;
  m.data.reserve(epochs.size() * kClassifierInputDim);
  for (const auto& e : epochs) {
    const double row[kClassifierInputDim] = {e.resp_amplitude_thoracic / thor_ref,
                                             e.resp_amplitude_abdominal / abd_ref,
                                             e.resp_frequency,
                                             e.paradox_score,
                                             e.spo2_min - spo2_ref,
                                             e.spo2_max - spo2_ref,
                                             e.spo2_median - spo2_ref,
                                             e.spo2_mean - spo2_ref,
                                             e.spo2_deriv_var,
                                             e.spo2_desat_depth};
    m.append(row);
  }
  return m;
}

}  // namespace apnea
