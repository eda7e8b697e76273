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

#include "apnea/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <json.hpp>

#include "apnea/error.hpp"
#include "csv.hpp"
#include "parallel.hpp"

namespace apnea {

namespace {

using json = nlohmann::json;
using Rng = std::mt19937_64;

struct Moments {
  double mean;
  double sd;
};

struct GroupCalibration {
  Moments rate;  // events per hour
  double rate_lo;
  double rate_hi;
  double female_fraction;
  Moments male_age, male_bmi;
  Moments female_age, female_bmi;
  double p_hypertension, p_diabetes, p_hypothyroidism;
};

// Group means and SDs from the clinical cohort demographics. Rate windows
// keep every draw at least half a grade away from the severity cut points.
constexpr std::array<GroupCalibration, kSeverityCount> kGroups{{
    {{2.2, 1.4}, 0.0, 4.0, 0.6, {36.8, 17.0}, {22.1, 1.4}, {33.5, 17.2}, {22.6, 3.5}, 0.10, 0.05, 0.05},
    {{9.9, 2.7}, 6.0, 11.0, 4.0 / 11.0, {29.9, 8.1}, {23.5, 3.9}, {53.8, 13.8}, {27.5, 4.8}, 0.20, 0.10, 0.05},
    {{24.9, 5.3}, 19.0, 27.0, 0.0, {49.8, 13.1}, {27.0, 1.6}, {49.8, 13.1}, {27.0, 1.6}, 0.35, 0.15, 0.10},
    {{63.8, 23.4}, 34.0, 80.0, 3.0 / 37.0, {51.0, 13.6}, {27.6, 3.5}, {67.7, 1.2}, {29.6, 5.9}, 0.50, 0.25, 0.10},
}};

constexpr double kMarginS = 30.0;
constexpr double kMinGapS = 30.0;
constexpr double kMinPlantedS = 14.0;
constexpr double kMeanExtraS = 10.0;
constexpr double kRecoveryS = 10.0;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double truncated_normal(Rng& rng, Moments m, double lo, double hi) {
  std::normal_distribution<double> dist(m.mean, m.sd);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double v = dist(rng);
    if (v >= lo && v <= hi) return v;
  }
  return std::clamp(m.mean, lo, hi);
}

/// Rounds to `decimals` places so the CSV text stays short.
double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

std::uint64_t subject_seed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eedu};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

/// Largest-remainder allocation of n subjects over the mix, then a seeded shuffle.
std::vector<Severity> allocate_severities(const CohortSpec& spec) {
  std::array<std::size_t, kSeverityCount> counts{};
  std::array<double, kSeverityCount> remainder{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < kSeverityCount; ++c) {
    const double exact = spec.severity_mix[c] * static_cast<double>(spec.n_subjects);
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - static_cast<double>(counts[c]);
    assigned += counts[c];
  }
  std::array<std::size_t, kSeverityCount> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < spec.n_subjects; ++i, ++assigned) ++counts[order[i % kSeverityCount]];

  std::vector<Severity> out;
  for (std::size_t c = 0; c < kSeverityCount; ++c) out.insert(out.end(), counts[c], static_cast<Severity>(c));
  Rng rng(subject_seed(spec.seed, static_cast<std::size_t>(-1)));
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

PhenotypeProfile draw_profile(Rng& rng, const GroupCalibration& g) {
  PhenotypeProfile p;
  p.gender = uniform(rng, 0.0, 1.0) < g.female_fraction ? Gender::kFemale : Gender::kMale;
  const bool female = p.gender == Gender::kFemale;
  p.age = std::round(truncated_normal(rng, female ? g.female_age : g.male_age, 18.0, 90.0));
  p.bmi = round_to(truncated_normal(rng, female ? g.female_bmi : g.male_bmi, 16.0, 45.0), 1);
  p.comorbidities.hypertension = uniform(rng, 0.0, 1.0) < g.p_hypertension;
  p.comorbidities.diabetes = uniform(rng, 0.0, 1.0) < g.p_diabetes;
  p.comorbidities.hypothyroidism = uniform(rng, 0.0, 1.0) < g.p_hypothyroidism;
  return p;
}

/// Places `count` events in [0, total_s) with margins and minimum gaps,
/// shrinking durations and then the count when the request does not fit.
std::vector<EventAnnotation> place_events(Rng& rng, std::size_t count, double total_s, double paradox_fraction) {
  std::exponential_distribution<double> extra(1.0 / kMeanExtraS);
  std::vector<double> durations(count);
  for (auto& d : durations) d = std::min(kMaxEventS, kMinPlantedS + extra(rng));

  auto slack_for = [&](const std::vector<double>& ds) {
    const double n = static_cast<double>(ds.size());
    return total_s - 2.0 * kMarginS - kMinGapS * std::max(0.0, n - 1.0) -
           std::accumulate(ds.begin(), ds.end(), 0.0);
  };
  while (!durations.empty() && slack_for(durations) < 0.0) {
    const double excess = std::accumulate(durations.begin(), durations.end(), 0.0) -
                          kMinPlantedS * static_cast<double>(durations.size());
    const double deficit = -slack_for(durations);
    if (excess >= deficit && excess > 0.0) {
      const double keep = (excess - deficit) / excess;
      for (auto& d : durations) d = kMinPlantedS + std::floor((d - kMinPlantedS) * keep * 2.0) / 2.0;
    } else {
      durations.pop_back();
      for (auto& d : durations) d = kMinPlantedS;
    }
  }
  for (auto& d : durations) d = std::max(kMinPlantedS, std::floor(d * 2.0) / 2.0);

  // Split the free time into count+1 random shares; floor to the half second.
  const double slack = std::max(0.0, slack_for(durations));
  std::vector<double> shares(durations.size() + 1);
  for (auto& s : shares) s = extra(rng);
  const double share_sum = std::accumulate(shares.begin(), shares.end(), 0.0);

  std::vector<EventAnnotation> events;
  double t = kMarginS;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    t += std::floor(slack * shares[i] / share_sum * 2.0) / 2.0;
    EventAnnotation e;
    const bool paradox = uniform(rng, 0.0, 1.0) < paradox_fraction;
    e.kind = paradox ? EventKind::kOsa : EventKind::kCsa;
    e.start_s = t;
    e.duration_s = durations[i];
    events.push_back(e);
    t += durations[i] + kMinGapS;
  }
  return events;
}

SyntheticSubject make_subject(const CohortSpec& spec, std::size_t index, Severity severity) {
  Rng rng(subject_seed(spec.seed, index));
  const auto& g = kGroups[static_cast<std::size_t>(severity)];

  SyntheticSubject out;
  out.severity = severity;
  Subject& s = out.subject;
  char id[16];
  std::snprintf(id, sizeof id, "S%03zu", index + 1);
  s.id = id;
  s.profile = draw_profile(rng, g);

  const double total_s = std::round(spec.duration_min * 60.0);
  const double hours = total_s / 3600.0;
  out.target_rate_per_hour = spec.fixed_rate_per_hour ? *spec.fixed_rate_per_hour
                                                      : truncated_normal(rng, g.rate, g.rate_lo, g.rate_hi);
  const auto count = static_cast<std::size_t>(std::llround(out.target_rate_per_hour * hours));
  const auto events = place_events(rng, count, total_s, spec.paradox_fraction);

  // Per-event signal parameters, drawn in event order.
  struct Planted {
    double start, end, factor, sign, lag, depth;
  };
  std::vector<Planted> planted;
  for (const auto& e : events) {
    Planted p;
    p.start = e.start_s;
    p.end = e.end_s();
    p.factor = uniform(rng, 0.02, 0.08);
    p.sign = e.kind == EventKind::kOsa ? -1.0 : 1.0;
    p.lag = uniform(rng, 5.0, 15.0);
    p.depth = uniform(rng, 3.5, 7.0);
    planted.push_back(p);
  }

  // Effort: shared breathing oscillation, channel gains and offsets, additive noise.
  const double fs = spec.effort_fs_hz;
  const double freq = uniform(rng, 0.2, 0.3);
  const double amplitude = uniform(rng, 0.8, 1.2);
  const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double gain_t = uniform(rng, 0.7, 1.3), gain_a = uniform(rng, 0.7, 1.3);
  const double offset_t = uniform(rng, -0.5, 0.5), offset_a = uniform(rng, -0.5, 0.5);
  std::normal_distribution<double> effort_noise(0.0, spec.noise_level * amplitude);
  const auto n_effort = static_cast<std::size_t>(std::llround(total_s * fs));
  s.thoracic = {fs, std::vector<double>(n_effort), "a.u."};
  s.abdominal = {fs, std::vector<double>(n_effort), "a.u."};
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < n_effort; ++i) {
    const double t = static_cast<double>(i) / fs;
    while (cursor < planted.size() && planted[cursor].end <= t) ++cursor;
    double factor = 1.0, sign = 1.0;
    if (cursor < planted.size() && planted[cursor].start <= t) {
      factor = planted[cursor].factor;
      sign = planted[cursor].sign;
    }
    const double wave = amplitude * factor * std::sin(2.0 * std::numbers::pi * freq * t + phase);
    s.thoracic.samples[i] = round_to(gain_t * (offset_t + wave + effort_noise(rng)), 4);
    s.abdominal.samples[i] = round_to(gain_a * (offset_a + sign * wave + effort_noise(rng)), 4);
  }

  // SpO2: flat baseline with lagged linear dips and a short recovery.
  const double baseline = uniform(rng, 95.0, 98.0);
  std::normal_distribution<double> spo2_noise(0.0, 0.25 * std::min(1.0, spec.noise_level / 0.05));
  const auto n_spo2 = static_cast<std::size_t>(total_s);
  s.spo2 = {1.0, std::vector<double>(n_spo2), "percent"};
  for (std::size_t k = 0; k < n_spo2; ++k) {
    const double t = static_cast<double>(k);
    double value = baseline;
    for (const auto& p : planted) {
      const double onset = p.start + p.lag;
      const double nadir = p.end + p.lag;
      if (t < onset || t > nadir + kRecoveryS) continue;
      const double frac = t <= nadir ? (t - onset) / (nadir - onset) : 1.0 - (t - nadir) / kRecoveryS;
      value = std::min(value, baseline - p.depth * frac);
    }
    s.spo2.samples[k] = std::clamp(round_to(value + spo2_noise(rng), 2), 0.0, 100.0);
  }

  s.annotations = events;
  return out;
}

}  // namespace

void validate(const CohortSpec& spec) {
  auto fail = [](const std::string& msg) { raise(ErrorKind::kInvalidSpec, msg); };
  if (spec.n_subjects == 0) fail("n_subjects must be positive");
  if (spec.n_subjects > 999) fail("n_subjects must be at most 999");
  if (!(spec.duration_min >= 1.0 && spec.duration_min <= 24.0 * 60.0)) fail("duration_min must be in [1, 1440]");
  double total = 0.0;
  for (double f : spec.severity_mix) {
    if (!(f >= 0.0)) fail("severity_mix fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("severity_mix must sum to 1");
  if (!(spec.effort_fs_hz >= 4.0 && spec.effort_fs_hz <= 1000.0)) fail("effort_fs_hz must be in [4, 1000]");
  if (!(spec.noise_level >= 0.0 && spec.noise_level <= 1.0)) fail("noise_level must be in [0, 1]");
  if (!(spec.paradox_fraction >= 0.0 && spec.paradox_fraction <= 1.0)) fail("paradox_fraction must be in [0, 1]");
  if (spec.fixed_rate_per_hour && !(*spec.fixed_rate_per_hour >= 0.0 && std::isfinite(*spec.fixed_rate_per_hour))) {
    fail("fixed_rate_per_hour must be finite and non-negative");
  }
}

std::vector<SyntheticSubject> generate_subjects(const CohortSpec& spec, std::size_t jobs) {
  validate(spec);
  const auto severities = allocate_severities(spec);
  std::vector<SyntheticSubject> out(spec.n_subjects);
  detail::parallel_for(spec.n_subjects, jobs, [&](std::size_t i) { out[i] = make_subject(spec, i, severities[i]); });
  return out;
}

std::string cohort_spec_json(const CohortSpec& spec, const std::vector<SyntheticSubject>& subjects) {
  json j;
  j["n_subjects"] = spec.n_subjects;
  j["seed"] = spec.seed;
  j["duration_min"] = spec.duration_min;
  j["severity_mix"] = spec.severity_mix;
  j["effort_fs_hz"] = spec.effort_fs_hz;
  j["noise_level"] = spec.noise_level;
  j["paradox_fraction"] = spec.paradox_fraction;
  j["fixed_rate_per_hour"] = spec.fixed_rate_per_hour ? json(*spec.fixed_rate_per_hour) : json(nullptr);
  json rows = json::array();
  for (const auto& s : subjects) {
    rows.push_back({{"id", s.subject.id},
                    {"severity", std::string(to_string(s.severity))},
                    {"target_rate_per_hour", s.target_rate_per_hour},
                    {"planted_events", s.subject.annotations ? s.subject.annotations->size() : 0}});
  }
  j["subjects"] = rows;
  return j.dump(2) + "\n";
}

std::vector<SyntheticSubject> generate(const CohortSpec& spec, const std::filesystem::path& out_dir,
                                       std::size_t jobs) {
  auto subjects = generate_subjects(spec, jobs);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    raise(ErrorKind::kIo, "cannot create output directory '" + out_dir.string() + "'");
  }
  detail::parallel_for(subjects.size(), jobs,
                       [&](std::size_t i) { write_subject(out_dir / subjects[i].subject.id, subjects[i].subject); });
  csv::write_text(out_dir / "cohort_spec.json", cohort_spec_json(spec, subjects));
  return subjects;
}

}  // namespace apnea
