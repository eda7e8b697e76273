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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace apnea::oracle {

namespace {

double sorted_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double robust_scale(std::vector<double> values) {
  const double med = sorted_median(values);
  for (auto& v : values) v = std::abs(v - med);
  const double mad = sorted_median(values);
  return mad > 0.0 ? 1.4826 * mad : 1.0;
}

std::vector<std::string> neighbors(const PhenotypeProfile& query, std::span<const ReferenceProfile> database,
                                   const KnnConfig& cfg, const MetricScales& scales) {
  struct Candidate {
    std::string id;
    double pd;
    int cd;
  };
  std::vector<Candidate> all;
  for (const auto& r : database) {
    const auto& p = r.profile;
    const double pd = cfg.age_weight * std::abs(query.age - p.age) / scales.age_scale +
                      cfg.bmi_weight * std::abs(query.bmi - p.bmi) / scales.bmi_scale +
                      (query.gender != p.gender ? cfg.gender_weight : 0.0);
    const auto& a = query.comorbidities;
    const auto& b = p.comorbidities;
    const int cd = (a.hypertension != b.hypertension) + (a.diabetes != b.diabetes) +
                   (a.hypothyroidism != b.hypothyroidism);
    all.push_back({r.id, pd, cd});
  }
  // Step 1: phenotype ranking, ties by id.
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.pd, a.id) < std::tie(b.pd, b.id);
  });
  all.resize(cfg.k + cfg.k_prime);

  const auto positive = static_cast<std::size_t>(
      std::count_if(all.begin(), all.end(), [](const Candidate& c) { return c.cd > 0; }));
  const bool by_correction = positive >= cfg.k_prime;
  using Key = std::tuple<int, double, std::string>;
  auto key = [&](const Candidate& c) -> Key {
    return {by_correction ? c.cd : (c.cd > 0 ? 1 : 0), c.pd, c.id};
  };

  // Step 2: every removal subset of size k'.
  const std::size_t n = all.size();
  std::vector<Key> best_keys;
  std::vector<bool> best_mask;
  std::vector<bool> mask(n, false);
  std::fill(mask.end() - static_cast<std::ptrdiff_t>(cfg.k_prime), mask.end(), true);
  do {
    std::vector<Key> keys;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) keys.push_back(key(all[i]));
    }
    std::sort(keys.rbegin(), keys.rend());
    if (best_mask.empty() || keys > best_keys) {
      best_keys = keys;
      best_mask = mask;
    }
  } while (std::next_permutation(mask.begin(), mask.end()));

  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!best_mask[i]) out.push_back(all[i].id);
  }
  return out;
}

QpResult svm_dual_qp(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double C, double gamma,
                     std::size_t iterations) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> q(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) d2 += (x[i][k] - x[j][k]) * (x[i][k] - x[j][k]);
      q[i][j] = y[i] * y[j] * std::exp(-gamma * d2);
    }
  }
  auto objective = [&](const std::vector<double>& a) {
    double lin = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lin += a[i];
      for (std::size_t j = 0; j < n; ++j) quad += a[i] * a[j] * q[i][j];
    }
    return lin - 0.5 * quad;
  };
  auto project = [&](const std::vector<double>& v) {
    auto at = [&](double lambda) {
      std::vector<double> a(n);
      for (std::size_t i = 0; i < n; ++i) a[i] = std::clamp(v[i] - lambda * y[i], 0.0, C);
      return a;
    };
    auto residual = [&](double lambda) {
      const auto a = at(lambda);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += y[i] * a[i];
      return s;
    };
    // The residual is piecewise linear and non-increasing in lambda, with
    // kinks where a coordinate meets 0 or C. Find the bracketing kinks and
    // interpolate.
    std::vector<double> kinks;
    for (std::size_t i = 0; i < n; ++i) {
      kinks.push_back(v[i] * y[i]);
      kinks.push_back((v[i] - C) * y[i]);
    }
    std::sort(kinks.begin(), kinks.end());
    double prev = kinks.front(), r_prev = residual(prev);
    if (r_prev <= 0.0) return at(prev);
    for (std::size_t k = 1; k < kinks.size(); ++k) {
      const double r = residual(kinks[k]);
      if (r <= 0.0) {
        const double lambda = r_prev == r ? kinks[k] : prev + (kinks[k] - prev) * r_prev / (r_prev - r);
        return at(lambda);
      }
      prev = kinks[k];
      r_prev = r;
    }
    return at(kinks.back());
  };

  // Lipschitz bound: |Q_ij| <= 1, so the spectral norm is at most n.
  const double step = 1.0 / static_cast<double>(n);
  std::vector<double> a(n, 0.0), z = a;
  double t = 1.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      double grad = 1.0;
      for (std::size_t j = 0; j < n; ++j) grad -= q[i][j] * z[j];
      v[i] = z[i] + step * grad;
    }
    auto next = project(v);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = next[i] + (t - 1.0) / t_next * (next[i] - a[i]);
      moved = std::max(moved, std::abs(next[i] - a[i]));
    }
    // Restart momentum when the objective drops.
    if (objective(next) < objective(a)) {
      z = next;
      t = 1.0;
    } else {
      t = t_next;
    }
    a = std::move(next);
    if (moved < 1e-13 && it > 100) break;
  }
  return {a, objective(a)};
}

Counts match_counts(std::span<const DetectedEvent> detected, std::span<const EventAnnotation> annotated,
                    double min_overlap_s) {
  auto hits = [&](const DetectedEvent& d, const EventAnnotation& a) {
    const double overlap = std::min(d.end_s(), a.end_s()) - std::max(d.start_s, a.start_s);
    return overlap > 0.0 && overlap >= min_overlap_s;
  };
  Counts c;
  for (const auto& d : detected) {
    const bool any = std::any_of(annotated.begin(), annotated.end(), [&](const auto& a) { return hits(d, a); });
    (any ? c.tp : c.fp) += 1;
  }
  for (const auto& a : annotated) {
    const bool any = std::any_of(detected.begin(), detected.end(), [&](const auto& d) { return hits(d, a); });
    if (!any) ++c.fn;
  }
  return c;
}

std::vector<double> frame_scores(const std::vector<bool>& apnea, const std::vector<bool>& paradox, double bonus) {
  const std::size_t epochs = apnea.size();
  const std::size_t frames = epochs + 19;
  std::vector<double> out(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double votes = 0.0, covering = 0.0;
    for (std::size_t i = 0; i < epochs; ++i) {
      // Epoch i spans [0.5 i, 0.5 i + 10); frame f spans [0.5 f, 0.5 f + 0.5).
      const double e0 = 0.5 * static_cast<double>(i), e1 = e0 + 10.0;
      const double f0 = 0.5 * static_cast<double>(f), f1 = f0 + 0.5;
      if (e0 < f1 && f0 < e1) {
        covering += 1.0;
        votes += (apnea[i] ? 1.0 : 0.0) + bonus * (paradox[i] ? 1.0 : 0.0);
      }
    }
    out[f] = votes / (covering * (1.0 + bonus));
  }
  return out;
}

std::vector<EpochLabel> epoch_labels(std::span<const EventAnnotation> events, std::size_t epochs) {
  std::vector<EpochLabel> out(epochs, EpochLabel::kNormal);
  for (std::size_t i = 0; i < epochs; ++i) {
    const long start_ms = static_cast<long>(i) * 500;
    long covered = 0;
    for (long t = start_ms; t < start_ms + 10000; ++t) {
      const double mid = (static_cast<double>(t) + 0.5) / 1000.0;
      for (const auto& e : events) {
        if (mid >= e.start_s && mid < e.end_s()) {
          ++covered;
          break;
        }
      }
    }
    if (covered >= 5000) out[i] = EpochLabel::kApnea;
  }
  return out;
}

}  // namespace apnea::oracle
