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

#include "apnea/phenotype_knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "apnea/error.hpp"
#include "apnea/stats.hpp"

namespace apnea {

namespace {

constexpr double kMadToSigma = 1.4826;

double robust_scale(const std::vector<double>& values) {
  const double m = stats::mad(values);
  return m > 0.0 ? kMadToSigma * m : 1.0;
}

struct Candidate {
  const ReferenceProfile* ref;
  double phenotype;
  int correction;
};

}  // namespace

void validate(const KnnConfig& cfg) {
  if (cfg.k == 0) raise(ErrorKind::kInvalidConfig, "k must be positive");
  if (!(cfg.gender_weight >= 0.0) || !(cfg.age_weight >= 0.0) || !(cfg.bmi_weight >= 0.0)) {
    raise(ErrorKind::kInvalidConfig, "metric weights must be non-negative");
  }
}

MetricScales compute_scales(std::span<const PhenotypeProfile> reference) {
  std::vector<double> ages, bmis;
  ages.reserve(reference.size());
  bmis.reserve(reference.size());
  for (const auto& p : reference) {
    ages.push_back(p.age);
    bmis.push_back(p.bmi);
  }
  return {robust_scale(ages), robust_scale(bmis)};
}

MetricScales compute_scales(std::span<const Subject> reference) {
  std::vector<PhenotypeProfile> profiles;
  profiles.reserve(reference.size());
  for (const auto& s : reference) profiles.push_back(s.profile);
  return compute_scales(profiles);
}

double phenotype_distance(const PhenotypeProfile& a, const PhenotypeProfile& b, const MetricScales& scales,
                          const KnnConfig& cfg) {
  const double gender = a.gender == b.gender ? 0.0 : cfg.gender_weight;
  return cfg.age_weight * std::fabs(a.age - b.age) / scales.age_scale +
         cfg.bmi_weight * std::fabs(a.bmi - b.bmi) / scales.bmi_scale + gender;
}

int correction_distance(const PhenotypeProfile& a, const PhenotypeProfile& b) {
  const auto& x = a.comorbidities;
  const auto& y = b.comorbidities;
  return int(x.hypertension != y.hypertension) + int(x.diabetes != y.diabetes) +
         int(x.hypothyroidism != y.hypothyroidism);
}

std::vector<std::string> select_neighbors(const PhenotypeProfile& query, std::span<const ReferenceProfile> database,
                                          const KnnConfig& cfg, const MetricScales& scales) {
  validate(cfg);
  const std::size_t pool = cfg.k + cfg.k_prime;
  if (database.size() < pool) {
    raise(ErrorKind::kDatabaseTooSmall, "need " + std::to_string(pool) + " reference subjects, have " +
                                            std::to_string(database.size()));
  }

  std::vector<Candidate> ranked;
  ranked.reserve(database.size());
  for (const auto& ref : database) {
    ranked.push_back({&ref, phenotype_distance(query, ref.profile, scales, cfg), correction_distance(query, ref.profile)});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Candidate& a, const Candidate& b) {
    if (a.phenotype != b.phenotype) return a.phenotype < b.phenotype;
    return a.ref->id < b.ref->id;
  });
  ranked.resize(pool);

  // Removal priority: largest correction distance first while enough
  // candidates have one; otherwise every nonzero one goes, then the
  // phenotype-farthest of the rest.
  const auto with_correction = static_cast<std::size_t>(
      std::count_if(ranked.begin(), ranked.end(), [](const Candidate& c) { return c.correction > 0; }));
  const bool by_correction = with_correction >= cfg.k_prime;

  std::vector<std::size_t> order(pool);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const auto& a = ranked[i];
    const auto& b = ranked[j];
    const int ka = by_correction ? a.correction : int(a.correction > 0);
    const int kb = by_correction ? b.correction : int(b.correction > 0);
    if (ka != kb) return ka > kb;
    if (a.phenotype != b.phenotype) return a.phenotype > b.phenotype;
    return a.ref->id > b.ref->id;
  });

  std::vector<bool> removed(pool, false);
  for (std::size_t r = 0; r < cfg.k_prime; ++r) removed[order[r]] = true;

  std::vector<std::string> ids;
  ids.reserve(cfg.k);
  for (std::size_t i = 0; i < pool; ++i) {
    if (!removed[i]) ids.push_back(ranked[i].ref->id);
  }
  return ids;
}

std::vector<std::string> select_neighbors(const PhenotypeProfile& query, std::span<const Subject> database,
                                          const KnnConfig& cfg, const MetricScales& scales) {
  std::vector<ReferenceProfile> refs;
  refs.reserve(database.size());
  for (const auto& s : database) refs.push_back({s.id, s.profile});
  return select_neighbors(query, refs, cfg, scales);
}

}  // namespace apnea
