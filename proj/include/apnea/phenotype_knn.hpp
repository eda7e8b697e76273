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
#include <span>
#include <string>
#include <vector>

#include "apnea/recording.hpp"

namespace apnea {

struct KnnConfig {
  std::size_t k = 15;
  std::size_t k_prime = 5;
  double gender_weight = 1.0;
  double age_weight = 1.0;
  double bmi_weight = 1.0;
};

void validate(const KnnConfig& cfg);

/// Robust attribute scales: 1.4826 * MAD over the reference set, or 1.0 when
/// the MAD vanishes.
struct MetricScales {
  double age_scale = 1.0;
  double bmi_scale = 1.0;
};

MetricScales compute_scales(std::span<const PhenotypeProfile> reference);
MetricScales compute_scales(std::span<const Subject> reference);

/// Weighted, scale-normalized L1 over age and BMI plus a gender-mismatch penalty.
double phenotype_distance(const PhenotypeProfile& a, const PhenotypeProfile& b, const MetricScales& scales,
                          const KnnConfig& cfg);

/// Number of mismatched comorbidity flags, 0..3.
int correction_distance(const PhenotypeProfile& a, const PhenotypeProfile& b);

struct ReferenceProfile {
  std::string id;
  PhenotypeProfile profile;
};

/// Modified KNN: take the k + k' phenotype-nearest candidates (ties by id
/// ascending), then prune k' of them by correction distance, falling back to
/// phenotype distance when fewer than k' candidates have a nonzero correction
/// distance. Returns k ids in phenotype-rank order.
std::vector<std::string> select_neighbors(const PhenotypeProfile& query, std::span<const ReferenceProfile> database,
                                          const KnnConfig& cfg, const MetricScales& scales);
std::vector<std::string> select_neighbors(const PhenotypeProfile& query, std::span<const Subject> database,
                                          const KnnConfig& cfg, const MetricScales& scales);

}  // namespace apnea
