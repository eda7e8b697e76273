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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apnea/features.hpp"
#include "apnea/recording.hpp"

namespace apnea {

/// Per-feature z-scoring fitted on training rows. Features with (near) zero
/// spread are dropped and listed in `dropped`.
struct Standardization {
  std::size_t input_dim = 0;
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardization fit(const FeatureMatrix& rows);
  std::size_t output_dim() const noexcept { return kept.size(); }
  void apply(std::span<const double> raw, std::span<double> out) const;
  FeatureMatrix apply(const FeatureMatrix& raw) const;
};

struct LabeledRows {
  FeatureMatrix rows;
  std::vector<EpochLabel> labels;
};

/// Duplicates minority-class rows round-robin (1, 2, ..., 1, 2, ...) until both
/// classes have the same count. Duplicates are appended after the originals.
LabeledRows balance_classes(const FeatureMatrix& rows, std::span<const EpochLabel> labels);

struct TrainingSet {
  FeatureMatrix rows;  // standardized
  std::vector<EpochLabel> labels;
  Standardization standardization;
};

/// Balances, then standardizes on the balanced rows.
TrainingSet make_training_set(const FeatureMatrix& raw_rows, std::span<const EpochLabel> labels);

struct SvmParams {
  double C = 1.0;
  /// nullopt selects 1 / d on the standardized features.
  std::optional<double> gamma;
  double tolerance = 1e-3;
  std::size_t max_iterations = 1'000'000;
  std::size_t cache_mb = 256;
  bool record_objective = false;
};

void validate(const SvmParams& params);

enum class SolverStatus { kConverged, kIterationCap, kNoConvergence };
std::string_view to_string(SolverStatus status);

struct SolverStats {
  std::size_t iterations = 0;
  double final_violation = 0.0;
  double dual_objective = 0.0;
  SolverStatus status = SolverStatus::kConverged;
  /// Multipliers for every training row, in training order.
  std::vector<double> alphas;
  /// Dual objective after each pair update when SvmParams::record_objective is set.
  std::vector<double> objective_trace;
};

struct TrainedModel {
  double gamma = 0.0;
  double C = 0.0;
  double bias = 0.0;
  Standardization standardization;
  FeatureMatrix support_vectors;  // standardized
  std::vector<double> alphas;
  std::vector<int> labels;  // +1 apnea, -1 normal
  SolverStats stats;
};

/// Soft-margin RBF SVM on the dual, solved by SMO with maximal-violating-pair
/// working-set selection (ties go to the lowest index).
TrainedModel train(const TrainingSet& tset, const SvmParams& params = {});

struct Prediction {
  EpochLabel label = EpochLabel::kNormal;
  double margin = 0.0;
};

/// Standardizes the raw feature vector with the model's parameters first.
Prediction predict(const TrainedModel& model, std::span<const double> raw_features);
/// Margin for an already standardized vector.
double decision_value(const TrainedModel& model, std::span<const double> standardized);

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);
/// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij over the support vectors.
double dual_objective(const TrainedModel& model);

std::string serialize_model(const TrainedModel& model);
TrainedModel parse_model(std::string_view text);
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);
/// FNV-1a over the serialized parameters.
std::uint64_t model_fingerprint(const TrainedModel& model);

}  // namespace apnea
