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

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apnea/detector.hpp"
#include "apnea/features.hpp"
#include "apnea/phenotype_knn.hpp"
#include "apnea/recording.hpp"
#include "apnea/svm.hpp"

namespace apnea {

// ---------------------------------------------------------------------------
// Event-by-event scoring

struct EventScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double ppv = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static EventScore from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
};

/// A detected event is a true positive when it overlaps any annotated event
/// by a positive length of at least min_overlap_s; annotated events touched
/// by no detection are false negatives. Many-to-many matches are allowed. Both lists must be
/// sorted and disjoint (UnsortedInput otherwise).
EventScore match_events(std::span<const DetectedEvent> detected, std::span<const EventAnnotation> annotated,
                        double min_overlap_s = 0.0);

struct MedianMad {
  double median = 0.0;
  double mad = 0.0;
};

MedianMad median_mad(std::span<const double> values);

struct ScoredSubject {
  Severity expert = Severity::kNormal;
  EventScore score;
};

struct StratumSummary {
  std::string name;
  std::size_t count = 0;
  MedianMad ppv;
  MedianMad recall;
  MedianMad f1;
};

/// Strata in fixed order: Normal, Mild, Moderate, Severe, All, AHI<15, AHI>=15.
/// Empty strata come back as nullopt. Throws EmptyCohort for no subjects.
std::vector<std::optional<StratumSummary>> summarize_cohort(std::span<const ScoredSubject> subjects);
std::vector<std::string> stratum_names();

// ---------------------------------------------------------------------------
// Severity grading

/// counts[predicted][expert], classes ordered Normal, Mild, Moderate, Severe.
struct ConfusionMatrix4 {
  std::array<std::array<std::size_t, kSeverityCount>, kSeverityCount> counts{};

  void add(Severity predicted, Severity expert) {
    ++counts[static_cast<std::size_t>(predicted)][static_cast<std::size_t>(expert)];
  }
  std::size_t total() const;
  std::size_t row_sum(std::size_t predicted) const;
  std::size_t column_sum(std::size_t expert) const;
};

struct SeverityMetrics {
  double accuracy = 0.0;
  std::array<std::optional<double>, kSeverityCount> sensitivity{};
  std::array<std::optional<double>, kSeverityCount> ppv{};
};

SeverityMetrics severity_metrics(const ConfusionMatrix4& matrix);

struct BinaryScreeningStats {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> accuracy;
  /// +infinity when specificity is 1.
  std::optional<double> lr_plus;
  std::optional<double> lr_minus;
  /// An expert-side class was empty, so some statistics are undefined.
  bool degenerate = false;
};

/// Collapses to Moderate+Severe (AHI >= 15) versus Normal+Mild on both axes.
BinaryScreeningStats binary_screening(const ConfusionMatrix4& matrix);

// ---------------------------------------------------------------------------
// Subject-adaptive pipeline

struct PipelineConfig {
  KnnConfig knn;
  SvmParams svm;
  FeatureConfig feature;
  DetectorConfig detector;
  /// Every n-th epoch of each neighbor enters the training set (20 = 10 s, no overlap).
  std::size_t train_stride_epochs = 20;
  double min_overlap_s = 0.0;
};

void validate(const PipelineConfig& cfg);

/// Features, classifier inputs and (when annotated) epoch labels of a subject.
struct PreparedSubject {
  const Subject* subject = nullptr;
  std::vector<EpochFeatures> features;
  FeatureMatrix inputs;
  std::vector<EpochLabel> labels;
};

PreparedSubject prepare_subject(const Subject& subject, const PipelineConfig& cfg);
std::vector<PreparedSubject> prepare_subjects(std::span<const Subject> subjects, const PipelineConfig& cfg,
                                              std::size_t jobs);

struct AdaptiveModel {
  MetricScales scales;
  std::vector<std::string> neighbor_ids;
  TrainedModel model;
};

/// Metric scales from the reference set, modified-KNN neighbors of the query,
/// and an SVM trained on the neighbors' pooled, balanced epochs.
AdaptiveModel train_adaptive_model(const PhenotypeProfile& query, std::span<const PreparedSubject> reference,
                                   const PipelineConfig& cfg);

/// The model LOOCV would train for database[held_out]; only the other
/// subjects' recordings are read.
AdaptiveModel fold_model(std::span<const Subject> database, std::size_t held_out, const PipelineConfig& cfg);

struct SubjectResult {
  std::string id;
  double recording_hours = 0.0;
  double expert_rei = 0.0;
  Severity expert_severity = Severity::kNormal;
  double rei = 0.0;
  Severity predicted_severity = Severity::kNormal;
  EventScore score;
  std::vector<std::string> neighbors;
  std::vector<DetectedEvent> events;
  std::vector<EventAnnotation> annotations;
  SolverStatus solver_status = SolverStatus::kConverged;
};

struct EvalReport {
  PipelineConfig config;
  std::vector<SubjectResult> subjects;
  std::vector<std::optional<StratumSummary>> strata;
  ConfusionMatrix4 matrix;
  SeverityMetrics severity;
  BinaryScreeningStats binary;
};

double expert_rei(const Subject& subject);

using FoldCallback = std::function<void(const SubjectResult&)>;

/// Leave-one-out over the database; folds run on up to `jobs` threads and
/// results are assembled in database (id) order.
EvalReport run_loocv(std::span<const Subject> database, const PipelineConfig& cfg, std::size_t jobs = 1,
                     const FoldCallback& on_fold = {});

}  // namespace apnea
