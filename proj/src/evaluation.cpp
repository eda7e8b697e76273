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

#include "apnea/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <unordered_map>

#include "apnea/error.hpp"
#include "apnea/stats.hpp"
#include "parallel.hpp"

namespace apnea {

namespace {

template <typename Interval>
void require_sorted_disjoint(std::span<const Interval> intervals, const char* what) {
  for (std::size_t i = 1; i < intervals.size(); ++i) {
    if (intervals[i].start_s < intervals[i - 1].start_s + intervals[i - 1].duration_s) {
      raise(ErrorKind::kUnsortedInput, std::string(what) + " events are not sorted and disjoint at index " +
                                           std::to_string(i));
    }
  }
}

bool is_high_risk(Severity s) { return s == Severity::kModerate || s == Severity::kSevere; }

AdaptiveModel train_on_references(const PhenotypeProfile& query, const std::vector<const PreparedSubject*>& reference,
                                  const PipelineConfig& cfg) {
  std::vector<ReferenceProfile> profiles;
  profiles.reserve(reference.size());
  std::vector<PhenotypeProfile> plain;
  plain.reserve(reference.size());
  std::unordered_map<std::string, const PreparedSubject*> by_id;
  for (const auto* p : reference) {
    profiles.push_back({p->subject->id, p->subject->profile});
    plain.push_back(p->subject->profile);
    by_id.emplace(p->subject->id, p);
  }

  AdaptiveModel out;
  out.scales = compute_scales(plain);
  out.neighbor_ids = select_neighbors(query, profiles, cfg.knn, out.scales);

  FeatureMatrix rows;
  rows.cols = kClassifierInputDim;
  std::vector<EpochLabel> labels;
  for (const auto& id : out.neighbor_ids) {
    const auto* p = by_id.at(id);
    if (p->labels.size() != p->inputs.rows) {
      raise(ErrorKind::kMissingAnnotations, "reference subject '" + id + "' has no annotations");
    }
    for (std::size_t i = 0; i < p->inputs.rows; i += cfg.train_stride_epochs) {
      rows.append(p->inputs.row(i));
      labels.push_back(p->labels[i]);
    }
  }
  out.model = train(make_training_set(rows, labels), cfg.svm);
  return out;
}

}  // namespace

EventScore EventScore::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  EventScore s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.ppv = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.f1 = s.ppv + s.recall > 0.0 ? 2.0 * s.ppv * s.recall / (s.ppv + s.recall) : 0.0;
  return s;
}

EventScore match_events(std::span<const DetectedEvent> detected, std::span<const EventAnnotation> annotated,
                        double min_overlap_s) {
  require_sorted_disjoint(detected, "detected");
  require_sorted_disjoint(annotated, "annotated");
  std::vector<bool> hit(annotated.size(), false);
  std::size_t tp = 0;
  std::size_t first = 0;
  for (const auto& d : detected) {
    while (first < annotated.size() && annotated[first].end_s() <= d.start_s) ++first;
    bool matched = false;
    for (std::size_t k = first; k < annotated.size() && annotated[k].start_s < d.end_s(); ++k) {
      const double overlap = std::min(d.end_s(), annotated[k].end_s()) - std::max(d.start_s, annotated[k].start_s);
      if (overlap > 0.0 && overlap >= min_overlap_s) {
        matched = true;
        hit[k] = true;
      }
    }
    if (matched) ++tp;
  }
  const auto fn = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), false));
  return EventScore::from_counts(tp, detected.size() - tp, fn);
}

MedianMad median_mad(std::span<const double> values) { return {stats::median(values), stats::mad(values)}; }

std::vector<std::string> stratum_names() {
  return {"Normal", "Mild", "Moderate", "Severe", "All", "AHI<15", "AHI>=15"};
}

std::vector<std::optional<StratumSummary>> summarize_cohort(std::span<const ScoredSubject> subjects) {
  if (subjects.empty()) raise(ErrorKind::kEmptyCohort, "no subjects to summarize");
  const auto names = stratum_names();
  auto member = [](std::size_t stratum, Severity s) {
    switch (stratum) {
      case 4: return true;
      case 5: return !is_high_risk(s);
      case 6: return is_high_risk(s);
      default: return static_cast<std::size_t>(s) == stratum;
    }
  };
  std::vector<std::optional<StratumSummary>> out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::vector<double> ppv, recall, f1;
    for (const auto& s : subjects) {
      if (!member(k, s.expert)) continue;
      ppv.push_back(s.score.ppv);
      recall.push_back(s.score.recall);
      f1.push_back(s.score.f1);
    }
    if (ppv.empty()) {
      out.emplace_back(std::nullopt);
      continue;
    }
    out.push_back(StratumSummary{names[k], ppv.size(), median_mad(ppv), median_mad(recall), median_mad(f1)});
  }
  return out;
}

std::size_t ConfusionMatrix4::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) {
    for (auto c : row) t += c;
  }
  return t;
}

std::size_t ConfusionMatrix4::row_sum(std::size_t predicted) const {
  std::size_t t = 0;
  for (auto c : counts[predicted]) t += c;
  return t;
}

std::size_t ConfusionMatrix4::column_sum(std::size_t expert) const {
  std::size_t t = 0;
  for (const auto& row : counts) t += row[expert];
  return t;
}

SeverityMetrics severity_metrics(const ConfusionMatrix4& m) {
  const std::size_t total = m.total();
  if (total == 0) raise(ErrorKind::kEmptyMatrix, "confusion matrix is empty");
  SeverityMetrics out;
  std::size_t trace = 0;
  for (std::size_t c = 0; c < kSeverityCount; ++c) {
    const double diag = static_cast<double>(m.counts[c][c]);
    trace += m.counts[c][c];
    if (const auto col = m.column_sum(c); col > 0) out.sensitivity[c] = diag / static_cast<double>(col);
    if (const auto row = m.row_sum(c); row > 0) out.ppv[c] = diag / static_cast<double>(row);
  }
  out.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  return out;
}

BinaryScreeningStats binary_screening(const ConfusionMatrix4& m) {
  if (m.total() == 0) raise(ErrorKind::kEmptyMatrix, "confusion matrix is empty");
  BinaryScreeningStats s;
  for (std::size_t p = 0; p < kSeverityCount; ++p) {
    for (std::size_t e = 0; e < kSeverityCount; ++e) {
      const bool pred_pos = is_high_risk(static_cast<Severity>(p));
      const bool expert_pos = is_high_risk(static_cast<Severity>(e));
      const auto c = m.counts[p][e];
      if (pred_pos && expert_pos) s.tp += c;
      else if (!pred_pos && expert_pos) s.fn += c;
      else if (pred_pos && !expert_pos) s.fp += c;
      else s.tn += c;
    }
  }
  const std::size_t positives = s.tp + s.fn;
  const std::size_t negatives = s.tn + s.fp;
  s.degenerate = positives == 0 || negatives == 0;
  if (positives > 0) s.sensitivity = static_cast<double>(s.tp) / static_cast<double>(positives);
  if (negatives > 0) s.specificity = static_cast<double>(s.tn) / static_cast<double>(negatives);
  s.accuracy = static_cast<double>(s.tp + s.tn) / static_cast<double>(positives + negatives);
  if (s.sensitivity && s.specificity) {
    s.lr_plus = *s.specificity == 1.0 ? std::numeric_limits<double>::infinity()
                                      : *s.sensitivity / (1.0 - *s.specificity);
    if (*s.specificity > 0.0) s.lr_minus = (1.0 - *s.sensitivity) / *s.specificity;
  }
  return s;
}

void validate(const PipelineConfig& cfg) {
  validate(cfg.knn);
  validate(cfg.svm);
  validate(cfg.feature);
  validate(cfg.detector);
  if (cfg.train_stride_epochs == 0) raise(ErrorKind::kInvalidConfig, "train_stride_epochs must be positive");
  if (!(cfg.min_overlap_s >= 0.0)) raise(ErrorKind::kInvalidConfig, "min_overlap_s must be non-negative");
}

PreparedSubject prepare_subject(const Subject& subject, const PipelineConfig& cfg) {
  PreparedSubject p;
  p.subject = &subject;
  p.features = extract_features(subject, cfg.feature);
  p.inputs = classifier_inputs(p.features);
  if (subject.annotations) p.labels = label_epochs(subject, EpochGrid(p.features.size()));
  return p;
}

std::vector<PreparedSubject> prepare_subjects(std::span<const Subject> subjects, const PipelineConfig& cfg,
                                              std::size_t jobs) {
  std::vector<PreparedSubject> out(subjects.size());
  detail::parallel_for(subjects.size(), jobs, [&](std::size_t i) { out[i] = prepare_subject(subjects[i], cfg); });
  return out;
}

AdaptiveModel train_adaptive_model(const PhenotypeProfile& query, std::span<const PreparedSubject> reference,
                                   const PipelineConfig& cfg) {
  validate(cfg);
  std::vector<const PreparedSubject*> refs;
  refs.reserve(reference.size());
  for (const auto& p : reference) refs.push_back(&p);
  return train_on_references(query, refs, cfg);
}

AdaptiveModel fold_model(std::span<const Subject> database, std::size_t held_out, const PipelineConfig& cfg) {
  validate(cfg);
  std::vector<ReferenceProfile> profiles;
  std::vector<const Subject*> training;
  for (std::size_t i = 0; i < database.size(); ++i) {
    if (i == held_out) continue;
    profiles.push_back({database[i].id, database[i].profile});
    training.push_back(&database[i]);
  }
  std::vector<PhenotypeProfile> plain;
  for (const auto& r : profiles) plain.push_back(r.profile);
  const auto neighbors =
      select_neighbors(database[held_out].profile, profiles, cfg.knn, compute_scales(plain));

  // Only the selected neighbors' recordings are ever read.
  std::vector<PreparedSubject> prepared;
  prepared.reserve(neighbors.size());
  for (const auto* s : training) {
    if (std::find(neighbors.begin(), neighbors.end(), s->id) != neighbors.end()) {
      prepared.push_back(prepare_subject(*s, cfg));
    }
  }
  // Non-neighbors contribute only their phenotype to the metric scales.
  std::vector<PreparedSubject> shells;
  for (const auto* s : training) {
    if (std::find(neighbors.begin(), neighbors.end(), s->id) == neighbors.end()) {
      PreparedSubject shell;
      shell.subject = s;
      shells.push_back(std::move(shell));
    }
  }
  std::vector<const PreparedSubject*> refs;
  for (const auto& p : prepared) refs.push_back(&p);
  for (const auto& p : shells) refs.push_back(&p);
  return train_on_references(database[held_out].profile, refs, cfg);
}

double expert_rei(const Subject& subject) {
  const double hours = subject.recording_hours();
  if (!subject.annotations || hours <= 0.0) return 0.0;
  return static_cast<double>(subject.annotations->size()) / hours;
}

EvalReport run_loocv(std::span<const Subject> database, const PipelineConfig& cfg, std::size_t jobs,
                     const FoldCallback& on_fold) {
  validate(cfg);
  const std::size_t needed = cfg.knn.k + cfg.knn.k_prime + 1;
  if (database.size() < needed) {
    raise(ErrorKind::kDatabaseTooSmall, "LOOCV needs at least " + std::to_string(needed) + " subjects, have " +
                                            std::to_string(database.size()));
  }
  for (const auto& s : database) {
    if (!s.annotations) raise(ErrorKind::kMissingAnnotations, "subject '" + s.id + "' has no events.csv");
  }

  const auto prepared = prepare_subjects(database, cfg, jobs);
  std::vector<SubjectResult> results(database.size());
  std::mutex callback_mutex;
  detail::parallel_for(database.size(), jobs, [&](std::size_t i) {
    std::vector<const PreparedSubject*> refs;
    refs.reserve(prepared.size() - 1);
    for (std::size_t j = 0; j < prepared.size(); ++j) {
      if (j != i) refs.push_back(&prepared[j]);
    }
    const auto& subject = database[i];
    auto adaptive = train_on_references(subject.profile, refs, cfg);
    auto screening = screen_features(prepared[i].features, subject.recording_hours(), adaptive.model, cfg.detector);

    SubjectResult r;
    r.id = subject.id;
    r.recording_hours = subject.recording_hours();
    r.expert_rei = expert_rei(subject);
    r.expert_severity = severity_from_rei(r.expert_rei);
    r.rei = screening.rei;
    r.predicted_severity = screening.severity;
    r.score = match_events(screening.events, *subject.annotations, cfg.min_overlap_s);
    r.neighbors = std::move(adaptive.neighbor_ids);
    r.events = std::move(screening.events);
    r.annotations = *subject.annotations;
    r.solver_status = adaptive.model.stats.status;
    results[i] = std::move(r);
    if (on_fold) {
      std::lock_guard lock(callback_mutex);
      on_fold(results[i]);
    }
  });

  EvalReport report;
  report.config = cfg;
  std::vector<ScoredSubject> scored;
  for (const auto& r : results) {
    report.matrix.add(r.predicted_severity, r.expert_severity);
    scored.push_back({r.expert_severity, r.score});
  }
  report.subjects = std::move(results);
  report.strata = summarize_cohort(scored);
  report.severity = severity_metrics(report.matrix);
  report.binary = binary_screening(report.matrix);
  return report;
}

}  // namespace apnea
