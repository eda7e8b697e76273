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

#include "apnea/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <list>
#include <sstream>

#include <json.hpp>

#include "apnea/error.hpp"
#include "csv.hpp"

namespace apnea {

using nlohmann::json;

namespace {

constexpr double kTau = 1e-12;
constexpr double kMinScale = 1e-12;
constexpr double kNoConvergenceViolation = 1e-2;
constexpr double kInf = std::numeric_limits<double>::infinity();

int sign_of(EpochLabel label) { return label == EpochLabel::kApnea ? +1 : -1; }

/// Least-recently-used cache of kernel rows K(i, .).
class KernelCache {
 public:
  KernelCache(const FeatureMatrix& x, double gamma, std::size_t budget_bytes)
      : x_(x), gamma_(gamma), rows_(x.rows), where_(x.rows) {
    const std::size_t row_bytes = std::max<std::size_t>(1, x.rows * sizeof(double));
    capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
  }

  std::span<const double> row(std::size_t i) {
    if (!rows_[i].empty()) {
      lru_.splice(lru_.begin(), lru_, where_[i]);
      return rows_[i];
    }
    if (lru_.size() >= capacity_) {
      const std::size_t victim = lru_.back();
      lru_.pop_back();
      rows_[victim].clear();
      rows_[victim].shrink_to_fit();
    }
    auto& r = rows_[i];
    r.resize(x_.rows);
    const auto xi = x_.row(i);
    for (std::size_t t = 0; t < x_.rows; ++t) r[t] = rbf_kernel(xi, x_.row(t), gamma_);
    lru_.push_front(i);
    where_[i] = lru_.begin();
    return r;
  }

 private:
  const FeatureMatrix& x_;
  double gamma_;
  std::size_t capacity_ = 2;
  std::vector<std::vector<double>> rows_;
  std::list<std::size_t> lru_;
  std::vector<std::list<std::size_t>::iterator> where_;
};

json matrix_json(const FeatureMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    const auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

}  // namespace

Standardization Standardization::fit(const FeatureMatrix& rows) {
  Standardization s;
  s.input_dim = rows.cols;
  const double n = static_cast<double>(rows.rows);
  for (std::size_t c = 0; c < rows.cols; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < rows.rows; ++r) sum += rows.data[r * rows.cols + c];
    const double mean = rows.rows > 0 ? sum / n : 0.0;
    double acc = 0.0;
    for (std::size_t r = 0; r < rows.rows; ++r) {
      const double d = rows.data[r * rows.cols + c] - mean;
      acc += d * d;
    }
    const double sd = rows.rows > 0 ? std::sqrt(acc / n) : 0.0;
    if (sd > kMinScale * std::max(1.0, std::fabs(mean))) {
      s.kept.push_back(c);
      s.mean.push_back(mean);
      s.scale.push_back(sd);
    } else {
      s.dropped.push_back(c);
    }
  }
  return s;
}

void Standardization::apply(std::span<const double> raw, std::span<double> out) const {
  if (raw.size() != input_dim) {
    raise(ErrorKind::kDimensionMismatch, "expected " + std::to_string(input_dim) + " features, got " +
                                             std::to_string(raw.size()));
  }
  for (std::size_t k = 0; k < kept.size(); ++k) out[k] = (raw[kept[k]] - mean[k]) / scale[k];
}

FeatureMatrix Standardization::apply(const FeatureMatrix& raw) const {
  FeatureMatrix out;
  out.rows = raw.rows;
  out.cols = output_dim();
  out.data.resize(out.rows * out.cols);
  for (std::size_t i = 0; i < raw.rows; ++i) apply(raw.row(i), out.row(i));
  return out;
}

LabeledRows balance_classes(const FeatureMatrix& rows, std::span<const EpochLabel> labels) {
  if (rows.rows != labels.size()) raise(ErrorKind::kDimensionMismatch, "rows and labels differ in length");
  std::vector<std::size_t> apnea, normal;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == EpochLabel::kApnea ? apnea : normal).push_back(i);
  }
  if (apnea.empty() || normal.empty()) {
    raise(ErrorKind::kSingleClassInput, "training rows contain a single class");
  }
  LabeledRows out{rows, {labels.begin(), labels.end()}};
  const auto& minority = apnea.size() < normal.size() ? apnea : normal;
  const std::size_t target = std::max(apnea.size(), normal.size());
  const EpochLabel minority_label = apnea.size() < normal.size() ? EpochLabel::kApnea : EpochLabel::kNormal;
  for (std::size_t added = 0; minority.size() + added < target; ++added) {
    out.rows.append(rows.row(minority[added % minority.size()]));
    out.labels.push_back(minority_label);
  }
  return out;
}

TrainingSet make_training_set(const FeatureMatrix& raw_rows, std::span<const EpochLabel> labels) {
  auto balanced = balance_classes(raw_rows, labels);
  for (double v : balanced.rows.data) {
    if (!std::isfinite(v)) raise(ErrorKind::kInvariantViolation, "non-finite training feature");
  }
  TrainingSet tset;
  tset.standardization = Standardization::fit(balanced.rows);
  if (tset.standardization.output_dim() == 0) {
    raise(ErrorKind::kInvariantViolation, "every training feature has zero variance");
  }
  tset.rows = tset.standardization.apply(balanced.rows);
  tset.labels = std::move(balanced.labels);
  return tset;
}

void validate(const SvmParams& p) {
  if (!(p.C > 0.0)) raise(ErrorKind::kInvalidConfig, "C must be positive");
  if (p.gamma && !(*p.gamma > 0.0)) raise(ErrorKind::kInvalidConfig, "gamma must be positive");
  if (!(p.tolerance > 0.0)) raise(ErrorKind::kInvalidConfig, "tolerance must be positive");
  if (p.max_iterations == 0) raise(ErrorKind::kInvalidConfig, "max_iterations must be positive");
}

std::string_view to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::kConverged: return "converged";
    case SolverStatus::kIterationCap: return "iteration_cap";
    case SolverStatus::kNoConvergence: return "no_convergence";
  }
  return "converged";
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

TrainedModel train(const TrainingSet& tset, const SvmParams& params) {
  validate(params);
  const std::size_t n = tset.rows.rows;
  if (n != tset.labels.size()) raise(ErrorKind::kDimensionMismatch, "rows and labels differ in length");
  const bool has_pos = std::any_of(tset.labels.begin(), tset.labels.end(), [](auto l) { return l == EpochLabel::kApnea; });
  const bool has_neg = std::any_of(tset.labels.begin(), tset.labels.end(), [](auto l) { return l == EpochLabel::kNormal; });
  if (n < 2 || !has_pos || !has_neg) raise(ErrorKind::kSingleClassInput, "training set needs both classes");

  const double C = params.C;
  const double gamma = params.gamma.value_or(1.0 / static_cast<double>(tset.rows.cols));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = sign_of(tset.labels[i]);

  KernelCache cache(tset.rows, gamma, params.cache_mb * 1024 * 1024);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  auto upper = [&](std::size_t t) { return alpha[t] >= C; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
  auto objective = [&] {
    double w = 0.0;
    for (std::size_t t = 0; t < n; ++t) w += alpha[t] * (1.0 - grad[t]);
    return 0.5 * w;
  };

  SolverStats stats;
  double violation = kInf;
  std::size_t iter = 0;
  for (;; ++iter) {
    double m_up = -kInf, m_low = kInf;
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      const bool in_up = y[t] > 0 ? !upper(t) : !lower(t);
      const bool in_low = y[t] > 0 ? !lower(t) : !upper(t);
      if (in_up && v > m_up) {
        m_up = v;
        i = t;
      }
      if (in_low && v < m_low) {
        m_low = v;
        j = t;
      }
    }
    violation = (i == n || j == n) ? 0.0 : m_up - m_low;
    if (violation < params.tolerance || iter >= params.max_iterations) break;

    const auto Ki = cache.row(i);
    const auto Kj = cache.row(j);
    const double quad = std::max(Ki[i] + Kj[j] - 2.0 * Ki[j], kTau);
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    double ai = old_ai, aj = old_aj;

    if (y[i] != y[j]) {
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) { aj = 0; ai = diff; }
      } else {
        if (ai < 0) { ai = 0; aj = -diff; }
      }
      if (diff > 0) {
        if (ai > C) { ai = C; aj = C - diff; }
      } else {
        if (aj > C) { aj = C; ai = C + diff; }
      }
    } else {
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > C) {
        if (ai > C) { ai = C; aj = sum - C; }
      } else {
        if (aj < 0) { aj = 0; ai = sum; }
      }
      if (sum > C) {
        if (aj > C) { aj = C; ai = sum - C; }
      } else {
        if (ai < 0) { ai = 0; aj = sum; }
      }
    }
    alpha[i] = ai;
    alpha[j] = aj;

    const double dai = (ai - old_ai) * y[i];
    const double daj = (aj - old_aj) * y[j];
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (Ki[t] * dai + Kj[t] * daj);
    if (params.record_objective) stats.objective_trace.push_back(objective());
  }

  stats.iterations = iter;
  stats.final_violation = violation;
  stats.dual_objective = objective();
  if (violation < params.tolerance) {
    stats.status = SolverStatus::kConverged;
  } else {
    stats.status = violation > kNoConvergenceViolation ? SolverStatus::kNoConvergence : SolverStatus::kIterationCap;
  }

  // Offset from free multipliers, or the midpoint of the feasible interval.
  double ub = kInf, lb = -kInf, free_sum = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      free_sum += yg;
    }
  }
  const double rho = n_free > 0 ? free_sum / static_cast<double>(n_free) : 0.5 * (ub + lb);

  TrainedModel model;
  model.gamma = gamma;
  model.C = C;
  model.bias = -rho;
  model.standardization = tset.standardization;
  model.support_vectors.cols = tset.rows.cols;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      model.support_vectors.append(tset.rows.row(t));
      model.alphas.push_back(alpha[t]);
      model.labels.push_back(y[t]);
    }
  }
  stats.alphas = std::move(alpha);
  model.stats = std::move(stats);
  return model;
}

double decision_value(const TrainedModel& model, std::span<const double> standardized) {
  double f = model.bias;
  for (std::size_t s = 0; s < model.alphas.size(); ++s) {
    f += model.alphas[s] * model.labels[s] * rbf_kernel(model.support_vectors.row(s), standardized, model.gamma);
  }
  return f;
}

Prediction predict(const TrainedModel& model, std::span<const double> raw_features) {
  std::vector<double> z(model.standardization.output_dim());
  model.standardization.apply(raw_features, z);
  const double f = decision_value(model, z);
  return {f > 0.0 ? EpochLabel::kApnea : EpochLabel::kNormal, f};
}

double dual_objective(const TrainedModel& model) {
  const std::size_t m = model.alphas.size();
  double linear = 0.0, quadratic = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    linear += model.alphas[a];
    for (std::size_t b = 0; b < m; ++b) {
      quadratic += model.alphas[a] * model.alphas[b] * model.labels[a] * model.labels[b] *
                   rbf_kernel(model.support_vectors.row(a), model.support_vectors.row(b), model.gamma);
    }
  }
  return linear - 0.5 * quadratic;
}

std::string serialize_model(const TrainedModel& model) {
  const auto& s = model.standardization;
  json j;
  j["format"] = "apnea-rbf-svm";
  j["version"] = 1;
  j["gamma"] = model.gamma;
  j["C"] = model.C;
  j["bias"] = model.bias;
  j["standardization"] = {{"input_dim", s.input_dim}, {"kept", s.kept},   {"dropped", s.dropped},
                          {"mean", s.mean},           {"scale", s.scale}};
  j["support_vectors"] = matrix_json(model.support_vectors);
  j["alphas"] = model.alphas;
  j["labels"] = model.labels;
  j["solver"] = {{"iterations", model.stats.iterations},
                 {"final_violation", model.stats.final_violation},
                 {"dual_objective", model.stats.dual_objective},
                 {"status", std::string(to_string(model.stats.status))}};
  return j.dump(1) + "\n";
}

TrainedModel parse_model(std::string_view text) {
  TrainedModel model;
  try {
    const auto j = json::parse(text);
    if (j.at("format") != "apnea-rbf-svm" || j.at("version") != 1) {
      raise(ErrorKind::kMalformedManifest, "unsupported model format");
    }
    model.gamma = j.at("gamma").get<double>();
    model.C = j.at("C").get<double>();
    model.bias = j.at("bias").get<double>();
    const auto& s = j.at("standardization");
    model.standardization.input_dim = s.at("input_dim").get<std::size_t>();
    model.standardization.kept = s.at("kept").get<std::vector<std::size_t>>();
    model.standardization.dropped = s.at("dropped").get<std::vector<std::size_t>>();
    model.standardization.mean = s.at("mean").get<std::vector<double>>();
    model.standardization.scale = s.at("scale").get<std::vector<double>>();
    model.support_vectors.cols = model.standardization.output_dim();
    for (const auto& row : j.at("support_vectors")) model.support_vectors.append(row.get<std::vector<double>>());
    model.alphas = j.at("alphas").get<std::vector<double>>();
    model.labels = j.at("labels").get<std::vector<int>>();
    const auto& solver = j.at("solver");
    model.stats.iterations = solver.at("iterations").get<std::size_t>();
    model.stats.final_violation = solver.at("final_violation").get<double>();
    model.stats.dual_objective = solver.at("dual_objective").get<double>();
    const auto status = solver.at("status").get<std::string>();
    model.stats.status = status == "converged"       ? SolverStatus::kConverged
                         : status == "iteration_cap" ? SolverStatus::kIterationCap
                                                     : SolverStatus::kNoConvergence;
  } catch (const json::exception& e) {
    raise(ErrorKind::kMalformedManifest, std::string("model: ") + e.what());
  }
  if (model.alphas.size() != model.support_vectors.rows || model.labels.size() != model.alphas.size() ||
      model.standardization.mean.size() != model.standardization.output_dim() ||
      model.standardization.scale.size() != model.standardization.output_dim()) {
    raise(ErrorKind::kMalformedManifest, "model: inconsistent array lengths");
  }
  return model;
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  csv::write_text(path, serialize_model(model));
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::kMissingFile, path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

std::uint64_t model_fingerprint(const TrainedModel& model) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : serialize_model(model)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace apnea
