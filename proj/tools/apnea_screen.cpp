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

// apnea-screen: synthetic cohorts, single-subject screening, LOOCV evaluation
// and event scoring.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "apnea/config.hpp"
#include "apnea/detector.hpp"
#include "apnea/error.hpp"
#include "apnea/evaluation.hpp"
#include "apnea/recording.hpp"
#include "apnea/report.hpp"
#include "apnea/svm.hpp"
#include "apnea/synth.hpp"

namespace fs = std::filesystem;
using namespace apnea;

namespace {

enum ExitCode : int {
  kOk = 0,
  kIoFailure = 1,
  kUsage = 2,
  kSmallDatabase = 3,
  kUnknownId = 4,
  kNoAnnotationsExit = 5,
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidConfig:
    case ErrorKind::kInvalidSpec:
      return kUsage;
    case ErrorKind::kDatabaseTooSmall:
      return kSmallDatabase;
    case ErrorKind::kUnknownSubject:
      return kUnknownId;
    case ErrorKind::kMissingAnnotations:
      return kNoAnnotationsExit;
    default:
      return kIoFailure;
  }
}

void setup_logging() {
  auto logger = spdlog::stderr_logger_mt("apnea-screen");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("APNEA_SCREEN_LOG")) {
    const std::string level = env;
    if (level == "error") {
      spdlog::set_level(spdlog::level::err);
    } else if (level == "debug") {
      spdlog::set_level(spdlog::level::debug);
    } else if (level != "info") {
      spdlog::warn("ignoring APNEA_SCREEN_LOG='{}' (expected error, info or debug)", level);
    }
  }
}

/// Pipeline flags shared by screen and loocv. Unset flags leave the config
/// file (or built-in default) value in place.
struct PipelineFlags {
  std::optional<fs::path> config;
  std::optional<std::size_t> k, k_prime, train_stride;
  std::optional<double> gender_weight, age_weight, bmi_weight;
  std::optional<double> svm_c, svm_gamma;
  std::optional<double> merge_gap, vote_threshold, paradox_bonus, desat_threshold, desat_lag;
  std::optional<double> min_overlap;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON run-config file")->check(CLI::ExistingFile);
    app->add_option("--k", k, "Neighbors used for training (default 15)");
    app->add_option("--k-prime", k_prime, "Candidates pruned by comorbidity mismatch (default 5)");
    app->add_option("--gender-weight", gender_weight, "Phenotype metric weight for gender");
    app->add_option("--age-weight", age_weight, "Phenotype metric weight for age");
    app->add_option("--bmi-weight", bmi_weight, "Phenotype metric weight for BMI");
    app->add_option("--svm-c", svm_c, "SVM box constraint C");
    app->add_option("--svm-gamma", svm_gamma, "RBF gamma (default 1/d)");
    app->add_option("--train-stride", train_stride, "Use every n-th epoch of each neighbor for training");
    app->add_option("--merge-gap", merge_gap, "Bridge apneic gaps shorter than this (s)");
    app->add_option("--vote-threshold", vote_threshold, "Frame score needed to mark a frame apneic");
    app->add_option("--paradox-bonus", paradox_bonus, "Weight of paradoxical-effort votes");
    app->add_option("--desat-threshold", desat_threshold, "SpO2 drop (%) that triggers desaturation correction");
    app->add_option("--desat-lag", desat_lag, "Desaturations this soon after an event belong to it (s)");
    app->add_option("--min-overlap", min_overlap, "Minimum overlap (s) for a true positive");
  }

  RunConfig resolve() const {
    RunConfig rc = config ? load_run_config(*config) : RunConfig{};
    auto& p = rc.pipeline;
    if (k) p.knn.k = *k;
    if (k_prime) p.knn.k_prime = *k_prime;
    if (gender_weight) p.knn.gender_weight = *gender_weight;
    if (age_weight) p.knn.age_weight = *age_weight;
    if (bmi_weight) p.knn.bmi_weight = *bmi_weight;
    if (svm_c) p.svm.C = *svm_c;
    if (svm_gamma) p.svm.gamma = *svm_gamma;
    if (train_stride) p.train_stride_epochs = *train_stride;
    if (merge_gap) p.detector.merge_gap_s = *merge_gap;
    if (vote_threshold) p.detector.vote_threshold = *vote_threshold;
    if (paradox_bonus) p.detector.paradox_vote_bonus = *paradox_bonus;
    if (desat_threshold) p.detector.desat_threshold = *desat_threshold;
    if (desat_lag) p.detector.desat_lag_s = *desat_lag;
    if (min_overlap) p.min_overlap_s = *min_overlap;
    try {
      validate(p);
    } catch (const Error& e) {
      raise(ErrorKind::kInvalidConfig, e.what());
    }
    return rc;
  }
};

fs::path require_path(const std::optional<fs::path>& flag, const std::optional<fs::path>& from_config,
                      const char* name) {
  if (flag) return *flag;
  if (from_config) return *from_config;
  raise(ErrorKind::kInvalidConfig, std::string(name) + " is required (flag or io section of --config)");
}

int cmd_synth(std::size_t subjects, std::uint64_t seed, const fs::path& out, double duration_min, std::size_t jobs) {
  CohortSpec spec;
  spec.n_subjects = subjects;
  spec.seed = seed;
  spec.duration_min = duration_min;
  const auto cohort = generate(spec, out, jobs);
  std::array<std::size_t, kSeverityCount> counts{};
  std::size_t events = 0;
  for (const auto& s : cohort) {
    ++counts[static_cast<std::size_t>(s.severity)];
    events += s.subject.annotations->size();
  }
  std::cout << "wrote " << cohort.size() << " subjects to " << out.string() << " (Normal " << counts[0] << ", Mild "
            << counts[1] << ", Moderate " << counts[2] << ", Severe " << counts[3] << "; " << events
            << " planted events)\n";
  return kOk;
}

int cmd_screen(const PipelineFlags& flags, const std::optional<fs::path>& db_flag, const std::string& id,
               const std::optional<fs::path>& out_flag, bool dump_features) {
  const auto rc = flags.resolve();
  const auto db = require_path(db_flag, rc.db_path, "--db");
  const fs::path out = out_flag ? *out_flag : rc.out_path ? *rc.out_path : fs::path(".");

  auto database = load_database(db);
  const auto it = std::find_if(database.begin(), database.end(), [&](const Subject& s) { return s.id == id; });
  if (it == database.end()) raise(ErrorKind::kUnknownSubject, "no subject '" + id + "' in " + db.string());

  // Reference set: every other annotated subject; the query goes last.
  std::vector<Subject> pool;
  Subject query = std::move(*it);
  for (auto& s : database) {
    if (s.id.empty() || s.id == id) continue;
    if (!s.annotations) {
      spdlog::info("excluding unannotated reference subject {}", s.id);
      continue;
    }
    pool.push_back(std::move(s));
  }
  pool.push_back(std::move(query));
  const Subject& subject = pool.back();

  const auto adaptive = fold_model(pool, pool.size() - 1, rc.pipeline);
  spdlog::debug("neighbors: {}", fmt::join(adaptive.neighbor_ids, ","));
  if (adaptive.model.stats.status != SolverStatus::kConverged) {
    spdlog::warn("SVM solver status: {}", to_string(adaptive.model.stats.status));
  }
  const auto report = screen(subject, adaptive.model, ScreenConfig{rc.pipeline.feature, rc.pipeline.detector});

  fs::create_directories(out);
  write_predicted_events_csv(out / "predicted_events.csv", report.events);
  save_model(out / "model.json", adaptive.model);
  if (dump_features) write_features_csv(out / "features.csv", extract_features(subject, rc.pipeline.feature));
  std::cout << subject.id << ": REI " << fmt::format("{:.1f}", report.rei) << "/h, severity "
            << to_string(report.severity) << ", " << report.events.size() << " events\n";
  return kOk;
}

int cmd_loocv(const PipelineFlags& flags, const std::optional<fs::path>& db_flag,
              const std::optional<fs::path>& out_flag, const std::optional<fs::path>& plots, std::size_t jobs,
              bool dump_features) {
  const auto rc = flags.resolve();
  const auto db = require_path(db_flag, rc.db_path, "--db");
  const auto out = require_path(out_flag, rc.out_path, "--out");

  const auto database = load_database(db);
  spdlog::info("LOOCV over {} subjects with {} job(s)", database.size(), jobs);
  const auto report = run_loocv(database, rc.pipeline, jobs, [](const SubjectResult& r) {
    spdlog::info("{}: expert {} predicted {} F1 {:.2f}", r.id, to_string(r.expert_severity),
                 to_string(r.predicted_severity), r.score.f1);
  });
  write_report(report, out, plots);
  if (dump_features) {
    const auto dir = out.parent_path() / "features";
    for (const auto& s : database) {
      fs::create_directories(dir / s.id);
      write_features_csv(dir / s.id / "features.csv", extract_features(s, rc.pipeline.feature));
    }
  }
  const auto& b = report.binary;
  std::cout << "binary accuracy " << (b.accuracy ? fmt::format("{:.1f}%", 100.0 * *b.accuracy) : "n/a")
            << ", 4-class accuracy " << fmt::format("{:.1f}%", 100.0 * report.severity.accuracy) << "; wrote "
            << out.string() << "\n";
  return kOk;
}

int cmd_score(const fs::path& pred, const fs::path& ref, double min_overlap) {
  try {
    const auto detected = read_predicted_events_csv(pred);
    const auto annotated = read_events_csv(ref);
    const auto s = match_events(detected, annotated, min_overlap);
    nlohmann::json j{{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}, {"ppv", s.ppv}, {"recall", s.recall}, {"f1", s.f1}};
    std::cout << j.dump() << "\n";
    return kOk;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kMalformedCsv || e.kind() == ErrorKind::kUnsortedInput ||
        e.kind() == ErrorKind::kInvariantViolation) {
      spdlog::error("{}", e.what());
      return kUsage;
    }
    throw;
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Phenotype-adaptive sleep apnea screening"};
  app.require_subcommand(1);
  const std::size_t default_jobs = std::max(1u, std::thread::hardware_concurrency());

  auto* synth = app.add_subcommand("synth", "Generate a synthetic annotated cohort");
  std::size_t n_subjects = 0;
  std::uint64_t seed = 0;
  fs::path synth_out;
  double duration_min = 30.0;
  std::size_t synth_jobs = default_jobs;
  synth->add_option("--subjects", n_subjects, "Number of subjects")->required()->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "Random seed")->required();
  synth->add_option("--out", synth_out, "Output database directory")->required();
  synth->add_option("--duration-min", duration_min, "Recording length in minutes")->capture_default_str();
  synth->add_option("--jobs", synth_jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* screen_cmd = app.add_subcommand("screen", "Screen one subject against the rest of the database");
  PipelineFlags screen_flags;
  screen_flags.attach(screen_cmd);
  std::optional<fs::path> screen_db, screen_out;
  std::string subject_id;
  bool screen_dump = false;
  screen_cmd->add_option("--db", screen_db, "Database directory");
  screen_cmd->add_option("--subject", subject_id, "Subject id to screen")->required();
  screen_cmd->add_option("--out", screen_out, "Output directory (default: current directory)");
  screen_cmd->add_flag("--dump-features", screen_dump, "Also write features.csv");

  auto* loocv = app.add_subcommand("loocv", "Leave-one-out evaluation over the database");
  PipelineFlags loocv_flags;
  loocv_flags.attach(loocv);
  std::optional<fs::path> loocv_db, loocv_out, plots;
  std::size_t jobs = default_jobs;
  bool loocv_dump = false;
  loocv->add_option("--db", loocv_db, "Database directory");
  loocv->add_option("--out", loocv_out, "Path of report.json (report.md is written alongside)");
  loocv->add_option("--plots", plots, "Directory for per-subject SVG timelines");
  loocv->add_option("--jobs", jobs, "Concurrent folds")->check(CLI::PositiveNumber);
  loocv->add_flag("--dump-features", loocv_dump, "Write features/<id>/features.csv next to the report");

  auto* score = app.add_subcommand("score", "Score predicted events against reference annotations");
  fs::path pred, ref;
  double score_overlap = 0.0;
  score->add_option("--pred", pred, "predicted_events.csv")->required()->check(CLI::ExistingFile);
  score->add_option("--ref", ref, "Reference events.csv")->required()->check(CLI::ExistingFile);
  score->add_option("--min-overlap", score_overlap, "Minimum overlap (s) for a true positive")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(n_subjects, seed, synth_out, duration_min, synth_jobs);
    if (*screen_cmd) return cmd_screen(screen_flags, screen_db, subject_id, screen_out, screen_dump);
    if (*loocv) return cmd_loocv(loocv_flags, loocv_db, loocv_out, plots, jobs, loocv_dump);
    if (*score) return cmd_score(pred, ref, score_overlap);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kIoFailure;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kIoFailure;
  }
  return kUsage;
}
