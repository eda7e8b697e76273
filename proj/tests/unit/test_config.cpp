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

#include <doctest.h>

#include <fstream>

#include "apnea/config.hpp"
#include "apnea/error.hpp"
#include "fixtures.hpp"

using namespace apnea;

namespace {

ErrorKind config_error(std::string_view text) {
  try {
    parse_run_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised for " << text);
  return ErrorKind::kIo;
}

}  // namespace

TEST_CASE("empty config keeps the defaults") {
  const auto cfg = parse_run_config("{}");
  CHECK(cfg.pipeline.knn.k == 15);
  CHECK(cfg.pipeline.knn.k_prime == 5);
  CHECK_FALSE(cfg.pipeline.svm.gamma);
  CHECK(cfg.pipeline.svm.C == 1.0);
  CHECK(cfg.pipeline.detector.desat_threshold == 3.0);
  CHECK_FALSE(cfg.db_path);
  CHECK(pipeline_config_json(cfg.pipeline) == pipeline_config_json(PipelineConfig{}));
}

TEST_CASE("config keys override the base") {
  const auto cfg = parse_run_config(R"({
    "knn": {"k": 4, "k_prime": 2, "gender_weight": 0.5},
    "svm": {"C": 10, "gamma": 0.25, "train_stride_epochs": 5},
    "detector": {"merge_gap_s": 3, "desat_lag_s": 20},
    "feature": {"band_high_hz": 0.8},
    "evaluation": {"min_overlap_s": 1.5},
    "io": {"db_path": "db", "out_path": "out/report.json"}
  })");
  const auto& p = cfg.pipeline;
  CHECK(p.knn.k == 4);
  CHECK(p.knn.k_prime == 2);
  CHECK(p.knn.gender_weight == 0.5);
  CHECK(p.knn.age_weight == 1.0);
  CHECK(p.svm.C == 10.0);
  CHECK(*p.svm.gamma == 0.25);
  CHECK(p.train_stride_epochs == 5);
  CHECK(p.detector.merge_gap_s == 3.0);
  CHECK(p.detector.desat_lag_s == 20.0);
  CHECK(p.feature.band_high_hz == 0.8);
  CHECK(p.min_overlap_s == 1.5);
  CHECK(*cfg.db_path == "db");
  CHECK(*cfg.out_path == "out/report.json");

  // Layering: a later file only touches its own keys.
  const auto layered = parse_run_config(R"({"svm": {"gamma": "auto"}})", cfg);
  CHECK_FALSE(layered.pipeline.svm.gamma);
  CHECK(layered.pipeline.knn.k == 4);
}

TEST_CASE("canonical JSON parses back to the same settings") {
  PipelineConfig p;
  p.knn.k = 7;
  p.svm.gamma = 0.125;
  p.detector.vote_threshold = 0.75;
  p.min_overlap_s = 2.0;
  const auto text = pipeline_config_json(p);
  CHECK(pipeline_config_json(parse_run_config(text).pipeline) == text);
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK(config_error(R"({"knn": {"kk": 3}})") == ErrorKind::kInvalidConfig);
  CHECK(config_error(R"({"extra": {}})") == ErrorKind::kInvalidConfig);
  CHECK(config_error(R"({"svm": {"C": "big"}})") == ErrorKind::kInvalidConfig);
  CHECK(config_error(R"({"svm": {"gamma": "fast"}})") == ErrorKind::kInvalidConfig);
  CHECK(config_error(R"({"knn": {"k": -1}})") == ErrorKind::kInvalidConfig);
  CHECK(config_error(R"({"knn": {"k": 0}})") == ErrorKind::kInvalidConfig);
  CHECK(config_error(R"({"detector": {"vote_threshold": 2}})") == ErrorKind::kInvalidConfig);
  CHECK(config_error(R"({"io": {"db_path": 3}})") == ErrorKind::kInvalidConfig);
  CHECK(config_error("[1, 2]") == ErrorKind::kInvalidConfig);
  CHECK(config_error("{not json") == ErrorKind::kInvalidConfig);
}

TEST_CASE("config files are read from disk") {
  testing::TempDir dir("config");
  {
    std::ofstream out(dir / "run.json");
    out << R"({"knn": {"k": 3, "k_prime": 1}})";
  }
  CHECK(load_run_config(dir / "run.json").pipeline.knn.k == 3);
  try {
    load_run_config(dir / "missing.json");
    FAIL("expected MissingFile");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMissingFile);
  }
}
