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

#include "apnea/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "apnea/error.hpp"

namespace apnea {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { raise(ErrorKind::kInvalidConfig, msg); }

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail("'" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) fail("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

double number(const json& obj, const std::string& where, const char* key, double current) {
  if (!obj.contains(key)) return current;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail("'" + where + "." + key + "' must be a number");
  return v.get<double>();
}

std::size_t count(const json& obj, const std::string& where, const char* key, std::size_t current) {
  if (!obj.contains(key)) return current;
  const auto& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && std::floor(d) == d && d < 1e15) return static_cast<std::size_t>(d);
  }
  fail("'" + where + "." + key + "' must be a non-negative integer");
}

std::filesystem::path path_value(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_string()) fail(std::string("'io.") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const RunConfig& base) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  require_keys(root, "", {"knn", "svm", "detector", "feature", "evaluation", "io"});

  RunConfig out = base;
  auto& p = out.pipeline;
  if (root.contains("knn")) {
    const auto& s = root["knn"];
    require_keys(s, "knn", {"k", "k_prime", "gender_weight", "age_weight", "bmi_weight"});
    p.knn.k = count(s, "knn", "k", p.knn.k);
    p.knn.k_prime = count(s, "knn", "k_prime", p.knn.k_prime);
    p.knn.gender_weight = number(s, "knn", "gender_weight", p.knn.gender_weight);
    p.knn.age_weight = number(s, "knn", "age_weight", p.knn.age_weight);
    p.knn.bmi_weight = number(s, "knn", "bmi_weight", p.knn.bmi_weight);
  }
  if (root.contains("svm")) {
    const auto& s = root["svm"];
    require_keys(s, "svm", {"C", "gamma", "tolerance", "max_iterations", "train_stride_epochs"});
    p.svm.C = number(s, "svm", "C", p.svm.C);
    if (s.contains("gamma")) {
      const auto& g = s["gamma"];
      if (g.is_string() && g.get<std::string>() == "auto") {
        p.svm.gamma.reset();
      } else if (g.is_number()) {
        p.svm.gamma = g.get<double>();
      } else {
        fail("'svm.gamma' must be a number or \"auto\"");
      }
    }
    p.svm.tolerance = number(s, "svm", "tolerance", p.svm.tolerance);
    p.svm.max_iterations = count(s, "svm", "max_iterations", p.svm.max_iterations);
    p.train_stride_epochs = count(s, "svm", "train_stride_epochs", p.train_stride_epochs);
  }
  if (root.contains("detector")) {
    const auto& s = root["detector"];
    require_keys(s, "detector", {"merge_gap_s", "paradox_vote_bonus", "vote_threshold", "desat_threshold", "desat_lag_s"});
    p.detector.merge_gap_s = number(s, "detector", "merge_gap_s", p.detector.merge_gap_s);
    p.detector.paradox_vote_bonus = number(s, "detector", "paradox_vote_bonus", p.detector.paradox_vote_bonus);
    p.detector.vote_threshold = number(s, "detector", "vote_threshold", p.detector.vote_threshold);
    p.detector.desat_threshold = number(s, "detector", "desat_threshold", p.detector.desat_threshold);
    p.detector.desat_lag_s = number(s, "detector", "desat_lag_s", p.detector.desat_lag_s);
  }
  if (root.contains("feature")) {
    const auto& s = root["feature"];
    require_keys(s, "feature", {"band_low_hz", "band_high_hz", "paradox_threshold"});
    p.feature.band_low_hz = number(s, "feature", "band_low_hz", p.feature.band_low_hz);
    p.feature.band_high_hz = number(s, "feature", "band_high_hz", p.feature.band_high_hz);
    p.feature.paradox_threshold = number(s, "feature", "paradox_threshold", p.feature.paradox_threshold);
  }
  if (root.contains("evaluation")) {
    const auto& s = root["evaluation"];
    require_keys(s, "evaluation", {"min_overlap_s"});
    p.min_overlap_s = number(s, "evaluation", "min_overlap_s", p.min_overlap_s);
  }
  if (root.contains("io")) {
    const auto& s = root["io"];
    require_keys(s, "io", {"db_path", "out_path"});
    if (s.contains("db_path")) out.db_path = path_value(s, "db_path");
    if (s.contains("out_path")) out.out_path = path_value(s, "out_path");
  }
  try {
    validate(p);
  } catch (const Error& e) {
    fail(e.what());
  }
  return out;
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::kMissingFile, "cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), base);
}

std::string pipeline_config_json(const PipelineConfig& p, int indent) {
  json j;
  j["knn"] = {{"k", p.knn.k},
              {"k_prime", p.knn.k_prime},
              {"gender_weight", p.knn.gender_weight},
              {"age_weight", p.knn.age_weight},
              {"bmi_weight", p.knn.bmi_weight}};
  j["svm"] = {{"C", p.svm.C},
              {"gamma", p.svm.gamma ? json(*p.svm.gamma) : json("auto")},
              {"tolerance", p.svm.tolerance},
              {"max_iterations", p.svm.max_iterations},
              {"train_stride_epochs", p.train_stride_epochs}};
  j["detector"] = {{"merge_gap_s", p.detector.merge_gap_s},
                   {"paradox_vote_bonus", p.detector.paradox_vote_bonus},
                   {"vote_threshold", p.detector.vote_threshold},
                   {"desat_threshold", p.detector.desat_threshold},
                   {"desat_lag_s", p.detector.desat_lag_s}};
  j["feature"] = {{"band_low_hz", p.feature.band_low_hz},
                  {"band_high_hz", p.feature.band_high_hz},
                  {"paradox_threshold", p.feature.paradox_threshold}};
  j["evaluation"] = {{"min_overlap_s", p.min_overlap_s}};
  return j.dump(indent);
}

}  // namespace apnea
