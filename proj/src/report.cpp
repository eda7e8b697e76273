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

#include "apnea/report.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "apnea/config.hpp"
#include "apnea/error.hpp"
#include "csv.hpp"

namespace apnea {

namespace {

using json = nlohmann::json;

json optional_number(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return "inf";
  return *v;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  if (std::isinf(*v)) return "inf";
  return fixed(100.0 * *v, 1) + "%";
}

std::string ratio(const std::optional<double>& v) {
  if (!v) return "n/a";
  if (std::isinf(*v)) return "inf";
  return fixed(*v, 3);
}

}  // namespace

std::string report_json(const EvalReport& r) {
  json j;
  j["config"] = json::parse(pipeline_config_json(r.config, -1));

  json subjects = json::array();
  for (const auto& s : r.subjects) {
    subjects.push_back({{"id", s.id},
                        {"expert_severity", std::string(to_string(s.expert_severity))},
                        {"predicted_severity", std::string(to_string(s.predicted_severity))},
                        {"expert_rei", s.expert_rei},
                        {"rei", s.rei},
                        {"recording_hours", s.recording_hours},
                        {"tp", s.score.tp},
                        {"fp", s.score.fp},
                        {"fn", s.score.fn},
                        {"ppv", s.score.ppv},
                        {"recall", s.score.recall},
                        {"f1", s.score.f1},
                        {"neighbors", s.neighbors},
                        {"solver_status", std::string(to_string(s.solver_status))}});
  }
  j["subjects"] = subjects;

  json strata = json::array();
  const auto names = stratum_names();
  for (std::size_t k = 0; k < r.strata.size(); ++k) {
    const auto& st = r.strata[k];
    auto stat = [](const MedianMad& m) { return json{{"median", m.median}, {"mad", m.mad}}; };
    if (st) {
      strata.push_back({{"name", st->name},
                        {"count", st->count},
                        {"ppv", stat(st->ppv)},
                        {"recall", stat(st->recall)},
                        {"f1", stat(st->f1)}});
    } else {
      strata.push_back({{"name", names[k]}, {"count", 0}, {"ppv", nullptr}, {"recall", nullptr}, {"f1", nullptr}});
    }
  }
  j["strata"] = strata;

  json labels = json::array();
  for (std::size_t c = 0; c < kSeverityCount; ++c) labels.push_back(std::string(to_string(static_cast<Severity>(c))));
  j["confusion_matrix"] = {{"rows", "predicted"}, {"columns", "expert"}, {"labels", labels}, {"counts", r.matrix.counts}};

  json sens = json::array(), ppv = json::array();
  for (std::size_t c = 0; c < kSeverityCount; ++c) {
    sens.push_back(optional_number(r.severity.sensitivity[c]));
    ppv.push_back(optional_number(r.severity.ppv[c]));
  }
  j["severity"] = {{"accuracy", r.severity.accuracy}, {"sensitivity", sens}, {"ppv", ppv}};

  const auto& b = r.binary;
  j["binary"] = {{"cutoff", "REI>=15"},
                 {"tp", b.tp},
                 {"fn", b.fn},
                 {"fp", b.fp},
                 {"tn", b.tn},
                 {"sensitivity", optional_number(b.sensitivity)},
                 {"specificity", optional_number(b.specificity)},
                 {"accuracy", optional_number(b.accuracy)},
                 {"lr_plus", optional_number(b.lr_plus)},
                 {"lr_minus", optional_number(b.lr_minus)},
                 {"degenerate", b.degenerate}};
  return j.dump(2) + "\n";
}

std::string report_markdown(const EvalReport& r) {
  std::string md = "# LOOCV screening report\n\n";
  md += "Subjects: " + std::to_string(r.subjects.size()) + ", K = " + std::to_string(r.config.knn.k) +
        ", K' = " + std::to_string(r.config.knn.k_prime) + "\n\n";

  md += "## Per-subject results\n\n";
  md += "| id | expert | predicted | expert REI | REI | TP | FP | FN | PPV | recall | F1 |\n";
  md += "|---|---|---|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& s : r.subjects) {
    md += "| " + s.id + " | " + std::string(to_string(s.expert_severity)) + " | " +
          std::string(to_string(s.predicted_severity)) + " | " + fixed(s.expert_rei, 1) + " | " + fixed(s.rei, 1) +
          " | " + std::to_string(s.score.tp) + " | " + std::to_string(s.score.fp) + " | " +
          std::to_string(s.score.fn) + " | " + fixed(s.score.ppv, 2) + " | " + fixed(s.score.recall, 2) + " | " +
          fixed(s.score.f1, 2) + " |\n";
  }

  md += "\n## Event-by-event summary (median ± MAD)\n\n";
  md += "| stratum | n | PPV | recall | F1 |\n|---|---:|---|---|---|\n";
  const auto names = stratum_names();
  for (std::size_t k = 0; k < r.strata.size(); ++k) {
    const auto& st = r.strata[k];
    auto cell = [](const MedianMad& m) { return fixed(m.median, 2) + " ± " + fixed(m.mad, 2); };
    if (st) {
      md += "| " + st->name + " | " + std::to_string(st->count) + " | " + cell(st->ppv) + " | " + cell(st->recall) +
            " | " + cell(st->f1) + " |\n";
    } else {
      md += "| " + names[k] + " | 0 | n/a | n/a | n/a |\n";
    }
  }

  md += "\n## Severity confusion matrix (rows predicted, columns expert)\n\n";
  md += "| | Normal | Mild | Moderate | Severe |\n|---|---:|---:|---:|---:|\n";
  for (std::size_t p = 0; p < kSeverityCount; ++p) {
    md += "| " + std::string(to_string(static_cast<Severity>(p)));
    for (std::size_t e = 0; e < kSeverityCount; ++e) md += " | " + std::to_string(r.matrix.counts[p][e]);
    md += " |\n";
  }
  md += "\nAccuracy: " + percent(r.severity.accuracy) + "\n\n";
  md += "| class | sensitivity | PPV |\n|---|---:|---:|\n";
  for (std::size_t c = 0; c < kSeverityCount; ++c) {
    md += "| " + std::string(to_string(static_cast<Severity>(c))) + " | " + percent(r.severity.sensitivity[c]) +
          " | " + percent(r.severity.ppv[c]) + " |\n";
  }

  const auto& b = r.binary;
  md += "\n## Binary screening (REI >= 15)\n\n";
  md += "TP " + std::to_string(b.tp) + ", FN " + std::to_string(b.fn) + ", FP " + std::to_string(b.fp) + ", TN " +
        std::to_string(b.tn) + "\n\n";
  md += "- sensitivity: " + percent(b.sensitivity) + "\n";
  md += "- specificity: " + percent(b.specificity) + "\n";
  md += "- accuracy: " + percent(b.accuracy) + "\n";
  md += "- LR+: " + ratio(b.lr_plus) + "\n";
  md += "- LR-: " + ratio(b.lr_minus) + "\n";
  if (b.degenerate) md += "\nOne expert-side class is empty; some statistics are undefined.\n";
  return md;
}

std::string timeline_svg(const SubjectResult& s) {
  constexpr double kWidth = 1000.0, kLeft = 90.0, kRight = 20.0, kLane = 24.0;
  const double span_s = std::max(1.0, s.recording_hours * 3600.0);
  const double scale = (kWidth - kLeft - kRight) / span_s;
  auto x = [&](double t) { return fixed(kLeft + t * scale, 2); };
  auto w = [&](double d) { return fixed(std::max(0.5, d * scale), 2); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1000\" height=\"110\" "
                    "font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<text x=\"10\" y=\"16\">" + s.id + ": expert " + std::string(to_string(s.expert_severity)) + " (REI " +
         fixed(s.expert_rei, 1) + "), predicted " + std::string(to_string(s.predicted_severity)) + " (REI " +
         fixed(s.rei, 1) + "), F1 " + fixed(s.score.f1, 2) + "</text>\n";
  svg += "<text x=\"10\" y=\"45\">expert</text>\n<text x=\"10\" y=\"77\">detected</text>\n";
  svg += "<rect x=\"" + x(0) + "\" y=\"30\" width=\"" + w(span_s) + "\" height=\"" + fixed(kLane, 0) +
         "\" fill=\"#f4f4f4\"/>\n";
  svg += "<rect x=\"" + x(0) + "\" y=\"62\" width=\"" + w(span_s) + "\" height=\"" + fixed(kLane, 0) +
         "\" fill=\"#f4f4f4\"/>\n";
  for (const auto& e : s.annotations) {
    svg += "<rect x=\"" + x(e.start_s) + "\" y=\"30\" width=\"" + w(e.duration_s) + "\" height=\"24\" fill=\"#1f77b4\"/>\n";
  }
  for (const auto& e : s.events) {
    const char* color = e.source == EventSource::kSvm ? "#d62728" : "#ff7f0e";
    svg += "<rect x=\"" + x(e.start_s) + "\" y=\"62\" width=\"" + w(e.duration_s) + "\" height=\"24\" fill=\"" +
           color + "\"/>\n";
  }
  svg += "<text x=\"" + x(0) + "\" y=\"104\">0 min</text>\n";
  svg += "<text x=\"" + fixed(kWidth - kRight - 50.0, 2) + "\" y=\"104\">" + fixed(span_s / 60.0, 0) +
         " min</text>\n</svg>\n";
  return svg;
}

void write_report(const EvalReport& report, const std::filesystem::path& json_path,
                  const std::optional<std::filesystem::path>& plots_dir) {
  if (json_path.has_parent_path()) std::filesystem::create_directories(json_path.parent_path());
  csv::write_text(json_path, report_json(report));
  auto md_path = json_path;
  md_path.replace_extension(".md");
  csv::write_text(md_path, report_markdown(report));
  if (plots_dir) {
    std::filesystem::create_directories(*plots_dir);
    for (const auto& s : report.subjects) csv::write_text(*plots_dir / (s.id + ".svg"), timeline_svg(s));
  }
}

}  // namespace apnea
