/*
 * Copyright 2026 The avseg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Evaluation reports: JSON summary, CSV curve dumps, PNG plots. Every
// number in JSON is rounded to 4 decimals; undefined values are null.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "avseg/error.hpp"
#include "avseg/io/plot.hpp"
#include "avseg/pipeline.hpp"
#include "avseg/train.hpp"

namespace avseg::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr std::size_t kReportCurvePoints = 101;
inline constexpr std::size_t kCsvCurvePoints = 5000;

inline json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  const double r = std::round(v * 1e4) / 1e4;
  return r == 0.0 ? 0.0 : r;  // no "-0.0"
}

inline json rates(const metrics::BinaryCounts& c) {
  return {{"sensitivity", num(c.sensitivity())}, {"specificity", num(c.specificity())}, {"accuracy", num(c.accuracy())},
          {"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

inline json roc_points(const metrics::RocCurve& c, std::size_t max_points) {
  json a = json::array();
  for (const auto& p : metrics::thin(c.points, max_points))
    a.push_back({{"threshold", std::isfinite(p.threshold) ? num(p.threshold) : json("inf")}, {"fpr", num(p.fpr)}, {"tpr", num(p.tpr)}});
  return a;
}

inline json pr_points(const metrics::PrCurve& c, std::size_t max_points) {
  json a = json::array();
  for (const auto& p : metrics::thin(c.points, max_points))
    a.push_back({{"threshold", num(p.threshold)}, {"recall", num(p.recall)}, {"precision", num(p.precision)}});
  return a;
}

inline json report_json(const EvaluationResult& r) {
  json j;
  j["schema"] = "avseg-evaluation-1";
  j["approach"] = avseg::to_string(r.approach);
  j["images"] = r.ids;
  j["settings"] = {{"operating_threshold", r.settings.eval.operating_threshold},
                   {"vessel_rule", r.settings.eval.vessel_rule == metrics::VesselScoreRule::inverse_background ? "inverse-background"
                                                                                                               : "artery-plus-vein"},
                   {"crossing_radius", r.settings.crossing_radius},
                   {"match_distance", r.settings.match_distance}};

  json seg;
  for (int s = 0; s < 3; ++s) {
    const auto& roc = r.structures.roc[static_cast<std::size_t>(s)];
    const auto& pr = r.structures.pr[static_cast<std::size_t>(s)];
    if (!roc || !pr) {
      seg[kMsChannelNames[s]] = nullptr;
      continue;
    }
    seg[kMsChannelNames[s]] = {{"auc_roc", num(roc->auc)},
                               {"auc_pr", num(pr->auc)},
                               {"positives", roc->positives},
                               {"negatives", roc->negatives},
                               {"roc", roc_points(*roc, kReportCurvePoints)},
                               {"pr", pr_points(*pr, kReportCurvePoints)}};
  }
  j["segmentation"] = seg;

  if (r.av) {
    json av = rates(r.av->counts);
    av["auc_roc"] = num(r.av->roc.auc);
    av["roc"] = roc_points(r.av->roc, kReportCurvePoints);
    j["av_classification"] = av;
  } else {
    j["av_classification"] = nullptr;
  }

  json vb = rates(r.vessel.counts);
  vb["auc_roc"] = num(r.vessel.roc.auc);
  j["vessel_background"] = vb;

  json joint = json::array();
  for (const auto& p : r.joint.points)
    joint.push_back({{"threshold", num(p.threshold)}, {"sensitivity", num(p.sensitivity)}, {"accuracy", num(p.accuracy)},
                     {"av_pixels", p.av_pixels}});
  json omitted = json::array();
  for (double t : r.joint.omitted) omitted.push_back(num(t));
  j["joint_curve"] = {{"points", joint}, {"omitted_thresholds", omitted}};

  if (r.crossings) {
    json pts = json::array();
    for (const auto& p : *r.crossings)
      pts.push_back({{"threshold", num(p.threshold)}, {"precision", num(p.precision)}, {"recall", num(p.recall)}, {"tp", p.tp},
                     {"fp", p.fp}, {"fn", p.fn}});
    j["crossings"] = {{"points", pts}};
  } else {
    j["crossings"] = nullptr;
  }
  j["warnings"] = r.warnings;
  return j;
}

// Flat metric names used for per-seed tables and aggregates.
inline MetricMap summary_metrics(const EvaluationResult& r) {
  MetricMap m;
  for (int s = 0; s < 3; ++s) {
    const auto idx = static_cast<std::size_t>(s);
    if (r.structures.roc[idx]) m[std::string(kMsChannelNames[s]) + ".auc_roc"] = r.structures.roc[idx]->auc;
    if (r.structures.pr[idx]) m[std::string(kMsChannelNames[s]) + ".auc_pr"] = r.structures.pr[idx]->auc;
  }
  if (r.av) {
    m["av.sensitivity"] = r.av->counts.sensitivity();
    m["av.specificity"] = r.av->counts.specificity();
    m["av.accuracy"] = r.av->counts.accuracy();
    m["av.auc_roc"] = r.av->roc.auc;
  }
  m["vessel_bg.sensitivity"] = r.vessel.counts.sensitivity();
  m["vessel_bg.specificity"] = r.vessel.counts.specificity();
  m["vessel_bg.accuracy"] = r.vessel.counts.accuracy();
  m["vessel_bg.auc_roc"] = r.vessel.roc.auc;
  return m;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << text;
  if (!out) throw RuntimeFailure("error while writing " + path.string());
}

inline std::string fixed4(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string fixed8(double v) {
  if (!std::isfinite(v)) return std::isinf(v) ? (v > 0 ? "inf" : "-inf") : "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8f", v);
  return buf;
}

// report.json plus curve CSVs and PNG plots in the directory of `json_path`.
inline void write_evaluation(const fs::path& json_path, const EvaluationResult& r) {
  write_text(json_path, report_json(r).dump(2) + "\n");
  const fs::path dir = json_path.has_parent_path() ? json_path.parent_path() : fs::path(".");

  std::vector<Series> roc_series, pr_series;
  for (int s = 0; s < 3; ++s) {
    const auto idx = static_cast<std::size_t>(s);
    const std::string name = kMsChannelNames[s];
    if (const auto& roc = r.structures.roc[idx]) {
      std::string csv = "threshold,fpr,tpr\n";
      Series ser{name + " (AUC " + fixed4(roc->auc) + ")", {}};
      for (const auto& p : metrics::thin(roc->points, kCsvCurvePoints)) {
        csv += fixed8(p.threshold) + "," + fixed8(p.fpr) + "," + fixed8(p.tpr) + "\n";
        ser.points.emplace_back(p.fpr, p.tpr);
      }
      write_text(dir / ("roc_" + name + ".csv"), csv);
      roc_series.push_back(std::move(ser));
    }
    if (const auto& pr = r.structures.pr[idx]) {
      std::string csv = "threshold,recall,precision\n";
      Series ser{name + " (AUC " + fixed4(pr->auc) + ")", {}};
      for (const auto& p : metrics::thin(pr->points, kCsvCurvePoints)) {
        csv += fixed8(p.threshold) + "," + fixed8(p.recall) + "," + fixed8(p.precision) + "\n";
        ser.points.emplace_back(p.recall, p.precision);
      }
      write_text(dir / ("pr_" + name + ".csv"), csv);
      pr_series.push_back(std::move(ser));
    }
  }
  if (!roc_series.empty()) write_plot(dir / "roc.png", "ROC", "false positive rate", "true positive rate", roc_series);
  if (!pr_series.empty()) write_plot(dir / "pr.png", "Precision-recall", "recall", "precision", pr_series);

  if (r.av) {
    std::string csv = "threshold,fpr,tpr\n";
    Series ser{"artery vs vein (AUC " + fixed4(r.av->roc.auc) + ")", {}};
    for (const auto& p : metrics::thin(r.av->roc.points, kCsvCurvePoints)) {
      csv += fixed8(p.threshold) + "," + fixed8(p.fpr) + "," + fixed8(p.tpr) + "\n";
      ser.points.emplace_back(p.fpr, p.tpr);
    }
    write_text(dir / "roc_av.csv", csv);
    write_plot(dir / "roc_av.png", "A/V classification ROC", "false positive rate (veins)", "true positive rate (arteries)", {ser});
  }

  {
    std::string csv = "threshold,vessel_sensitivity,av_accuracy,av_pixels\n";
    Series ser{"joint curve", {}};
    for (const auto& p : r.joint.points) {
      csv += fixed8(p.threshold) + "," + fixed8(p.sensitivity) + "," + fixed8(p.accuracy) + "," + std::to_string(p.av_pixels) + "\n";
      ser.points.emplace_back(p.sensitivity, p.accuracy);
    }
    write_text(dir / "joint_curve.csv", csv);
    if (!ser.points.empty())
      write_plot(dir / "joint_curve.png", "Vessel sensitivity vs A/V accuracy", "vessel sensitivity", "A/V accuracy", {ser});
  }

  if (r.crossings) {
    std::string csv = "threshold,precision,recall,tp,fp,fn\n";
    Series ser{"crossings (d = " + fixed4(r.settings.match_distance) + " px)", {}};
    for (const auto& p : *r.crossings) {
      csv += fixed8(p.threshold) + "," + fixed8(p.precision) + "," + fixed8(p.recall) + "," + std::to_string(p.tp) + "," +
             std::to_string(p.fp) + "," + std::to_string(p.fn) + "\n";
      if (std::isfinite(p.precision) && std::isfinite(p.recall)) ser.points.emplace_back(p.recall, p.precision);
    }
    write_text(dir / "crossings_pr.csv", csv);
    if (!ser.points.empty()) write_plot(dir / "crossings_pr.png", "Crossing localization", "recall", "precision", {ser});
  }
}

}  // namespace avseg::io
