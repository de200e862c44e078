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

// The command-line subcommands as library functions.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "avseg/io/checkpoint.hpp"
#include "avseg/io/config.hpp"
#include "avseg/io/dataset.hpp"
#include "avseg/io/image_io.hpp"
#include "avseg/io/report.hpp"
#include "avseg/pipeline.hpp"
#include "avseg/synthetic.hpp"
#include "avseg/train.hpp"

namespace avseg::io {

// Per-item failures are collected here; the command continues with the
// remaining items and reports failure at the end.
class ItemErrors {
 public:
  void add(const std::string& item, const std::string& what) {
    std::lock_guard<std::mutex> lock(m_);
    lines_.push_back(item + ": " + what);
    std::cerr << "error: " << item << ": " << what << "\n";
  }
  bool empty() const { return lines_.empty(); }
  std::size_t size() const { return lines_.size(); }

  void write(const fs::path& path) const {
    std::string s;
    for (const auto& l : lines_) s += l + "\n";
    write_text(path, s);
  }

 private:
  std::mutex m_;
  std::vector<std::string> lines_;
};

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  fs::path out;
  int train_images = 20;
  int test_images = 20;
  Size2 size{256, 256};
  std::uint64_t seed = 0;
};

inline void cmd_synth(const SynthOptions& o) {
  SyntheticConfig cfg;
  cfg.size = o.size;
  for (const auto& [split, n] : {std::pair<std::string, int>{"train", o.train_images}, {"test", o.test_images}})
    for (int i = 0; i < n; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "%02d_%s", i + 1, split.c_str());
      const std::uint64_t s = o.seed * 1000003ULL + (split == "train" ? 0 : 500) + static_cast<std::uint64_t>(i);
      write_item(o.out, split, synthetic_fundus(cfg, s, id));
    }
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessOptions {
  RunConfig cfg;
  std::string split = "train";
  fs::path out;
};

// Enhanced images are written as 16-bit RGB PNGs, each channel min-max
// scaled; <id>.json holds the ranges so the float values can be restored.
inline int cmd_preprocess(const PreprocessOptions& o) {
  ItemErrors errors;
  const auto ids = list_ids(o.cfg.data_root, o.split);
  for (const auto& id : ids) {
    try {
      const auto a = load_item(o.cfg.data_root, o.split, id);
      const Tensor3<float> e = enhance(a.image, a.roi, o.cfg.enhance);
      const auto ranges = channel_ranges(e);
      Tensor3<float> scaled(3, e.size());
      nlohmann::json side = {{"id", id}, {"channels", nlohmann::json::array()}};
      for (int c = 0; c < 3; ++c) {
        const double lo = ranges[static_cast<std::size_t>(c)].min, hi = ranges[static_cast<std::size_t>(c)].max;
        const double span = hi > lo ? hi - lo : 1.0;
        for (std::size_t i = 0; i < e.plane_size(); ++i)
          scaled.plane(c)[i] = static_cast<float>((e.plane(c)[i] - lo) / span);
        side["channels"].push_back({{"min", lo}, {"max", hi}});
      }
      write_rgb(o.out / (id + ".png"), scaled, true);
      write_text(o.out / (id + ".json"), side.dump(2) + "\n");
    } catch (const std::exception& e) {
      errors.add(id, e.what());
    }
  }
  if (!errors.empty()) {
    errors.write(o.out / "errors.log");
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// train

inline CheckpointInfo checkpoint_info(const RunConfig& cfg, const TrainResult& r, bool diagnostic = false) {
  CheckpointInfo info;
  info.unet = cfg.unet;
  info.approach = cfg.train.approach;
  info.use_enhanced = cfg.train.use_enhanced;
  info.enhance = cfg.enhance;
  info.seed = r.seed;
  info.best_epoch = r.history.best_epoch;
  info.epochs_run = static_cast<int>(r.history.log.size());
  info.best_val_loss = r.history.best_val_loss;
  info.diagnostic = diagnostic;
  info.train_ids = r.train_ids;
  info.val_ids = r.val_ids;
  return info;
}

// Trains one seed into `out`: model.bin/model.json, training_log.csv,
// config.txt. On divergence, diverged.bin/diverged.json are written and
// the NumericalError is rethrown.
inline TrainResult train_to_directory(const RunConfig& cfg, const std::vector<AnnotatedFundusImage>& data, std::uint64_t seed,
                                      const fs::path& out, bool verbose = true) {
  fs::create_directories(out);
  write_text(out / "config.txt", to_config_text(cfg));
  std::ofstream log(out / "training_log.csv");
  if (!log) throw RuntimeFailure("cannot write " + (out / "training_log.csv").string());
  log << "epoch,train_loss,val_loss,epoch_seconds\n";
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    log << r.epoch << "," << fixed8(r.train_loss) << "," << fixed8(r.val_loss) << "," << fixed4(r.seconds) << "\n";
    log.flush();
    if (verbose)
      std::cerr << "seed " << seed << " epoch " << r.epoch << " train " << fixed4(r.train_loss) << " val " << fixed4(r.val_loss) << "\n";
  };
  hooks.on_divergence = [&](const nn::UNet<float>& model, int epoch) {
    TrainResult partial;
    partial.seed = seed;
    partial.history.best_epoch = epoch;
    partial.history.best_val_loss = std::nan("");
    save_checkpoint(out / "diverged", checkpoint_info(cfg, partial, true), model.flat_values());
  };
  TrainResult r = train_model(data, cfg.train, seed, cfg.unet, cfg.loss, cfg.augment, hooks, cfg.enhance);
  save_checkpoint(out / "model", checkpoint_info(cfg, r), r.best_params);
  return r;
}

// ---------------------------------------------------------------------------
// predict

inline std::vector<std::string> structure_names(Approach a) {
  if (a == Approach::ms) return {"artery", "vein", "vessel"};
  return {"background", "artery", "vein", "other"};
}

// <id>_<structure>.png per channel (16 bit) and <id>_rgb.png with
// R = artery, G = vessel, B = vein.
inline void write_prediction(const fs::path& dir, const avseg::ProbabilityMaps& p) {
  const auto names = structure_names(p.approach);
  for (int c = 0; c < p.maps.channels(); ++c)
    write_png16(dir / (p.id + "_" + names[static_cast<std::size_t>(c)] + ".png"), p.maps.plane_copy(c));
  const auto s = metrics::structure_scores(p);
  Tensor3<float> rgb(3, p.maps.size());
  for (std::size_t i = 0; i < s.artery.numel(); ++i) {
    rgb.plane(0)[i] = s.artery[i];
    rgb.plane(1)[i] = s.vessel[i];
    rgb.plane(2)[i] = s.vein[i];
  }
  write_rgb(dir / (p.id + "_rgb.png"), rgb);
}

inline avseg::ProbabilityMaps read_prediction(const fs::path& dir, const std::string& id, Approach a) {
  const auto names = structure_names(a);
  avseg::ProbabilityMaps p{Tensor3<float>(), a, id};
  for (std::size_t c = 0; c < names.size(); ++c) {
    const fs::path f = dir / (id + "_" + names[c] + ".png");
    if (!fs::exists(f)) throw DataError("prediction '" + id + "': missing " + f.string());
    const Grid<float> g = read_gray01(f);
    if (c == 0) p.maps = Tensor3<float>(static_cast<int>(names.size()), g.size());
    if (g.size() != p.maps.size()) throw DataError("prediction '" + id + "': channel sizes differ");
    p.maps.set_plane(static_cast<int>(c), g);
  }
  return p;
}

struct PredictOptions {
  fs::path checkpoint;
  fs::path data_root;
  std::string split = "test";
  fs::path out;
};

inline int cmd_predict(const PredictOptions& o) {
  const auto ck = load_checkpoint(o.checkpoint);
  ItemErrors errors;
  for (const auto& id : list_ids(o.data_root, o.split)) {
    try {
      const auto a = load_item(o.data_root, o.split, id);
      write_prediction(o.out, predict_maps(ck.model, ck.info.approach, ck.info.use_enhanced, a, ck.info.enhance));
    } catch (const std::exception& e) {
      errors.add(id, e.what());
    }
  }
  if (!errors.empty()) {
    errors.write(o.out / "errors.log");
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
  RunConfig cfg;
  fs::path pred_dir;
  fs::path gt_root;
  std::string split = "test";
  fs::path out = "report.json";
  bool first_expert_vessels = false;  // vessel/ is not derived from the A/V annotation
};

inline EvalSettings eval_settings(const RunConfig& cfg) {
  EvalSettings s;
  s.eval = cfg.eval;
  s.crossing_radius = cfg.crossing_radius;
  s.match_distance = cfg.match_distance;
  return s;
}

inline EvaluationResult evaluate_directory(const EvaluateOptions& o) {
  DatasetOptions dopts;
  dopts.require_vessel_consistency = !o.first_expert_vessels;
  SetEvaluator ev(o.cfg.train.approach, eval_settings(o.cfg));
  for (const auto& id : list_ids(o.gt_root, o.split)) {
    const auto gt = load_item(o.gt_root, o.split, id, dopts);
    ev.add(read_prediction(o.pred_dir, id, o.cfg.train.approach), gt);
  }
  return ev.result();
}

inline int cmd_evaluate(const EvaluateOptions& o) {
  write_evaluation(o.out, evaluate_directory(o));
  return 0;
}

// ---------------------------------------------------------------------------
// localize-crossings

struct LocalizeOptions {
  RunConfig cfg;
  fs::path pred_dir;
  double threshold = 0.5;
  fs::path gt_root;  // optional: adds TP/FP/FN against the annotation
  std::string split = "test";
  fs::path out = "crossings.json";
};

inline std::vector<std::string> prediction_ids(const fs::path& dir) {
  std::vector<std::string> ids;
  const std::string suffix = "_artery";
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string stem = e.path().stem().string();
      if (e.path().extension() == ".png" && stem.size() > suffix.size() && stem.ends_with(suffix))
        ids.push_back(stem.substr(0, stem.size() - suffix.size()));
    }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw DataError("no predictions (<id>_artery.png) found in " + dir.string());
  return ids;
}

inline int cmd_localize(const LocalizeOptions& o) {
  using nlohmann::json;
  json images = json::array();
  metrics::CrossingMatch total;
  const bool with_gt = !o.gt_root.empty();
  for (const auto& id : prediction_ids(o.pred_dir)) {
    if (fs::exists(o.pred_dir / (id + "_background.png")))
      throw UnsupportedApproachError("prediction '" + id + "' has traditional (4-class) maps; crossings need ms maps");
    const auto p = read_prediction(o.pred_dir, id, Approach::ms);
    const auto pts = metrics::localize_crossings(p, o.threshold, o.cfg.crossing_radius);
    json item = {{"id", id}, {"crossings", json::array()}};
    for (const auto& q : pts) item["crossings"].push_back({{"x", num(q.x)}, {"y", num(q.y)}});
    if (with_gt) {
      const auto gt = load_item(o.gt_root, o.split, id);
      const auto m = metrics::match_crossings(pts, metrics::gt_crossing_centroids(gt.annotation), o.cfg.match_distance);
      item["tp"] = m.tp;
      item["fp"] = m.fp;
      item["fn"] = m.fn;
      total += m;
    }
    images.push_back(item);
  }
  json j = {{"threshold", o.threshold}, {"dilation_radius", o.cfg.crossing_radius}, {"images", images}};
  if (with_gt) {
    j["match_distance"] = o.cfg.match_distance;
    j["total"] = {{"tp", total.tp}, {"fp", total.fp}, {"fn", total.fn},
                  {"precision", num(metrics::BinaryCounts::ratio(total.tp, total.tp + total.fp))},
                  {"recall", num(metrics::BinaryCounts::ratio(total.tp, total.tp + total.fn))}};
  }
  write_text(o.out, j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// reproduce

struct Variant {
  std::string name;
  Approach approach;
  bool enhanced;
};

inline Variant parse_variant(const std::string& s) {
  static const std::map<std::string, Variant> known = {
      {"bce3-enhanced", {"bce3-enhanced", Approach::ms, true}},
      {"bce3-original", {"bce3-original", Approach::ms, false}},
      {"ce4-enhanced", {"ce4-enhanced", Approach::traditional, true}},
      {"ce4-original", {"ce4-original", Approach::traditional, false}},
  };
  const auto it = known.find(s);
  if (it == known.end()) throw ConfigError("unknown variant '" + s + "' (expected bce3|ce4 - enhanced|original)");
  return it->second;
}

inline std::vector<std::string> all_variants() { return {"bce3-original", "bce3-enhanced", "ce4-original", "ce4-enhanced"}; }

struct ReproduceOptions {
  RunConfig cfg;
  std::vector<std::string> variants = all_variants();
  int jobs = 1;
  fs::path out;
  bool verbose = true;
};

inline std::string mean_pm_std(const MetricSummary& s, double scale = 100.0) {
  if (s.n == 0) return "nan";
  return fixed4(s.mean * scale) + " ± " + fixed4(s.std * scale);
}

// Trains every (variant, seed), evaluates on the test split and writes
// per-run reports plus table_segmentation.csv, table_classification.csv,
// per_seed.csv and summary.json.
inline int cmd_reproduce(const ReproduceOptions& o) {
  const auto train = load_dataset(o.cfg.data_root, "train");
  const auto test = load_dataset(o.cfg.data_root, "test");
  nlohmann::json summary = {{"variants", nlohmann::json::object()}, {"partial", false}};
  std::map<std::string, RepetitionReport> reports;

  for (const auto& vname : o.variants) {
    const Variant v = parse_variant(vname);
    RunConfig cfg = o.cfg;
    cfg.train.approach = v.approach;
    cfg.train.use_enhanced = v.enhanced;
    cfg.finalize();
    auto run = [&, cfg](std::uint64_t seed) {
      const fs::path dir = o.out / v.name / ("seed_" + std::to_string(seed));
      const TrainResult r = train_to_directory(cfg, train, seed, dir, o.verbose);
      nn::UNet<float> model(cfg.unet);
      model.load_flat_values(r.best_params);
      SetEvaluator ev(v.approach, eval_settings(cfg));
      for (const auto& a : test) {
        const auto p = predict_maps(model, v.approach, v.enhanced, a, cfg.enhance);
        write_prediction(dir / "predictions", p);
        ev.add(p, a);
      }
      const EvaluationResult res = ev.result();
      write_evaluation(dir / "report.json", res);
      return summary_metrics(res);
    };
    reports[vname] = run_repetitions(cfg.train.seeds, run, o.jobs);
  }

  std::string seg = "variant,runs,artery_auc_roc,artery_auc_pr,vein_auc_roc,vein_auc_pr,vessel_auc_roc,vessel_auc_pr\n";
  std::string cls = "variant,runs,av_sensitivity,av_specificity,av_accuracy,av_auc_roc,vessel_sensitivity,vessel_specificity,vessel_accuracy,vessel_auc_roc\n";
  std::string per_seed = "variant,seed,ok,metric,value\n";
  auto cell = [](const RepetitionReport& r, const std::string& k) {
    const auto it = r.aggregate.find(k);
    return it == r.aggregate.end() ? std::string("nan") : mean_pm_std(it->second);
  };
  for (const auto& vname : o.variants) {
    const auto& r = reports[vname];
    std::size_t ok = 0;
    for (const auto& run : r.runs) ok += run.ok;
    const std::string head = vname + "," + std::to_string(ok) + "/" + std::to_string(r.runs.size());
    seg += head;
    for (const char* k : {"artery.auc_roc", "artery.auc_pr", "vein.auc_roc", "vein.auc_pr", "vessel.auc_roc", "vessel.auc_pr"})
      seg += "," + cell(r, k);
    seg += "\n";
    cls += head;
    for (const char* k : {"av.sensitivity", "av.specificity", "av.accuracy", "av.auc_roc", "vessel_bg.sensitivity",
                          "vessel_bg.specificity", "vessel_bg.accuracy", "vessel_bg.auc_roc"})
      cls += "," + cell(r, k);
    cls += "\n";

    nlohmann::json vj = {{"runs", nlohmann::json::array()}, {"aggregate", nlohmann::json::object()}, {"partial", r.partial}};
    for (const auto& run : r.runs) {
      nlohmann::json m = nlohmann::json::object();
      for (const auto& [k, val] : run.metrics) {
        m[k] = num(val);
        per_seed += vname + "," + std::to_string(run.seed) + ",1," + k + "," + fixed8(val) + "\n";
      }
      if (!run.ok) per_seed += vname + "," + std::to_string(run.seed) + ",0,error,\n";
      vj["runs"].push_back({{"seed", run.seed}, {"ok", run.ok}, {"error", run.error}, {"metrics", m}});
    }
    for (const auto& [k, s] : r.aggregate) vj["aggregate"][k] = {{"mean", num(s.mean)}, {"std", num(s.std)}, {"n", s.n}};
    summary["variants"][vname] = vj;
    if (r.partial) summary["partial"] = true;
  }
  write_text(o.out / "table_segmentation.csv", seg);
  write_text(o.out / "table_classification.csv", cls);
  write_text(o.out / "per_seed.csv", per_seed);
  write_text(o.out / "summary.json", summary.dump(2) + "\n");
  return summary["partial"].get<bool>() ? 3 : 0;
}

}  // namespace avseg::io
