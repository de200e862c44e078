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

// avseg: artery/vein segmentation toolkit.
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime
// failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "avseg/io/commands.hpp"

namespace fs = std::filesystem;
using namespace avseg;
using namespace avseg::io;

namespace {

// Options shared by the commands that take a run configuration.
struct ConfigOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string data_root;
  std::optional<std::string> approach;
  bool enhanced = false, original = false;

  void attach(CLI::App* app, bool with_data_root = true) {
    app->add_option("--config", config_file, "flat key = value config file")->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "override one config key (key=value); repeatable");
    if (with_data_root) app->add_option("--data-root", data_root, "dataset root (<root>/<split>/{images,av,mask,vessel})");
  }

  void attach_approach(CLI::App* app) {
    app->add_option("--approach", approach, "ms or traditional")->check(CLI::IsMember({"ms", "traditional"}));
    auto* e = app->add_flag("--enhanced", enhanced, "train on contrast-enhanced images");
    auto* o = app->add_flag("--original", original, "train on original images");
    e->excludes(o);
  }

  // defaults < config file < --set overrides < dedicated flags
  RunConfig resolve() const {
    RunConfig c;
    if (!config_file.empty()) apply_config_file(c, config_file);
    for (const auto& kv : overrides) apply_override(c, kv);
    if (!data_root.empty()) c.data_root = data_root;
    if (approach) c.train.approach = avseg::parse_approach(*approach);
    if (enhanced) c.train.use_enhanced = true;
    if (original) c.train.use_enhanced = false;
    c.finalize();
    return c;
  }
};

void require_dir(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " is required");
  if (!fs::is_directory(path)) throw ConfigError(std::string(what) + " '" + path + "' is not a directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"avseg: simultaneous artery/vein/vessel segmentation of retinal images"};
  app.require_subcommand(1);

  // synth
  SynthOptions synth;
  std::vector<int> synth_size{256, 256};
  auto* c_synth = app.add_subcommand("synth", "write a synthetic dataset in the expected layout");
  c_synth->add_option("--out", synth.out, "dataset root to create")->required();
  c_synth->add_option("--train", synth.train_images, "training images")->check(CLI::NonNegativeNumber);
  c_synth->add_option("--test", synth.test_images, "test images")->check(CLI::NonNegativeNumber);
  c_synth->add_option("--size", synth_size, "rows cols")->expected(2);
  c_synth->add_option("--seed", synth.seed, "generator seed");

  // preprocess
  ConfigOptions pre_cfg;
  PreprocessOptions pre;
  auto* c_pre = app.add_subcommand("preprocess", "write contrast-enhanced images (16-bit PNG + range sidecar)");
  pre_cfg.attach(c_pre);
  c_pre->add_option("--split", pre.split, "train or test")->check(CLI::IsMember({"train", "test"}));
  c_pre->add_option("--out", pre.out, "output directory")->required();

  // train
  ConfigOptions train_cfg;
  std::optional<std::uint64_t> train_seed;
  std::string train_out;
  auto* c_train = app.add_subcommand("train", "train one model");
  train_cfg.attach(c_train);
  train_cfg.attach_approach(c_train);
  c_train->add_option("--seed", train_seed, "initialisation seed (default: first of `seeds`)");
  c_train->add_option("--out", train_out, "output directory")->required();

  // predict
  PredictOptions pred;
  std::string pred_root;
  auto* c_pred = app.add_subcommand("predict", "write probability maps for a split");
  c_pred->add_option("--checkpoint", pred.checkpoint, "checkpoint stem or .json/.bin file")->required();
  c_pred->add_option("--data-root", pred_root, "dataset root")->required();
  c_pred->add_option("--split", pred.split, "train or test")->check(CLI::IsMember({"train", "test"}));
  c_pred->add_option("--out", pred.out, "output directory")->required();

  // evaluate
  ConfigOptions eval_cfg;
  EvaluateOptions ev;
  std::string ev_pred, ev_gt;
  auto* c_eval = app.add_subcommand("evaluate", "evaluate probability maps against the ground truth");
  eval_cfg.attach(c_eval, false);
  eval_cfg.attach_approach(c_eval);
  c_eval->add_option("--pred-dir", ev_pred, "directory with <id>_<structure>.png maps")->required();
  c_eval->add_option("--gt-root", ev_gt, "dataset root holding the ground truth")->required();
  c_eval->add_option("--split", ev.split, "train or test")->check(CLI::IsMember({"train", "test"}));
  c_eval->add_option("--out", ev.out, "report path (CSV and PNG files go next to it)");
  c_eval->add_flag("--first-expert-vessels", ev.first_expert_vessels,
                   "vessel/ holds an independent vessel segmentation; do not require it to match the A/V annotation");

  // localize-crossings
  ConfigOptions loc_cfg;
  LocalizeOptions loc;
  std::string loc_pred, loc_gt;
  auto* c_loc = app.add_subcommand("localize-crossings", "detect vessel crossings in ms probability maps");
  loc_cfg.attach(c_loc, false);
  c_loc->add_option("--pred-dir", loc_pred, "directory with <id>_artery.png and <id>_vein.png")->required();
  c_loc->add_option("--threshold", loc.threshold, "binarisation threshold on artery x vein")->check(CLI::Range(0.0, 1.0));
  c_loc->add_option("--gt-root", loc_gt, "optional dataset root for TP/FP/FN counts");
  c_loc->add_option("--split", loc.split, "train or test")->check(CLI::IsMember({"train", "test"}));
  c_loc->add_option("--out", loc.out, "output JSON");

  // reproduce
  ConfigOptions rep_cfg;
  ReproduceOptions rep;
  std::string rep_variants, rep_seeds, rep_out;
  auto* c_rep = app.add_subcommand("reproduce", "train and evaluate every variant for every seed");
  rep_cfg.attach(c_rep);
  c_rep->add_option("--variants", rep_variants, "comma list of bce3|ce4-enhanced|original (default: all four)");
  c_rep->add_option("--seeds", rep_seeds, "comma list of seeds (default: config `seeds`)");
  c_rep->add_option("--jobs", rep.jobs, "seed runs in parallel")->check(CLI::PositiveNumber);
  c_rep->add_option("--out", rep_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*c_synth) {
      synth.size = {synth_size[0], synth_size[1]};
      if (synth.size.rows < 16 || synth.size.cols < 16) throw ConfigError("--size must be at least 16 16");
      cmd_synth(synth);
      return 0;
    }
    if (*c_pre) {
      pre.cfg = pre_cfg.resolve();
      require_dir(pre.cfg.data_root, "--data-root");
      return cmd_preprocess(pre);
    }
    if (*c_train) {
      const RunConfig cfg = train_cfg.resolve();
      require_dir(cfg.data_root, "--data-root");
      const std::uint64_t seed = train_seed ? *train_seed : cfg.train.seeds.front();
      const auto data = load_dataset(cfg.data_root, "train");
      const auto r = train_to_directory(cfg, data, seed, train_out);
      std::cout << "best epoch " << r.history.best_epoch << " of " << r.history.log.size() << ", validation loss "
                << fixed4(r.history.best_val_loss) << "\n";
      return 0;
    }
    if (*c_pred) {
      require_dir(pred_root, "--data-root");
      pred.data_root = pred_root;
      return cmd_predict(pred);
    }
    if (*c_eval) {
      ev.cfg = eval_cfg.resolve();
      require_dir(ev_pred, "--pred-dir");
      require_dir(ev_gt, "--gt-root");
      ev.pred_dir = ev_pred;
      ev.gt_root = ev_gt;
      return cmd_evaluate(ev);
    }
    if (*c_loc) {
      loc.cfg = loc_cfg.resolve();
      require_dir(loc_pred, "--pred-dir");
      if (!loc_gt.empty()) require_dir(loc_gt, "--gt-root");
      loc.pred_dir = loc_pred;
      loc.gt_root = loc_gt;
      return cmd_localize(loc);
    }
    if (*c_rep) {
      rep.cfg = rep_cfg.resolve();
      require_dir(rep.cfg.data_root, "--data-root");
      if (!rep_variants.empty()) {
        rep.variants = split_list(rep_variants);
        for (const auto& v : rep.variants) parse_variant(v);
      }
      if (!rep_seeds.empty()) apply_setting(rep.cfg, "seeds", rep_seeds);
      rep.out = rep_out;
      return cmd_reproduce(rep);
    }
  } catch (const avseg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
