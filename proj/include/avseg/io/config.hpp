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

// Flat `key = value` configuration files. Blank lines and text after '#'
// are ignored; list values are comma separated. Later settings override
// earlier ones, so applying defaults, then the file, then command-line
// overrides gives flags > file > defaults.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "avseg/augment.hpp"
#include "avseg/error.hpp"
#include "avseg/losses.hpp"
#include "avseg/metrics/evaluation.hpp"
#include "avseg/nn/unet.hpp"
#include "avseg/preprocess.hpp"
#include "avseg/train.hpp"

namespace avseg::io {

struct RunConfig {
  TrainingConfig train;
  nn::UNetConfig unet;
  LossConfig loss;
  AugmentConfig augment;
  EnhancementConfig enhance;
  metrics::EvalOptions eval;
  int crossing_radius = 2;
  double match_distance = 10.0;
  std::string data_root;
  std::string out_dir;

  // Derives network head/channels and loss kind from the approach, then
  // checks every section.
  void finalize() {
    apply_approach(train.approach, unet, loss);
    check_consistency(train, unet, loss);
    augment.validate();
    enhance.validate();
    if (crossing_radius < 0) throw ConfigError("crossing_radius must be >= 0");
    if (!(match_distance > 0.0)) throw ConfigError("match_distance must be > 0");
  }
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
}

inline long long parse_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

inline Range parse_range(const std::string& key, const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() != 2) throw ConfigError("config key '" + key + "': expected 'lo, hi'");
  return {parse_double(key, parts[0]), parse_double(key, parts[1])};
}

namespace detail {

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

// Shortest text that parses back to the same double.
inline std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string fmt(const Range& r) { return fmt(r.lo) + ", " + fmt(r.hi); }

struct Key {
  Setter set;
  Getter get;
};

inline const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> k = [] {
    std::map<std::string, Key> m;
    auto dbl = [&m](const std::string& name, auto member) {
      m[name] = {[name, member](RunConfig& c, const std::string& v) { member(c) = parse_double(name, v); },
                 [member](const RunConfig& c) { return fmt(member(const_cast<RunConfig&>(c))); }};
    };
    auto integer = [&m](const std::string& name, auto member) {
      m[name] = {[name, member](RunConfig& c, const std::string& v) {
                   member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(parse_int(name, v));
                 },
                 [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
    };
    auto boolean = [&m](const std::string& name, auto member) {
      m[name] = {[name, member](RunConfig& c, const std::string& v) { member(c) = parse_bool(name, v); },
                 [member](const RunConfig& c) { return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
    };
    auto range = [&m](const std::string& name, auto member) {
      m[name] = {[name, member](RunConfig& c, const std::string& v) { member(c) = parse_range(name, v); },
                 [member](const RunConfig& c) { return fmt(member(const_cast<RunConfig&>(c))); }};
    };
    auto text = [&m](const std::string& name, auto member) {
      m[name] = {[member](RunConfig& c, const std::string& v) { member(c) = v; },
                 [member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); }};
    };

    dbl("lr", [](RunConfig& c) -> double& { return c.train.lr; });
    dbl("beta1", [](RunConfig& c) -> double& { return c.train.beta1; });
    dbl("beta2", [](RunConfig& c) -> double& { return c.train.beta2; });
    integer("patience_epochs", [](RunConfig& c) -> int& { return c.train.patience_epochs; });
    integer("max_epochs", [](RunConfig& c) -> int& { return c.train.max_epochs; });
    integer("batch_size", [](RunConfig& c) -> int& { return c.train.batch_size; });
    integer("val_images", [](RunConfig& c) -> int& { return c.train.val_images; });
    integer("split_seed", [](RunConfig& c) -> std::uint64_t& { return c.train.split_seed; });
    boolean("use_enhanced", [](RunConfig& c) -> bool& { return c.train.use_enhanced; });
    boolean("deterministic", [](RunConfig& c) -> bool& { return c.train.deterministic; });
    m["seeds"] = {[](RunConfig& c, const std::string& v) {
                    c.train.seeds.clear();
                    for (const auto& s : split_list(v)) c.train.seeds.push_back(static_cast<std::uint64_t>(parse_int("seeds", s)));
                  },
                  [](const RunConfig& c) {
                    std::string s;
                    for (std::size_t i = 0; i < c.train.seeds.size(); ++i) s += (i ? ", " : "") + std::to_string(c.train.seeds[i]);
                    return s;
                  }};
    m["approach"] = {[](RunConfig& c, const std::string& v) { c.train.approach = avseg::parse_approach(v); },
                     [](const RunConfig& c) { return std::string(avseg::to_string(c.train.approach)); }};

    integer("base_channels", [](RunConfig& c) -> int& { return c.unet.base_channels; });
    integer("depth", [](RunConfig& c) -> int& { return c.unet.depth; });
    boolean("batch_norm", [](RunConfig& c) -> bool& { return c.unet.batch_norm; });

    dbl("prob_clip", [](RunConfig& c) -> double& { return c.loss.prob_clip; });
    m["loss_reduction"] = {[](RunConfig& c, const std::string& v) {
                             if (v == "sum")
                               c.loss.reduction = Reduction::sum;
                             else if (v == "mean-over-mask" || v == "mean_over_mask")
                               c.loss.reduction = Reduction::mean_over_mask;
                             else
                               throw ConfigError("loss_reduction must be sum or mean-over-mask");
                           },
                           [](const RunConfig& c) { return std::string(to_string(c.loss.reduction)); }};
    m["class_weights"] = {[](RunConfig& c, const std::string& v) {
                            const auto parts = split_list(v);
                            if (parts.size() != 4) throw ConfigError("class_weights needs 4 values");
                            for (int i = 0; i < 4; ++i) c.loss.class_weights[static_cast<std::size_t>(i)] = parse_double("class_weights", parts[static_cast<std::size_t>(i)]);
                          },
                          [](const RunConfig& c) {
                            std::string s;
                            for (int i = 0; i < 4; ++i) s += (i ? ", " : "") + fmt(c.loss.class_weights[static_cast<std::size_t>(i)]);
                            return s;
                          }};

    boolean("aug_enabled", [](RunConfig& c) -> bool& { return c.augment.enabled; });
    range("aug_rotation_deg", [](RunConfig& c) -> Range& { return c.augment.rotation_deg; });
    range("aug_scale", [](RunConfig& c) -> Range& { return c.augment.scale; });
    range("aug_shear_deg", [](RunConfig& c) -> Range& { return c.augment.shear_deg; });
    dbl("aug_hflip_prob", [](RunConfig& c) -> double& { return c.augment.hflip_prob; });
    dbl("aug_vflip_prob", [](RunConfig& c) -> double& { return c.augment.vflip_prob; });
    range("aug_intensity_shift", [](RunConfig& c) -> Range& { return c.augment.intensity_shift; });
    range("aug_channel_gain", [](RunConfig& c) -> Range& { return c.augment.channel_gain; });

    dbl("enhance_sigma0", [](RunConfig& c) -> double& { return c.enhance.sigma0; });
    dbl("enhance_gaussian_sigma", [](RunConfig& c) -> double& { return c.enhance.gaussian_sigma; });
    boolean("enhance_std_over_roi", [](RunConfig& c) -> bool& { return c.enhance.std_over_roi; });

    m["vessel_rule"] = {[](RunConfig& c, const std::string& v) {
                          if (v == "inverse-background")
                            c.eval.vessel_rule = metrics::VesselScoreRule::inverse_background;
                          else if (v == "artery-plus-vein")
                            c.eval.vessel_rule = metrics::VesselScoreRule::artery_plus_vein;
                          else
                            throw ConfigError("vessel_rule must be inverse-background or artery-plus-vein");
                        },
                        [](const RunConfig& c) {
                          return std::string(c.eval.vessel_rule == metrics::VesselScoreRule::inverse_background ? "inverse-background"
                                                                                                              : "artery-plus-vein");
                        }};
    dbl("operating_threshold", [](RunConfig& c) -> double& { return c.eval.operating_threshold; });
    integer("crossing_radius", [](RunConfig& c) -> int& { return c.crossing_radius; });
    dbl("match_distance", [](RunConfig& c) -> double& { return c.match_distance; });
    text("data_root", [](RunConfig& c) -> std::string& { return c.data_root; });
    text("out_dir", [](RunConfig& c) -> std::string& { return c.out_dir; });
    return m;
  }();
  return k;
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, v] : detail::keys()) out.push_back(k);
  return out;
}

inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  const auto& k = detail::keys();
  const auto it = k.find(key);
  if (it == k.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(c, value);
}

// "key=value" as given on the command line.
inline void apply_override(RunConfig& c, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not of the form key=value");
  apply_setting(c, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

inline void apply_config_text(RunConfig& c, const std::string& text, const std::string& origin = "<config>") {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(n) + ": expected 'key = value'");
    try {
      apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

inline void apply_config_file(RunConfig& c, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(c, ss.str(), path.string());
}

inline std::map<std::string, std::string> config_values(const RunConfig& c) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : detail::keys()) out[k] = v.get(c);
  return out;
}

// Round-trips through apply_config_text.
inline std::string to_config_text(const RunConfig& c) {
  std::string s;
  for (const auto& [k, v] : config_values(c)) s += k + " = " + v + "\n";
  return s;
}

}  // namespace avseg::io
