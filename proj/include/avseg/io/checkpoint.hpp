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

// A checkpoint is a pair of files:
//   <stem>.bin   "AVSEGCK1", uint64 count, count float32 values (little endian)
//   <stem>.json  manifest: network/preprocessing settings and training state

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "avseg/error.hpp"
#include "avseg/metrics/evaluation.hpp"
#include "avseg/nn/unet.hpp"
#include "avseg/preprocess.hpp"

namespace avseg::io {

static_assert(std::endian::native == std::endian::little, "checkpoint files are little endian");

inline constexpr char kCheckpointMagic[8] = {'A', 'V', 'S', 'E', 'G', 'C', 'K', '1'};

struct CheckpointInfo {
  nn::UNetConfig unet;
  avseg::Approach approach = avseg::Approach::ms;
  bool use_enhanced = true;
  EnhancementConfig enhance;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  int epochs_run = 0;
  double best_val_loss = 0.0;
  bool diagnostic = false;  // written on divergence, not a usable model
  std::vector<std::string> train_ids, val_ids;
};

inline void save_params(const std::filesystem::path& path, const std::vector<float>& values) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  const std::uint64_t n = values.size();
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!out) throw RuntimeFailure("error while writing " + path.string());
}

inline std::vector<float> load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  char magic[8];
  std::uint64_t n = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw DataError("not a checkpoint file: " + path.string());
  std::vector<float> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!in || in.peek() != std::char_traits<char>::eof()) throw DataError("truncated or oversized checkpoint " + path.string());
  return v;
}

inline nlohmann::json to_json(const CheckpointInfo& c, std::size_t parameter_count) {
  return {{"format", "avseg-checkpoint-1"},
          {"approach", avseg::to_string(c.approach)},
          {"use_enhanced", c.use_enhanced},
          {"enhance", {{"sigma0", c.enhance.sigma0}, {"gaussian_sigma", c.enhance.gaussian_sigma}, {"truncate", c.enhance.truncate},
                       {"std_over_roi", c.enhance.std_over_roi}}},
          {"unet", {{"base_channels", c.unet.base_channels}, {"in_channels", c.unet.in_channels},
                    {"out_channels", c.unet.out_channels}, {"depth", c.unet.depth}, {"head", to_string(c.unet.head)}}},
          {"seed", c.seed},
          {"best_epoch", c.best_epoch},
          {"epochs_run", c.epochs_run},
          {"best_val_loss", c.best_val_loss},
          {"diagnostic", c.diagnostic},
          {"train_ids", c.train_ids},
          {"val_ids", c.val_ids},
          {"parameter_count", parameter_count}};
}

inline CheckpointInfo checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "avseg-checkpoint-1") throw DataError("unknown checkpoint format");
    CheckpointInfo c;
    c.approach = avseg::parse_approach(j.at("approach"));
    c.use_enhanced = j.at("use_enhanced");
    const auto& e = j.at("enhance");
    c.enhance.sigma0 = e.at("sigma0");
    c.enhance.gaussian_sigma = e.at("gaussian_sigma");
    c.enhance.truncate = e.at("truncate");
    c.enhance.std_over_roi = e.at("std_over_roi");
    const auto& u = j.at("unet");
    c.unet.base_channels = u.at("base_channels");
    c.unet.in_channels = u.at("in_channels");
    c.unet.out_channels = u.at("out_channels");
    c.unet.depth = u.at("depth");
    c.unet.head = u.at("head") == "sigmoid" ? Head::sigmoid : Head::softmax;
    c.seed = j.at("seed");
    c.best_epoch = j.at("best_epoch");
    c.epochs_run = j.at("epochs_run");
    c.best_val_loss = j.at("best_val_loss").is_null() ? std::nan("") : j.at("best_val_loss").get<double>();
    c.diagnostic = j.at("diagnostic");
    c.train_ids = j.value("train_ids", std::vector<std::string>{});
    c.val_ids = j.value("val_ids", std::vector<std::string>{});
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint manifest: ") + e.what());
  }
}

inline void save_checkpoint(const std::filesystem::path& stem, const CheckpointInfo& info, const std::vector<float>& params) {
  save_params(stem.string() + ".bin", params);
  std::ofstream out(stem.string() + ".json");
  if (!out) throw RuntimeFailure("cannot write " + stem.string() + ".json");
  out << to_json(info, params.size()).dump(2) << "\n";
}

struct LoadedCheckpoint {
  CheckpointInfo info;
  nn::UNet<float> model;
};

// Accepts the stem or either of the two file names.
inline LoadedCheckpoint load_checkpoint(std::filesystem::path path) {
  if (path.extension() == ".json" || path.extension() == ".bin") path.replace_extension();
  std::ifstream in(path.string() + ".json");
  if (!in) throw DataError("cannot read checkpoint manifest " + path.string() + ".json");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint manifest " + path.string() + ".json: " + e.what());
  }
  CheckpointInfo info = checkpoint_from_json(j);
  if (info.diagnostic) throw DataError("checkpoint " + path.string() + " is a divergence diagnostic, not a trained model");
  info.unet.validate();
  nn::UNet<float> model(info.unet);
  model.load_flat_values(load_params(path.string() + ".bin"));
  return {std::move(info), std::move(model)};
}

}  // namespace avseg::io
