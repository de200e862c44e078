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

// Dataset layout:
//
//   <root>/<split>/images/<id>.{png,tif,tiff,jpg}   colour fundus image
//   <root>/<split>/av/<id>.png                      colour-coded A/V annotation
//   <root>/<split>/mask/<id>.png                    field-of-view mask
//   <root>/<split>/vessel/<id>.png                  binary vessel mask (optional)
//
// Without vessel/, the vessel mask is derived from the annotation.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "avseg/annotation.hpp"
#include "avseg/error.hpp"
#include "avseg/io/image_io.hpp"

namespace avseg::io {

struct DatasetOptions {
  // Off when vessel/ holds a different expert's segmentation (e.g. the first
  // DRIVE observer), which need not agree with the A/V annotation.
  bool require_vessel_consistency = true;
};

inline bool is_image_extension(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e == ".png" || e == ".tif" || e == ".tiff" || e == ".jpg" || e == ".jpeg" || e == ".bmp" || e == ".ppm";
}

// stem -> path for the image files of a directory.
inline std::map<std::string, fs::path> index_directory(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || !is_image_extension(e.path())) continue;
    const std::string stem = e.path().stem().string();
    if (!out.emplace(stem, e.path()).second)
      throw DataError("two files share the id '" + stem + "' in " + dir.string());
  }
  return out;
}

inline fs::path split_dir(const fs::path& root, const std::string& split) { return root / split; }

inline std::vector<std::string> list_ids(const fs::path& root, const std::string& split) {
  const auto images = index_directory(split_dir(root, split) / "images");
  if (images.empty()) throw DataError("no images found in " + (split_dir(root, split) / "images").string());
  std::vector<std::string> ids;
  for (const auto& [id, p] : images) ids.push_back(id);
  return ids;
}

inline AnnotatedFundusImage load_item(const fs::path& root, const std::string& split, const std::string& id,
                                      const DatasetOptions& opts = {}) {
  const fs::path dir = split_dir(root, split);
  auto find = [&](const char* sub, bool required) -> fs::path {
    const auto idx = index_directory(dir / sub);
    const auto it = idx.find(id);
    if (it == idx.end()) {
      if (required) throw DataError("image '" + id + "': missing " + std::string(sub) + "/ file under " + dir.string());
      return {};
    }
    return it->second;
  };
  AnnotatedFundusImage a;
  a.id = id;
  a.image = read_image01(find("images", true));
  try {
    a.annotation = decode_av_annotation(read_rgb8(find("av", true)));
  } catch (const ShapeError& e) {
    throw ShapeError("image '" + id + "': " + e.what());
  } catch (const DataError& e) {
    if (std::string(e.what()).starts_with("image '")) throw;
    throw DataError("image '" + id + "': " + e.what());
  }
  a.roi = read_mask(find("mask", true));
  const fs::path vessel = fs::is_directory(dir / "vessel") ? find("vessel", true) : fs::path{};
  a.vessel_gt = vessel.empty() ? vessel_mask_from(a.annotation) : read_mask(vessel);
  validate(a, opts.require_vessel_consistency);
  return a;
}

// Every image of a split, ordered by id.
inline std::vector<AnnotatedFundusImage> load_dataset(const fs::path& root, const std::string& split, const DatasetOptions& opts = {}) {
  if (split != "train" && split != "test") throw ConfigError("split must be 'train' or 'test', got '" + split + "'");
  std::vector<AnnotatedFundusImage> out;
  for (const auto& id : list_ids(root, split)) out.push_back(load_item(root, split, id, opts));
  return out;
}

inline void write_item(const fs::path& root, const std::string& split, const AnnotatedFundusImage& a, bool with_vessel = true) {
  const fs::path dir = split_dir(root, split);
  write_rgb(dir / "images" / (a.id + ".png"), a.image);
  write_rgb8(dir / "av" / (a.id + ".png"), encode_av_annotation(a.annotation));
  write_mask(dir / "mask" / (a.id + ".png"), a.roi);
  if (with_vessel) write_mask(dir / "vessel" / (a.id + ".png"), a.vessel_gt);
}

}  // namespace avseg::io
