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

// Four-class artery/vein annotations and the two training-target encodings
// derived from them: the three-channel multi-segmentation target and the
// four-class label map.

#include <array>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <tuple>

#include "avseg/error.hpp"
#include "avseg/tensor.hpp"

namespace avseg {

enum class VesselClass : std::uint8_t { background = 0, artery = 1, vein = 2, crossing = 3, uncertain = 4 };

using Annotation = Grid<VesselClass>;
using Rgb8Image = Tensor3<std::uint8_t>;

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  friend auto operator<=>(const Rgb8&, const Rgb8&) = default;
};

// Palette of the RITE color coding.
constexpr Rgb8 class_color(VesselClass c) {
  switch (c) {
    case VesselClass::artery: return {255, 0, 0};
    case VesselClass::vein: return {0, 0, 255};
    case VesselClass::crossing: return {0, 255, 0};
    case VesselClass::uncertain: return {255, 255, 255};
    case VesselClass::background: break;
  }
  return {0, 0, 0};
}

inline const char* class_name(VesselClass c) {
  switch (c) {
    case VesselClass::background: return "background";
    case VesselClass::artery: return "artery";
    case VesselClass::vein: return "vein";
    case VesselClass::crossing: return "crossing";
    case VesselClass::uncertain: return "uncertain";
  }
  return "?";
}

inline bool is_vessel(VesselClass c) { return c != VesselClass::background; }

// Exact-match decoding: any off-palette pixel is a data error. The message
// lists up to eight offending colors with their pixel counts.
inline Annotation decode_av_annotation(const Rgb8Image& rgb) {
  if (rgb.channels() != 3) throw ShapeError("A/V ground truth must have 3 channels, got " + std::to_string(rgb.channels()));
  Annotation out(rgb.size());
  std::map<Rgb8, std::size_t> offending;
  const auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const Rgb8 px{r[i], g[i], b[i]};
    if (px == Rgb8{0, 0, 0}) {
      out[i] = VesselClass::background;
    } else if (px == Rgb8{255, 0, 0}) {
      out[i] = VesselClass::artery;
    } else if (px == Rgb8{0, 0, 255}) {
      out[i] = VesselClass::vein;
    } else if (px == Rgb8{0, 255, 0}) {
      out[i] = VesselClass::crossing;
    } else if (px == Rgb8{255, 255, 255}) {
      out[i] = VesselClass::uncertain;
    } else {
      ++offending[px];
    }
  }
  if (!offending.empty()) {
    std::ostringstream msg;
    msg << "A/V ground truth contains " << offending.size() << " off-palette color(s):";
    int listed = 0;
    for (const auto& [c, n] : offending) {
      if (listed++ == 8) {
        msg << " ...";
        break;
      }
      msg << " (" << int(c.r) << "," << int(c.g) << "," << int(c.b) << ")x" << n;
    }
    throw DataError(msg.str());
  }
  return out;
}

inline Rgb8Image encode_av_annotation(const Annotation& a) {
  Rgb8Image out(3, a.size());
  auto r = out.plane(0), g = out.plane(1), b = out.plane(2);
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const Rgb8 c = class_color(a[i]);
    r[i] = c.r;
    g[i] = c.g;
    b[i] = c.b;
  }
  return out;
}

struct AnnotatedFundusImage {
  Tensor3<float> image;  // 3 x H x W, RGB in [0, 1]
  Mask roi;
  Annotation annotation;
  Mask vessel_gt;
  std::string id;

  Size2 size() const { return roi.size(); }
};

// Checks the structural invariants; throws DataError naming the image.
inline void validate(const AnnotatedFundusImage& a, bool require_vessel_consistency = true) {
  const Size2 s = a.roi.size();
  auto fail = [&](const std::string& why) { throw DataError("image '" + a.id + "': " + why); };
  if (a.image.channels() != 3) fail("expected 3 image channels");
  if (a.image.size() != s) fail("image size " + to_string(a.image.size()) + " != roi size " + to_string(s));
  if (a.annotation.size() != s) fail("annotation size " + to_string(a.annotation.size()) + " != roi size " + to_string(s));
  if (a.vessel_gt.size() != s) fail("vessel mask size " + to_string(a.vessel_gt.size()) + " != roi size " + to_string(s));
  for (std::size_t i = 0; i < s.area(); ++i) {
    if (!a.roi[i] && is_vessel(a.annotation[i])) fail("annotated vessel pixel outside the ROI at index " + std::to_string(i));
    if (require_vessel_consistency && (a.vessel_gt[i] != 0) != is_vessel(a.annotation[i]))
      fail("vessel mask disagrees with the A/V annotation at index " + std::to_string(i));
  }
}

inline Mask vessel_mask_from(const Annotation& a) {
  Mask m(a.size());
  for (std::size_t i = 0; i < a.numel(); ++i) m[i] = is_vessel(a[i]) ? 1 : 0;
  return m;
}

struct ClassCounts {
  std::size_t background = 0;  // inside the ROI
  std::size_t artery = 0;
  std::size_t vein = 0;
  std::size_t crossing = 0;
  std::size_t uncertain = 0;

  std::size_t vessel() const { return artery + vein + crossing + uncertain; }
  std::size_t total() const { return background + vessel(); }

  ClassCounts& operator+=(const ClassCounts& o) {
    background += o.background;
    artery += o.artery;
    vein += o.vein;
    crossing += o.crossing;
    uncertain += o.uncertain;
    return *this;
  }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

inline ClassCounts count_classes(const Annotation& a, const Mask& roi) {
  ClassCounts n;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    switch (a[i]) {
      case VesselClass::background: n.background += roi[i] ? 1 : 0; break;
      case VesselClass::artery: ++n.artery; break;
      case VesselClass::vein: ++n.vein; break;
      case VesselClass::crossing: ++n.crossing; break;
      case VesselClass::uncertain: ++n.uncertain; break;
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// Multi-segmentation target: artery, vein and vessel channels, each with its
// own loss ROI. Crossings are positive in all three channels; uncertain
// vessels only in the vessel channel and are removed from the artery and vein
// loss ROIs.

enum MsChannel : int { kArtery = 0, kVein = 1, kVessel = 2 };
inline constexpr std::array<const char*, 3> kMsChannelNames = {"artery", "vein", "vessel"};

struct MultiSegTarget {
  Tensor3<std::uint8_t> channels;  // 3 x H x W
  Tensor3<std::uint8_t> loss_roi;  // 3 x H x W

  Size2 size() const { return channels.size(); }
};

inline MultiSegTarget build_ms_target(const Annotation& annotation, const Mask& roi) {
  if (annotation.size() != roi.size()) throw ShapeError("annotation and roi sizes differ");
  MultiSegTarget t{Tensor3<std::uint8_t>(3, roi.size()), Tensor3<std::uint8_t>(3, roi.size())};
  auto sa = t.channels.plane(kArtery), sv = t.channels.plane(kVein), sw = t.channels.plane(kVessel);
  auto oa = t.loss_roi.plane(kArtery), ov = t.loss_roi.plane(kVein), ow = t.loss_roi.plane(kVessel);
  for (std::size_t i = 0; i < roi.numel(); ++i) {
    if (!roi[i]) continue;
    const VesselClass c = annotation[i];
    sa[i] = (c == VesselClass::artery || c == VesselClass::crossing) ? 1 : 0;
    sv[i] = (c == VesselClass::vein || c == VesselClass::crossing) ? 1 : 0;
    sw[i] = is_vessel(c) ? 1 : 0;
    const std::uint8_t av_valid = c == VesselClass::uncertain ? 0 : 1;
    oa[i] = av_valid;
    ov[i] = av_valid;
    ow[i] = 1;
  }
  return t;
}

inline MultiSegTarget build_ms_target(const AnnotatedFundusImage& a) { return build_ms_target(a.annotation, a.roi); }

// ---------------------------------------------------------------------------
// Four-class target: background, artery, vein, uncertain-or-crossing.

enum Ce4Label : std::uint8_t { kBackgroundLabel = 0, kArteryLabel = 1, kVeinLabel = 2, kOtherLabel = 3 };
inline constexpr std::array<const char*, 4> kCe4ChannelNames = {"background", "artery", "vein", "other"};
inline constexpr std::array<double, 4> kDefaultCe4Weights = {1.0, 1.0, 1.0, 0.0};

struct Ce4Target {
  Grid<std::uint8_t> labels;
  std::array<double, 4> class_weights = kDefaultCe4Weights;
  Mask roi;

  Size2 size() const { return labels.size(); }
};

inline std::uint8_t ce4_label(VesselClass c) {
  switch (c) {
    case VesselClass::background: return kBackgroundLabel;
    case VesselClass::artery: return kArteryLabel;
    case VesselClass::vein: return kVeinLabel;
    case VesselClass::crossing:
    case VesselClass::uncertain: return kOtherLabel;
  }
  return kBackgroundLabel;
}

inline Ce4Target build_ce4_target(const Annotation& annotation, const Mask& roi,
                                  std::array<double, 4> weights = kDefaultCe4Weights) {
  if (annotation.size() != roi.size()) throw ShapeError("annotation and roi sizes differ");
  for (double w : weights)
    if (!(w >= 0.0)) throw ConfigError("CE4 class weights must be non-negative");
  Ce4Target t{Grid<std::uint8_t>(roi.size()), weights, roi};
  for (std::size_t i = 0; i < roi.numel(); ++i) t.labels[i] = ce4_label(annotation[i]);
  return t;
}

inline Ce4Target build_ce4_target(const AnnotatedFundusImage& a, std::array<double, 4> weights = kDefaultCe4Weights) {
  return build_ce4_target(a.annotation, a.roi, weights);
}

}  // namespace avseg
