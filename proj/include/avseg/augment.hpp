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

// Online augmentation of (image, target, roi) triples. One geometric
// transform is drawn per call and applied to every spatial array; the image
// is resampled bilinearly, binary and categorical data with nearest neighbour.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "avseg/annotation.hpp"
#include "avseg/error.hpp"
#include "avseg/rng.hpp"
#include "avseg/tensor.hpp"

namespace avseg {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double sample(Rng& rng) const { return lo + (hi - lo) * rng.uniform01(); }
};

struct AugmentConfig {
  Range rotation_deg{-30.0, 30.0};
  Range scale{0.95, 1.05};
  Range shear_deg{-5.0, 5.0};
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;
  Range intensity_shift{-0.1, 0.1};  // fraction of the image dynamic range
  Range channel_gain{0.9, 1.1};
  bool enabled = true;  // false: draws still happen, parameters are the identity

  static AugmentConfig identity() {
    AugmentConfig c;
    c.rotation_deg = {0, 0};
    c.scale = {1, 1};
    c.shear_deg = {0, 0};
    c.hflip_prob = 0;
    c.vflip_prob = 0;
    c.intensity_shift = {0, 0};
    c.channel_gain = {1, 1};
    return c;
  }

  void validate() const {
    auto check = [](const Range& r, const char* name) {
      if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi)
        throw ConfigError(std::string("augment range '") + name + "' must be finite and ordered");
    };
    check(rotation_deg, "rotation_deg");
    check(scale, "scale");
    check(shear_deg, "shear_deg");
    check(intensity_shift, "intensity_shift");
    check(channel_gain, "channel_gain");
    if (scale.lo <= 0.0) throw ConfigError("augment scale must be positive");
    if (std::abs(shear_deg.lo) >= 90.0 || std::abs(shear_deg.hi) >= 90.0) throw ConfigError("augment shear must be within (-90, 90) degrees");
    for (double p : {hflip_prob, vflip_prob})
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("flip probabilities must lie in [0, 1]");
  }
};

struct AugmentParams {
  double rotation_deg = 0.0;
  double scale = 1.0;
  double shear_deg = 0.0;
  bool hflip = false;
  bool vflip = false;
  double intensity_shift = 0.0;
  std::array<double, 3> gain{1.0, 1.0, 1.0};
};

// Draws every field in a fixed order, whatever the ranges, so the stream
// position after a call does not depend on the configuration.
inline AugmentParams sample_augment(const AugmentConfig& cfg, Rng& rng) {
  AugmentParams p;
  p.rotation_deg = cfg.rotation_deg.sample(rng);
  p.scale = cfg.scale.sample(rng);
  p.shear_deg = cfg.shear_deg.sample(rng);
  p.hflip = rng.bernoulli(cfg.hflip_prob);
  p.vflip = rng.bernoulli(cfg.vflip_prob);
  p.intensity_shift = cfg.intensity_shift.sample(rng);
  for (double& g : p.gain) g = cfg.channel_gain.sample(rng);
  if (!cfg.enabled) return AugmentParams{};
  return p;
}

// Destination-to-source mapping about the image centre:
//   src = centre + M (dst - centre)
struct InverseAffine {
  double m00 = 1, m01 = 0, m10 = 0, m11 = 1;
  double cx = 0, cy = 0;

  void apply(double x, double y, double& sx, double& sy) const {
    const double dx = x - cx, dy = y - cy;
    sx = cx + (m00 * dx + m01 * dy);
    sy = cy + (m10 * dx + m11 * dy);
  }
};

// Forward map is flip . rotate . shear . scale; its inverse is
// scale^-1 . shear^-1 . rotate^-1 . flip.
inline InverseAffine inverse_affine(const AugmentParams& p, Size2 size) {
  const double th = p.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  const double t = std::tan(p.shear_deg * std::numbers::pi / 180.0);
  const double k = 1.0 / p.scale;
  // (1/s) [[1, -t], [0, 1]] [[c, s], [-s, c]]
  double a00 = k * (c + t * s), a01 = k * (s - t * c);
  double a10 = k * (-s), a11 = k * c;
  const double fx = p.hflip ? -1.0 : 1.0, fy = p.vflip ? -1.0 : 1.0;
  InverseAffine m;
  m.m00 = a00 * fx;
  m.m01 = a01 * fy;
  m.m10 = a10 * fx;
  m.m11 = a11 * fy;
  m.cx = (size.cols - 1) / 2.0;
  m.cy = (size.rows - 1) / 2.0;
  return m;
}

// Source linear index per destination pixel (-1 when it falls outside).
inline std::vector<std::int64_t> nearest_source_indices(const InverseAffine& m, Size2 size) {
  std::vector<std::int64_t> idx(size.area());
  for (int r = 0; r < size.rows; ++r) {
    for (int c = 0; c < size.cols; ++c) {
      double sx, sy;
      m.apply(c, r, sx, sy);
      const auto ix = static_cast<std::int64_t>(std::floor(sx + 0.5));
      const auto iy = static_cast<std::int64_t>(std::floor(sy + 0.5));
      const bool inside = ix >= 0 && iy >= 0 && ix < size.cols && iy < size.rows;
      idx[static_cast<std::size_t>(r) * size.cols + c] = inside ? iy * size.cols + ix : -1;
    }
  }
  return idx;
}

template <typename T>
void remap_nearest(std::span<const T> src, std::span<T> dst, const std::vector<std::int64_t>& idx, T outside = T{}) {
  for (std::size_t i = 0; i < idx.size(); ++i) dst[i] = idx[i] < 0 ? outside : src[static_cast<std::size_t>(idx[i])];
}

template <typename T>
Grid<T> remap_nearest(const Grid<T>& src, const std::vector<std::int64_t>& idx, T outside = T{}) {
  Grid<T> out(src.size());
  remap_nearest<T>(src.span(), out.span(), idx, outside);
  return out;
}

template <typename T>
Tensor3<T> remap_nearest(const Tensor3<T>& src, const std::vector<std::int64_t>& idx) {
  Tensor3<T> out(src.channels(), src.size());
  for (int c = 0; c < src.channels(); ++c) remap_nearest<T>(src.plane(c), out.plane(c), idx);
  return out;
}

template <typename T>
Tensor3<T> warp_bilinear(const Tensor3<T>& src, const InverseAffine& m) {
  const int rows = src.rows(), cols = src.cols();
  Tensor3<T> out(src.channels(), src.size());
  auto at = [&](std::span<const T> p, int y, int x) -> double {
    if (x < 0 || y < 0 || x >= cols || y >= rows) return 0.0;
    return static_cast<double>(p[static_cast<std::size_t>(y) * cols + x]);
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double sx, sy;
      m.apply(c, r, sx, sy);
      const double x0 = std::floor(sx), y0 = std::floor(sy);
      const double fx = sx - x0, fy = sy - y0;
      const int ix = static_cast<int>(x0), iy = static_cast<int>(y0);
      for (int ch = 0; ch < src.channels(); ++ch) {
        const auto p = src.plane(ch);
        double v = (1.0 - fx) * (1.0 - fy) * at(p, iy, ix);
        if (fx != 0.0) v += fx * (1.0 - fy) * at(p, iy, ix + 1);
        if (fy != 0.0) v += (1.0 - fx) * fy * at(p, iy + 1, ix);
        if (fx != 0.0 && fy != 0.0) v += fx * fy * at(p, iy + 1, ix + 1);
        out(ch, r, c) = static_cast<T>(v);
      }
    }
  }
  return out;
}

// Per-channel gain and a global shift proportional to the dynamic range.
template <typename T>
void jitter_intensity(Tensor3<T>& image, const AugmentParams& p) {
  if (image.empty()) return;
  T lo = image[0], hi = image[0];
  for (T v : image.span()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double shift = p.intensity_shift * (static_cast<double>(hi) - static_cast<double>(lo));
  for (int c = 0; c < image.channels(); ++c) {
    const double g = p.gain[static_cast<std::size_t>(c % 3)];
    for (T& v : image.plane(c)) v = static_cast<T>(g * static_cast<double>(v) + shift);
  }
}

template <typename Target>
struct AugmentedSample {
  Tensor3<float> image;
  Target target;
  Mask roi;
};

namespace detail {

struct Geometry {
  AugmentParams params;
  InverseAffine map;
  std::vector<std::int64_t> nearest;
};

inline Geometry draw_geometry(const AugmentConfig& cfg, Size2 size, Rng& rng) {
  cfg.validate();
  Geometry g;
  g.params = sample_augment(cfg, rng);
  g.map = inverse_affine(g.params, size);
  g.nearest = nearest_source_indices(g.map, size);
  return g;
}

inline Tensor3<float> transform_image(const Tensor3<float>& image, const Geometry& g) {
  Tensor3<float> out = warp_bilinear(image, g.map);
  jitter_intensity(out, g.params);
  return out;
}

}  // namespace detail

inline AugmentedSample<MultiSegTarget> augment_sample(const Tensor3<float>& image, const MultiSegTarget& target,
                                                      const Mask& roi, const AugmentConfig& cfg, Rng& rng) {
  if (image.size() != roi.size() || target.size() != roi.size())
    throw ShapeError("augment_sample: image, target and roi must be spatially aligned");
  const auto g = detail::draw_geometry(cfg, roi.size(), rng);
  return {detail::transform_image(image, g),
          MultiSegTarget{remap_nearest(target.channels, g.nearest), remap_nearest(target.loss_roi, g.nearest)},
          remap_nearest(roi, g.nearest)};
}

inline AugmentedSample<Ce4Target> augment_sample(const Tensor3<float>& image, const Ce4Target& target,
                                                 const Mask& roi, const AugmentConfig& cfg, Rng& rng) {
  if (image.size() != roi.size() || target.size() != roi.size())
    throw ShapeError("augment_sample: image, target and roi must be spatially aligned");
  const auto g = detail::draw_geometry(cfg, roi.size(), rng);
  return {detail::transform_image(image, g),
          Ce4Target{remap_nearest(target.labels, g.nearest), target.class_weights, remap_nearest(target.roi, g.nearest)},
          remap_nearest(roi, g.nearest)};
}

// Same draw as augment_sample for an annotation map (used to check that
// building targets after warping equals warping built targets).
inline std::pair<Annotation, Mask> augment_annotation(const Annotation& a, const Mask& roi, const AugmentConfig& cfg,
                                                      Rng& rng) {
  const auto g = detail::draw_geometry(cfg, roi.size(), rng);
  return {remap_nearest(a, g.nearest, VesselClass::background), remap_nearest(roi, g.nearest)};
}

}  // namespace avseg
