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

// Procedural fundus-like images with exact A/V annotations, for tests,
// smoke runs and trying the CLI without the real datasets. Arteries are
// thinner and brighter red than veins; overlaps become crossings and a
// share of the vessels is annotated as uncertain.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "avseg/annotation.hpp"
#include "avseg/rng.hpp"
#include "avseg/tensor.hpp"

namespace avseg {

struct SyntheticConfig {
  Size2 size{256, 256};
  int arteries = 4;
  int veins = 4;
  double uncertain_fraction = 0.15;  // probability that a whole vessel is annotated uncertain
  double noise_std = 0.01;
  double roi_radius = 0.47;  // fraction of min(rows, cols)
};

namespace detail {

struct Stroke {
  std::vector<std::array<double, 2>> pts;  // (x, y)
  std::vector<double> width;
};

inline Stroke random_vessel(const SyntheticConfig& cfg, Rng& rng, double cx, double cy, double base_width) {
  Stroke s;
  const double ang0 = rng.uniform(0.0, 6.283185307179586);
  double x = cx + 6.0 * std::cos(ang0), y = cy + 6.0 * std::sin(ang0), dir = ang0;
  const double reach = 0.5 * std::min(cfg.size.rows, cfg.size.cols);
  const int steps = static_cast<int>(reach / 3.0);
  for (int i = 0; i < steps; ++i) {
    s.pts.push_back({x, y});
    s.width.push_back(std::max(1.0, base_width * (1.0 - 0.5 * i / steps)));
    dir += 0.18 * rng.normal();
    x += 3.0 * std::cos(dir);
    y += 3.0 * std::sin(dir);
    if (x < -5 || y < -5 || x > cfg.size.cols + 5 || y > cfg.size.rows + 5) break;
  }
  return s;
}

inline void rasterize(const Stroke& s, Mask& m) {
  const int rows = m.rows(), cols = m.cols();
  for (std::size_t i = 0; i + 1 < s.pts.size(); ++i) {
    const auto [x0, y0] = s.pts[i];
    const auto [x1, y1] = s.pts[i + 1];
    const double hw = 0.5 * s.width[i];
    const int c_lo = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - hw)));
    const int c_hi = std::min(cols - 1, static_cast<int>(std::ceil(std::max(x0, x1) + hw)));
    const int r_lo = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - hw)));
    const int r_hi = std::min(rows - 1, static_cast<int>(std::ceil(std::max(y0, y1) + hw)));
    const double dx = x1 - x0, dy = y1 - y0, len2 = dx * dx + dy * dy;
    for (int r = r_lo; r <= r_hi; ++r)
      for (int c = c_lo; c <= c_hi; ++c) {
        double t = len2 > 0 ? ((c - x0) * dx + (r - y0) * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double ex = x0 + t * dx - c, ey = y0 + t * dy - r;
        if (ex * ex + ey * ey <= hw * hw) m(r, c) = 1;
      }
  }
}

}  // namespace detail

inline AnnotatedFundusImage synthetic_fundus(const SyntheticConfig& cfg, std::uint64_t seed, std::string id = "synthetic") {
  Rng rng(seed);
  const int rows = cfg.size.rows, cols = cfg.size.cols;
  AnnotatedFundusImage a;
  a.id = std::move(id);
  a.roi = Mask(cfg.size);
  const double cy = 0.5 * (rows - 1), cx = 0.5 * (cols - 1), rad = cfg.roi_radius * std::min(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) a.roi(r, c) = std::hypot(r - cy, c - cx) <= rad ? 1 : 0;

  // Vessels radiate from an off-centre disc.
  const double dx = cx + rng.uniform(-0.15, 0.15) * cols, dy = cy + rng.uniform(-0.15, 0.15) * rows;
  // art/vein hold annotated vessels; art_px/vein_px every painted pixel,
  // uncertain strokes included.
  Mask art(cfg.size), vein(cfg.size), unc(cfg.size), art_px(cfg.size), vein_px(cfg.size);
  for (int k = 0; k < cfg.arteries + cfg.veins; ++k) {
    const bool is_art = k < cfg.arteries;
    const auto stroke = detail::random_vessel(cfg, rng, dx, dy, is_art ? rng.uniform(2.5, 4.0) : rng.uniform(3.5, 5.5));
    const bool uncertain = rng.bernoulli(cfg.uncertain_fraction);
    detail::rasterize(stroke, uncertain ? unc : (is_art ? art : vein));
    detail::rasterize(stroke, is_art ? art_px : vein_px);
  }

  a.annotation = Annotation(cfg.size, VesselClass::background);
  for (std::size_t i = 0; i < a.roi.numel(); ++i) {
    if (!a.roi[i]) continue;
    if (art[i] && vein[i])
      a.annotation[i] = VesselClass::crossing;
    else if (art[i])
      a.annotation[i] = VesselClass::artery;
    else if (vein[i])
      a.annotation[i] = VesselClass::vein;
    else if (unc[i])
      a.annotation[i] = VesselClass::uncertain;
  }
  a.vessel_gt = vessel_mask_from(a.annotation);

  // Reddish background with radial falloff; vessel colour depends on the
  // true class (crossings take the darker vein colour).
  a.image = Tensor3<float>(3, cfg.size);
  const std::array<double, 3> bg{0.78, 0.38, 0.16}, art_gain{0.88, 0.62, 0.75}, vein_gain{0.62, 0.40, 0.62};
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      const double shade = 1.0 - 0.35 * std::pow(std::hypot(r - cy, c - cx) / rad, 2.0);
      for (int k = 0; k < 3; ++k) {
        double v = bg[k] * shade;
        if (vein_px[i])
          v *= vein_gain[k];
        else if (art_px[i])
          v *= art_gain[k];
        v += cfg.noise_std * rng.normal();
        if (!a.roi[i]) v = 0.02;
        a.image(k, r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  return a;
}

}  // namespace avseg
