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

// Vessel-crossing localization. Crossings belong to both the artery and the
// vein maps, so their evidence is the element-wise product of the two.
// Predicted crossings: product >= threshold, dilated by a disk so that very
// close blobs merge, 8-connected components, one centroid per component.
// Reference crossings: components of the annotated crossing class.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "avseg/annotation.hpp"
#include "avseg/error.hpp"
#include "avseg/metrics/evaluation.hpp"
#include "avseg/tensor.hpp"

namespace avseg::metrics {

struct Point2 {
  double x = 0.0;  // column
  double y = 0.0;  // row
  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Components {
  Grid<int> labels;  // 0 = background, 1..count
  int count = 0;
};

// 8-connected labelling in raster order of each component's first pixel.
inline Components connected_components(const Mask& m) {
  Components out{Grid<int>(m.size()), 0};
  const int rows = m.rows(), cols = m.cols();
  std::vector<int> stack;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!m(r, c) || out.labels(r, c)) continue;
      const int label = ++out.count;
      out.labels(r, c) = label;
      stack.assign(1, r * cols + c);
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int pr = p / cols, pc = p % cols;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = pr + dr, nc = pc + dc;
            if (nr < 0 || nc < 0 || nr >= rows || nc >= cols) continue;
            if (!m(nr, nc) || out.labels(nr, nc)) continue;
            out.labels(nr, nc) = label;
            stack.push_back(nr * cols + nc);
          }
      }
    }
  }
  return out;
}

// Binary dilation by the disk {(dx, dy) : dx^2 + dy^2 <= radius^2}.
inline Mask dilate_disk(const Mask& m, int radius) {
  if (radius < 0) throw ConfigError("dilation radius must be >= 0");
  if (radius == 0) return m;
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) offsets.emplace_back(dy, dx);
  Mask out(m.size());
  const int rows = m.rows(), cols = m.cols();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!m(r, c)) continue;
      for (const auto& [dy, dx] : offsets) {
        const int nr = r + dy, nc = c + dx;
        if (nr >= 0 && nc >= 0 && nr < rows && nc < cols) out(nr, nc) = 1;
      }
    }
  return out;
}

// Centroid of the `seed` pixels falling in each component of `grouping`.
// Components without seed pixels produce no point.
inline std::vector<Point2> grouped_centroids(const Mask& seed, const Mask& grouping) {
  const Components cc = connected_components(grouping);
  std::vector<double> sx(cc.count + 1, 0.0), sy(cc.count + 1, 0.0);
  std::vector<std::size_t> n(cc.count + 1, 0);
  for (int r = 0; r < seed.rows(); ++r)
    for (int c = 0; c < seed.cols(); ++c) {
      if (!seed(r, c)) continue;
      const int l = cc.labels(r, c);
      sx[l] += c;
      sy[l] += r;
      ++n[l];
    }
  std::vector<Point2> out;
  for (int l = 1; l <= cc.count; ++l)
    if (n[l]) out.push_back({sx[l] / static_cast<double>(n[l]), sy[l] / static_cast<double>(n[l])});
  return out;
}

inline Mask crossing_evidence(const ProbabilityMaps& p, double threshold) {
  if (p.approach != Approach::ms)
    throw UnsupportedApproachError("crossing localization needs multi-segmentation (ms) maps; '" + p.id + "' is " + to_string(p.approach));
  if (p.maps.channels() != 3) throw ShapeError("ms probability maps must have 3 channels");
  Mask out(p.maps.size());
  const auto a = p.maps.plane(kArtery), v = p.maps.plane(kVein);
  for (std::size_t i = 0; i < out.numel(); ++i)
    out[i] = static_cast<double>(a[i]) * static_cast<double>(v[i]) >= threshold ? 1 : 0;
  return out;
}

// Components are found on the dilated mask; each centroid is the mean of the
// thresholded (undilated) pixels of its component, so dilation only decides
// which detections merge.
inline std::vector<Point2> localize_crossings(const ProbabilityMaps& p, double threshold, int dilation_radius = 2) {
  const Mask binary = crossing_evidence(p, threshold);
  return grouped_centroids(binary, dilate_disk(binary, dilation_radius));
}

inline Mask crossing_mask(const Annotation& a) {
  Mask m(a.size());
  for (std::size_t i = 0; i < a.numel(); ++i) m[i] = a[i] == VesselClass::crossing ? 1 : 0;
  return m;
}

inline std::vector<Point2> gt_crossing_centroids(const Annotation& a) {
  const Mask m = crossing_mask(a);
  return grouped_centroids(m, m);
}

struct CrossingMatch {
  std::size_t tp = 0, fp = 0, fn = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (gt index, pred index)

  CrossingMatch& operator+=(const CrossingMatch& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

// Each reference crossing claims at most one prediction: the closest still
// unclaimed one within distance d. References are processed in ascending
// order of their nearest-prediction distance (ties by index).
inline CrossingMatch match_crossings(const std::vector<Point2>& pred, const std::vector<Point2>& gt, double d = 10.0) {
  if (!(d > 0.0)) throw ConfigError("matching distance must be > 0");
  std::vector<double> nearest(gt.size(), std::numeric_limits<double>::infinity());
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (const auto& p : pred) nearest[g] = std::min(nearest[g], distance(gt[g], p));
  std::vector<std::size_t> order(gt.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nearest[a] < nearest[b]; });

  CrossingMatch m;
  std::vector<char> taken(pred.size(), 0);
  for (std::size_t g : order) {
    std::size_t best = pred.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pred.size(); ++k) {
      if (taken[k]) continue;
      const double dist = distance(gt[g], pred[k]);
      if (dist <= d && dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    if (best < pred.size()) {
      taken[best] = 1;
      m.pairs.emplace_back(g, best);
    }
  }
  m.tp = m.pairs.size();
  m.fp = pred.size() - m.tp;
  m.fn = gt.size() - m.tp;
  return m;
}

struct CrossingPrPoint {
  double threshold = 0.0;
  double precision = 0.0;  // NaN when nothing was predicted
  double recall = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
};

inline std::vector<double> default_crossing_thresholds() {
  std::vector<double> t;
  for (int i = 1; i < 20; ++i) t.push_back(i / 20.0);
  return t;
}

// Precision/recall of crossing localization for a sweep of binarisation
// thresholds, counts pooled over every image of a set.
class CrossingPrAccumulator {
 public:
  CrossingPrAccumulator(std::vector<double> thresholds, int dilation_radius = 2, double match_distance = 10.0)
      : thresholds_(std::move(thresholds)), radius_(dilation_radius), distance_(match_distance), totals_(thresholds_.size()) {}

  void add(const ProbabilityMaps& p, const Annotation& gt) {
    const auto ref = gt_crossing_centroids(gt);
    for (std::size_t k = 0; k < thresholds_.size(); ++k)
      totals_[k] += match_crossings(localize_crossings(p, thresholds_[k], radius_), ref, distance_);
  }

  std::vector<CrossingPrPoint> curve() const {
    std::vector<CrossingPrPoint> out;
    for (std::size_t k = 0; k < thresholds_.size(); ++k) {
      const auto& t = totals_[k];
      out.push_back({thresholds_[k], BinaryCounts::ratio(t.tp, t.tp + t.fp), BinaryCounts::ratio(t.tp, t.tp + t.fn), t.tp, t.fp, t.fn});
    }
    return out;
  }

 private:
  std::vector<double> thresholds_;
  int radius_;
  double distance_;
  std::vector<CrossingMatch> totals_;
};

}  // namespace avseg::metrics
