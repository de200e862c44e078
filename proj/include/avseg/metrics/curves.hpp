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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "avseg/error.hpp"

namespace avseg::metrics {

struct BinaryCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  static double ratio(std::size_t a, std::size_t b) {
    return b ? static_cast<double>(a) / static_cast<double>(b) : std::numeric_limits<double>::quiet_NaN();
  }
  double sensitivity() const { return ratio(tp, tp + fn); }
  double specificity() const { return ratio(tn, tn + fp); }
  double accuracy() const { return ratio(tp + tn, total()); }
  double precision() const { return ratio(tp, tp + fp); }

  void add(bool predicted, bool actual) {
    if (predicted) {
      actual ? ++tp : ++fp;
    } else {
      actual ? ++fn : ++tn;
    }
  }

  BinaryCounts& operator+=(const BinaryCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const BinaryCounts&, const BinaryCounts&) = default;
};

// A threshold t classifies a sample as positive when score >= t.
struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct PrPoint {
  double threshold;
  double recall;
  double precision;
};

struct RocCurve {
  std::vector<RocPoint> points;  // starts at (0, 0) with threshold +inf
  double auc = 0.0;
  std::size_t positives = 0, negatives = 0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // one per distinct score, decreasing threshold
  double auc = 0.0;
  std::size_t positives = 0, negatives = 0;
};

// Scored samples, pooled from any number of images. Sorting is deferred to
// the curve builders.
class ScoredSamples {
 public:
  void reserve(std::size_t n) { data_.reserve(n); }
  void add(double score, bool positive) { data_.emplace_back(score, positive ? 1 : 0); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  void append(const ScoredSamples& other) { data_.insert(data_.end(), other.data_.begin(), other.data_.end()); }

  // Groups of equal score in decreasing score order: (score, positives, negatives).
  struct Group {
    double score;
    std::size_t pos;
    std::size_t neg;
  };

  std::vector<Group> grouped() const {
    std::vector<std::pair<double, std::uint8_t>> s = data_;
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Group> out;
    for (std::size_t i = 0; i < s.size();) {
      Group g{s[i].first, 0, 0};
      std::size_t j = i;
      for (; j < s.size() && s[j].first == g.score; ++j) (s[j].second ? g.pos : g.neg) += 1;
      out.push_back(g);
      i = j;
    }
    return out;
  }

  std::pair<std::size_t, std::size_t> class_counts() const {
    std::size_t p = 0;
    for (const auto& [s, l] : data_) p += l;
    return {p, data_.size() - p};
  }

 private:
  std::vector<std::pair<double, std::uint8_t>> data_;
};

inline void require_both_classes(std::size_t pos, std::size_t neg, const char* what) {
  if (pos == 0 || neg == 0)
    throw UndefinedMetricError(std::string(what) + " is undefined: need at least one positive and one negative sample (got " +
                               std::to_string(pos) + " positive, " + std::to_string(neg) + " negative)");
}

// ROC over all distinct thresholds; ties form a single (diagonal) step.
// AUC by the trapezoidal rule.
inline RocCurve roc_curve(const ScoredSamples& samples) {
  const auto [P, N] = samples.class_counts();
  require_both_classes(P, N, "AUC-ROC");
  RocCurve c;
  c.positives = P;
  c.negatives = N;
  c.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double area = 0.0;  // twice the area, counted in (positive, negative) pairs
  for (const auto& g : samples.grouped()) {
    area += static_cast<double>(g.neg) * (2.0 * static_cast<double>(tp) + static_cast<double>(g.pos));
    tp += g.pos;
    fp += g.neg;
    c.points.push_back({g.score, static_cast<double>(fp) / static_cast<double>(N), static_cast<double>(tp) / static_cast<double>(P)});
  }
  c.auc = area / (2.0 * static_cast<double>(P) * static_cast<double>(N));
  return c;
}

// Precision-recall over all distinct thresholds. AUC is the step-wise sum
// sum_k (R_k - R_{k-1}) P_k with R_0 = 0, i.e. no interpolation.
inline PrCurve pr_curve(const ScoredSamples& samples) {
  const auto [P, N] = samples.class_counts();
  require_both_classes(P, N, "AUC-PR");
  PrCurve c;
  c.positives = P;
  c.negatives = N;
  std::size_t tp = 0, fp = 0;
  double prev_recall = 0.0;
  for (const auto& g : samples.grouped()) {
    tp += g.pos;
    fp += g.neg;
    const double recall = static_cast<double>(tp) / static_cast<double>(P);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    c.auc += (recall - prev_recall) * precision;
    prev_recall = recall;
    c.points.push_back({g.score, recall, precision});
  }
  return c;
}

template <typename S>
ScoredSamples make_samples(std::span<const S> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size())
    throw ShapeError("scores (" + std::to_string(scores.size()) + ") and labels (" + std::to_string(labels.size()) + ") differ in length");
  ScoredSamples s;
  s.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) s.add(static_cast<double>(scores[i]), labels[i] != 0);
  return s;
}

template <typename S>
RocCurve roc_curve(std::span<const S> scores, std::span<const std::uint8_t> labels) {
  return roc_curve(make_samples(scores, labels));
}

template <typename S>
PrCurve pr_curve(std::span<const S> scores, std::span<const std::uint8_t> labels) {
  return pr_curve(make_samples(scores, labels));
}

// Evenly thinned copy of a curve for dumps and plots; keeps both endpoints.
template <typename Point>
std::vector<Point> thin(const std::vector<Point>& pts, std::size_t max_points) {
  if (pts.size() <= max_points || max_points < 2) return pts;
  std::vector<Point> out;
  out.reserve(max_points);
  const double step = static_cast<double>(pts.size() - 1) / static_cast<double>(max_points - 1);
  for (std::size_t i = 0; i < max_points; ++i) out.push_back(pts[static_cast<std::size_t>(std::llround(i * step))]);
  return out;
}

}  // namespace avseg::metrics
