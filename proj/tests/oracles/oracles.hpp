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

// Brute-force reference computations for tests. Plain std containers only;
// nothing here includes or calls library code. Inputs above the size caps
// are refused.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline constexpr std::size_t kMaxPixels = 10000;
inline constexpr std::size_t kMaxSamples = 10000;
inline constexpr std::size_t kMaxPoints = 6;

inline void cap(std::size_t n, std::size_t limit, const char* what) {
  if (n > limit) throw std::length_error(std::string(what) + ": instance of size " + std::to_string(n) + " exceeds the oracle cap");
}

inline double clamp_prob(double p, double eps) { return std::min(std::max(p, eps), 1.0 - eps); }

// pred, target, omega: channel-major [c][r][col] with 3 channels of h*w.
//   L = - sum_c sum_{x in Omega_c} [ s log p + (1 - s) log(1 - p) ]
inline double naive_bce3(const std::vector<double>& pred, const std::vector<int>& target, const std::vector<int>& omega, int h,
                         int w, double eps = 1e-7) {
  cap(static_cast<std::size_t>(h * w), kMaxPixels, "naive_bce3");
  double loss = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < w; ++col) {
        const int i = (c * h + r) * w + col;
        if (omega[i] == 0) continue;
        const double p = clamp_prob(pred[i], eps);
        loss -= target[i] == 1 ? std::log(p) : std::log(1.0 - p);
      }
  return loss;
}

// pred: 4 channels of h*w; labels in {0..3}; roi 0/1.
//   L = - sum_{x in roi} w_{y(x)} log p_{y(x)}(x)
inline double naive_ce4(const std::vector<double>& pred, const std::vector<int>& labels, const std::vector<double>& weights,
                        const std::vector<int>& roi, int h, int w, double eps = 1e-7) {
  cap(static_cast<std::size_t>(h * w), kMaxPixels, "naive_ce4");
  double loss = 0.0;
  for (int r = 0; r < h; ++r)
    for (int col = 0; col < w; ++col) {
      const int x = r * w + col;
      if (roi[x] == 0) continue;
      const int y = labels[x];
      double term = 0.0;
      for (int c = 0; c < 4; ++c)
        if (c == y && weights[c] != 0.0) term = weights[c] * std::log(clamp_prob(pred[c * h * w + x], eps));
      loss -= term;
    }
  return loss;
}

// Probability that a random positive outscores a random negative, ties 1/2.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  cap(scores.size(), kMaxSamples, "pairwise_auc");
  double wins = 0.0;
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw std::domain_error("pairwise_auc: need both classes");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

struct PrPointOracle {
  double threshold, recall, precision;
};

// Every distinct score as a threshold (score >= t is positive), counted
// from scratch, in decreasing threshold order.
inline std::vector<PrPointOracle> exhaustive_pr_points(const std::vector<double>& scores, const std::vector<int>& labels) {
  cap(scores.size(), kMaxSamples, "exhaustive_pr_points");
  std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  std::size_t pos = 0;
  for (int l : labels) pos += l != 0;
  std::vector<PrPointOracle> out;
  for (double t : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= t) (labels[i] ? tp : fp) += 1;
    out.push_back({t, static_cast<double>(tp) / static_cast<double>(pos), static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return out;
}

// Step-wise area: sum over thresholds of (recall gain) x precision.
inline double exhaustive_pr_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double auc = 0.0, prev = 0.0;
  for (const auto& p : exhaustive_pr_points(scores, labels)) {
    auc += (p.recall - prev) * p.precision;
    prev = p.recall;
  }
  return auc;
}

using Pt = std::pair<double, double>;

// Largest number of (gt, pred) pairs within distance d such that no point
// is used twice, over all assignments.
inline std::size_t exhaustive_match(const std::vector<Pt>& pred, const std::vector<Pt>& gt, double d) {
  cap(pred.size(), kMaxPoints, "exhaustive_match");
  cap(gt.size(), kMaxPoints, "exhaustive_match");
  std::vector<bool> used(pred.size(), false);
  auto close = [&](std::size_t g, std::size_t p) {
    const double dx = gt[g].first - pred[p].first, dy = gt[g].second - pred[p].second;
    return std::sqrt(dx * dx + dy * dy) <= d;
  };
  auto best = [&](auto&& self, std::size_t g) -> std::size_t {
    if (g == gt.size()) return 0;
    std::size_t b = self(self, g + 1);  // g unmatched
    for (std::size_t p = 0; p < pred.size(); ++p)
      if (!used[p] && close(g, p)) {
        used[p] = true;
        b = std::max(b, 1 + self(self, g + 1));
        used[p] = false;
      }
    return b;
  };
  return best(best, 0);
}

// Whether no further pair could be added to a matching (every unmatched gt
// has no unmatched pred within d).
inline bool is_maximal_matching(const std::vector<Pt>& pred, const std::vector<Pt>& gt, double d,
                                const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<bool> gu(gt.size(), false), pu(pred.size(), false);
  for (const auto& [g, p] : pairs) {
    if (gu[g] || pu[p]) return false;
    gu[g] = pu[p] = true;
  }
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (gu[g] || pu[p]) continue;
      const double dx = gt[g].first - pred[p].first, dy = gt[g].second - pred[p].second;
      if (std::sqrt(dx * dx + dy * dy) <= d) return false;
    }
  return true;
}

}  // namespace oracle
