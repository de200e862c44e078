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

// Segmentation and artery/vein classification evaluation.
//
// Three views of the same predictions:
//  * structure segmentation: artery, vein and vessel maps each scored as a
//    binary problem against everything else (ROC + PR). Arteries and veins
//    are scored inside the ROI with uncertain and crossing pixels removed;
//    vessels over the whole ROI.
//  * classification: artery-vs-vein confusion on annotated vessel pixels
//    (uncertain and crossings removed), decision by the larger of the two
//    scores, plus an ROC over the normalised artery score; and
//    vessel-vs-background at a fixed 0.5 operating point.
//  * joint curve: vessel sensitivity against A/V accuracy restricted to the
//    detected-and-annotated vessel pixels, for a sweep of thresholds.
//
// All accumulators pool pixels over images; single-image entry points run
// the pooled code on one image.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "avseg/annotation.hpp"
#include "avseg/error.hpp"
#include "avseg/metrics/curves.hpp"
#include "avseg/tensor.hpp"

namespace avseg {

enum class Approach { ms, traditional };

inline const char* to_string(Approach a) { return a == Approach::ms ? "ms" : "traditional"; }

inline Approach parse_approach(const std::string& s) {
  if (s == "ms") return Approach::ms;
  if (s == "traditional") return Approach::traditional;
  throw ConfigError("unknown approach '" + s + "' (expected ms or traditional)");
}

inline int output_channels(Approach a) { return a == Approach::ms ? 3 : 4; }

struct ProbabilityMaps {
  Tensor3<float> maps;  // 3 sigmoid channels (ms) or 4 softmax channels (traditional)
  Approach approach = Approach::ms;
  std::string id;

  void validate(double tol = 1e-4) const {
    if (maps.channels() != output_channels(approach))
      throw ShapeError("probability maps '" + id + "' have " + std::to_string(maps.channels()) + " channels, approach " +
                       to_string(approach) + " needs " + std::to_string(output_channels(approach)));
    for (float v : maps.span())
      if (!(v >= 0.0f && v <= 1.0f)) throw DataError("probability maps '" + id + "' contain values outside [0, 1]");
    if (approach == Approach::traditional) {
      const std::size_t n = maps.plane_size();
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int c = 0; c < 4; ++c) s += maps[c * n + i];
        if (std::abs(s - 1.0) > tol) throw DataError("traditional probability maps '" + id + "' do not sum to one per pixel");
      }
    }
  }
};

namespace metrics {

enum class VesselScoreRule { inverse_background, artery_plus_vein };

inline std::vector<double> default_joint_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 100; ++i) t.push_back(i / 100.0);
  return t;
}

struct EvalOptions {
  VesselScoreRule vessel_rule = VesselScoreRule::inverse_background;
  double operating_threshold = 0.5;
  std::vector<double> joint_thresholds = default_joint_thresholds();  // strictly increasing
};

struct EvaluationMaskSet {
  std::array<Mask, 3> seg_eval_mask;  // artery, vein, vessel
  Mask av_eval_mask;
};

inline EvaluationMaskSet build_eval_masks(const AnnotatedFundusImage& gt) {
  EvaluationMaskSet m;
  const Size2 s = gt.size();
  for (auto& mk : m.seg_eval_mask) mk = Mask(s);
  m.av_eval_mask = Mask(s);
  for (std::size_t i = 0; i < s.area(); ++i) {
    if (!gt.roi[i]) continue;
    const VesselClass c = gt.annotation[i];
    const bool ambiguous = c == VesselClass::uncertain || c == VesselClass::crossing;
    m.seg_eval_mask[kArtery][i] = ambiguous ? 0 : 1;
    m.seg_eval_mask[kVein][i] = ambiguous ? 0 : 1;
    m.seg_eval_mask[kVessel][i] = 1;
    m.av_eval_mask[i] = (gt.vessel_gt[i] && !ambiguous && (c == VesselClass::artery || c == VesselClass::vein)) ? 1 : 0;
  }
  return m;
}

// Per-pixel artery, vein and vessel scores for either approach.
struct StructureScores {
  Grid<float> artery, vein, vessel;
};

inline StructureScores structure_scores(const ProbabilityMaps& p, VesselScoreRule rule = VesselScoreRule::inverse_background) {
  if (p.maps.channels() != output_channels(p.approach))
    throw ShapeError("probability maps '" + p.id + "' have the wrong channel count for approach " + to_string(p.approach));
  StructureScores s;
  if (p.approach == Approach::ms) {
    s.artery = p.maps.plane_copy(kArtery);
    s.vein = p.maps.plane_copy(kVein);
    s.vessel = p.maps.plane_copy(kVessel);
    return s;
  }
  s.artery = p.maps.plane_copy(kArteryLabel);
  s.vein = p.maps.plane_copy(kVeinLabel);
  s.vessel = Grid<float>(p.maps.size());
  const auto bg = p.maps.plane(kBackgroundLabel);
  for (std::size_t i = 0; i < s.vessel.numel(); ++i)
    s.vessel[i] = rule == VesselScoreRule::inverse_background ? 1.0f - bg[i] : s.artery[i] + s.vein[i];
  return s;
}

// Ties go to the artery class.
inline bool decide_artery(float artery, float vein) { return artery >= vein; }

inline bool detected(float vessel_score, double threshold) { return static_cast<double>(vessel_score) >= threshold; }

// Artery probability renormalised over {artery, vein}; 0.5 when both are 0.
inline double artery_vs_vein_score(float artery, float vein) {
  const double s = static_cast<double>(artery) + static_cast<double>(vein);
  return s > 0.0 ? static_cast<double>(artery) / s : 0.5;
}

struct StructureCurves {
  std::array<std::optional<RocCurve>, 3> roc;
  std::array<std::optional<PrCurve>, 3> pr;
  std::vector<std::string> warnings;
};

struct AvClassification {
  BinaryCounts counts;  // artery = positive
  RocCurve roc;
};

struct VesselBackground {
  BinaryCounts counts;
  RocCurve roc;
};

struct JointPoint {
  double threshold = 0.0;
  double sensitivity = 0.0;
  double accuracy = 0.0;
  std::size_t av_pixels = 0;  // detected and annotated artery/vein pixels
};

struct JointCurve {
  std::vector<JointPoint> points;
  std::vector<double> omitted;  // thresholds with no detected annotated vessel pixel
};

class PooledEvaluation {
 public:
  explicit PooledEvaluation(EvalOptions opts = {}) : opts_(std::move(opts)) {
    const auto& t = opts_.joint_thresholds;
    for (std::size_t k = 1; k < t.size(); ++k)
      if (!(t[k] > t[k - 1])) throw ConfigError("joint-curve thresholds must be strictly increasing");
    const std::size_t K = t.size();
    joint_vessel_hits_.assign(K + 1, 0);
    joint_av_total_.assign(K + 1, 0);
    joint_av_correct_.assign(K + 1, 0);
  }

  const EvalOptions& options() const { return opts_; }
  std::size_t images() const { return images_; }

  void add(const ProbabilityMaps& p, const AnnotatedFundusImage& gt) {
    if (p.maps.size() != gt.size())
      throw ShapeError("prediction '" + p.id + "' is " + to_string(p.maps.size()) + " but ground truth '" + gt.id + "' is " +
                       to_string(gt.size()));
    const StructureScores sc = structure_scores(p, opts_.vessel_rule);
    const EvaluationMaskSet masks = build_eval_masks(gt);
    const auto& t = opts_.joint_thresholds;

    for (std::size_t i = 0; i < gt.roi.numel(); ++i) {
      if (!gt.roi[i]) continue;
      const VesselClass c = gt.annotation[i];
      if (masks.seg_eval_mask[kArtery][i]) seg_[kArtery].add(sc.artery[i], c == VesselClass::artery);
      if (masks.seg_eval_mask[kVein][i]) seg_[kVein].add(sc.vein[i], c == VesselClass::vein);
      const bool vessel = gt.vessel_gt[i] != 0;
      seg_[kVessel].add(sc.vessel[i], vessel);
      vessel_counts_.add(detected(sc.vessel[i], opts_.operating_threshold), vessel);

      // Number of joint thresholds t_k <= score; the pixel is detected at all of them.
      const auto u = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), static_cast<double>(sc.vessel[i])) - t.begin());
      if (vessel) {
        ++joint_vessel_total_;
        ++joint_vessel_hits_[u];
      }
      if (masks.av_eval_mask[i]) {
        const bool is_artery = c == VesselClass::artery;
        const bool says_artery = decide_artery(sc.artery[i], sc.vein[i]);
        av_counts_.add(says_artery, is_artery);
        av_scores_.add(artery_vs_vein_score(sc.artery[i], sc.vein[i]), is_artery);
        ++joint_av_total_[u];
        if (says_artery == is_artery) ++joint_av_correct_[u];
      }
    }
    ++images_;
  }

  StructureCurves structure_curves() const {
    StructureCurves out;
    for (int s = 0; s < 3; ++s) {
      const auto [pos, neg] = seg_[s].class_counts();
      if (pos == 0 || neg == 0) {
        out.warnings.push_back(std::string("skipping ") + kMsChannelNames[s] + ": evaluation mask holds " + std::to_string(pos) +
                               " positive and " + std::to_string(neg) + " negative pixels");
        continue;
      }
      out.roc[s] = roc_curve(seg_[s]);
      out.pr[s] = pr_curve(seg_[s]);
    }
    return out;
  }

  AvClassification av_classification() const {
    if (av_scores_.empty()) throw UndefinedMetricError("A/V classification: the evaluation mask is empty");
    return {av_counts_, roc_curve(av_scores_)};
  }

  const BinaryCounts& av_counts() const { return av_counts_; }
  const BinaryCounts& vessel_counts() const { return vessel_counts_; }

  VesselBackground vessel_background() const { return {vessel_counts_, roc_curve(seg_[kVessel])}; }

  JointCurve joint_curve() const {
    const auto& t = opts_.joint_thresholds;
    const std::size_t K = t.size();
    JointCurve out;
    // Suffix sums: pixels with u > k are detected at threshold k.
    std::size_t hits = 0, av_total = 0, av_correct = 0;
    std::vector<JointPoint> rev;
    for (std::size_t k = K; k-- > 0;) {
      hits += joint_vessel_hits_[k + 1];
      av_total += joint_av_total_[k + 1];
      av_correct += joint_av_correct_[k + 1];
      if (av_total == 0) {
        out.omitted.push_back(t[k]);
        continue;
      }
      rev.push_back({t[k], BinaryCounts::ratio(hits, joint_vessel_total_), BinaryCounts::ratio(av_correct, av_total), av_total});
    }
    out.points.assign(rev.rbegin(), rev.rend());
    std::reverse(out.omitted.begin(), out.omitted.end());
    return out;
  }

 private:
  EvalOptions opts_;
  std::size_t images_ = 0;
  std::array<ScoredSamples, 3> seg_;
  ScoredSamples av_scores_;
  BinaryCounts av_counts_;
  BinaryCounts vessel_counts_;
  std::size_t joint_vessel_total_ = 0;
  std::vector<std::size_t> joint_vessel_hits_, joint_av_total_, joint_av_correct_;
};

inline StructureCurves structure_segmentation_eval(const ProbabilityMaps& p, const AnnotatedFundusImage& gt,
                                                   const EvalOptions& o = {}) {
  PooledEvaluation e(o);
  e.add(p, gt);
  return e.structure_curves();
}

inline AvClassification av_classification_eval(const ProbabilityMaps& p, const AnnotatedFundusImage& gt,
                                               const EvalOptions& o = {}) {
  PooledEvaluation e(o);
  e.add(p, gt);
  return e.av_classification();
}

inline VesselBackground vessel_background_eval(const ProbabilityMaps& p, const AnnotatedFundusImage& gt,
                                               const EvalOptions& o = {}) {
  PooledEvaluation e(o);
  e.add(p, gt);
  return e.vessel_background();
}

inline JointCurve joint_sens_acc_curve(const ProbabilityMaps& p, const AnnotatedFundusImage& gt, const EvalOptions& o = {}) {
  PooledEvaluation e(o);
  e.add(p, gt);
  return e.joint_curve();
}

}  // namespace metrics
}  // namespace avseg
