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

// Whole-test-set evaluation: pooled pixel curves, operating-point metrics,
// the joint curve and (for ms maps) crossing localization.

#include <optional>
#include <string>
#include <vector>

#include "avseg/annotation.hpp"
#include "avseg/metrics/crossings.hpp"
#include "avseg/metrics/evaluation.hpp"
#include "avseg/nn/unet.hpp"
#include "avseg/train.hpp"

namespace avseg {

inline avseg::ProbabilityMaps predict_maps(const nn::UNet<float>& model, Approach approach, bool enhanced,
                                             const AnnotatedFundusImage& a, const EnhancementConfig& ecfg = {}) {
  if (model.config().out_channels != avseg::output_channels(approach))
    throw ConfigError("model has " + std::to_string(model.config().out_channels) + " outputs but approach " +
                      avseg::to_string(approach) + " needs " + std::to_string(avseg::output_channels(approach)));
  return {model.predict(network_input(a, enhanced, ecfg)), approach, a.id};
}

// Ground truth rendered as probability maps: the output a perfect model
// would give.
inline avseg::ProbabilityMaps gt_as_prediction(const AnnotatedFundusImage& a, Approach approach) {
  avseg::ProbabilityMaps p{Tensor3<float>(avseg::output_channels(approach), a.size()), approach, a.id};
  for (std::size_t i = 0; i < a.annotation.numel(); ++i) {
    const VesselClass c = a.annotation[i];
    if (approach == Approach::ms) {
      const bool art = c == VesselClass::artery || c == VesselClass::crossing;
      const bool vein = c == VesselClass::vein || c == VesselClass::crossing;
      p.maps[i] = art ? 1.0f : 0.0f;
      p.maps[a.annotation.numel() + i] = vein ? 1.0f : 0.0f;
      p.maps[2 * a.annotation.numel() + i] = a.vessel_gt[i] ? 1.0f : 0.0f;
    } else {
      const int label = a.vessel_gt[i] ? ce4_label(c == VesselClass::background ? VesselClass::uncertain : c) : 0;
      p.maps[static_cast<std::size_t>(label) * a.annotation.numel() + i] = 1.0f;
    }
  }
  return p;
}

struct EvalSettings {
  metrics::EvalOptions eval;
  int crossing_radius = 2;
  double match_distance = 10.0;
  std::vector<double> crossing_thresholds = metrics::default_crossing_thresholds();
};

struct EvaluationResult {
  Approach approach = Approach::ms;
  std::vector<std::string> ids;
  metrics::StructureCurves structures;
  std::optional<metrics::AvClassification> av;
  metrics::VesselBackground vessel;
  metrics::JointCurve joint;
  std::optional<std::vector<metrics::CrossingPrPoint>> crossings;
  std::vector<std::string> warnings;
  EvalSettings settings;
};

class SetEvaluator {
 public:
  SetEvaluator(Approach approach, EvalSettings s)
      : approach_(approach), settings_(std::move(s)), pooled_(settings_.eval),
        crossings_(settings_.crossing_thresholds, settings_.crossing_radius, settings_.match_distance) {}

  void add(const avseg::ProbabilityMaps& p, const AnnotatedFundusImage& gt) {
    if (p.approach != approach_)
      throw ConfigError("prediction '" + p.id + "' is " + avseg::to_string(p.approach) + " but the evaluation expects " +
                        avseg::to_string(approach_));
    p.validate();
    pooled_.add(p, gt);
    if (approach_ == Approach::ms) crossings_.add(p, gt.annotation);
    ids_.push_back(p.id);
  }

  EvaluationResult result() const {
    if (ids_.empty()) throw DataError("nothing to evaluate");
    EvaluationResult r;
    r.approach = approach_;
    r.ids = ids_;
    r.settings = settings_;
    r.structures = pooled_.structure_curves();
    r.warnings = r.structures.warnings;
    try {
      r.av = pooled_.av_classification();
    } catch (const UndefinedMetricError& e) {
      r.warnings.push_back(e.what());
    }
    r.vessel = pooled_.vessel_background();
    r.joint = pooled_.joint_curve();
    if (!r.joint.omitted.empty())
      r.warnings.push_back(std::to_string(r.joint.omitted.size()) + " joint-curve thresholds detect no annotated A/V pixel and were omitted");
    if (approach_ == Approach::ms) r.crossings = crossings_.curve();
    return r;
  }

 private:
  Approach approach_;
  EvalSettings settings_;
  metrics::PooledEvaluation pooled_;
  metrics::CrossingPrAccumulator crossings_;
  std::vector<std::string> ids_;
};

}  // namespace avseg
