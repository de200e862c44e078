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

// Masked segmentation losses.
//
//   BCE3 = - sum_{c in artery, vein, vessel} sum_{p in Omega_c}
//            [ s_c log f_c + (1 - s_c) log(1 - f_c) ]
//   CE4  = - sum_{p in Omega} sum_{c=0..3} w_c s_c log f_c
//
// Probabilities are clipped to [prob_clip, 1 - prob_clip] before the log.
// The *_and_grad variants take pre-activation logits and return the exact
// derivative of the clipped loss (zero wherever clipping is active).

#include <array>
#include <cmath>
#include <string>

#include "avseg/activations.hpp"
#include "avseg/annotation.hpp"
#include "avseg/error.hpp"
#include "avseg/tensor.hpp"

namespace avseg {

enum class LossKind { bce3, ce4 };
enum class Reduction { sum, mean_over_mask };

inline const char* to_string(LossKind k) { return k == LossKind::bce3 ? "bce3" : "ce4"; }
inline const char* to_string(Reduction r) { return r == Reduction::sum ? "sum" : "mean-over-mask"; }

struct LossConfig {
  LossKind kind = LossKind::bce3;
  // Used when CE4 targets are built for training; ce4_loss itself reads the
  // weights stored in the target.
  std::array<double, 4> class_weights = kDefaultCe4Weights;
  double prob_clip = 1e-7;
  Reduction reduction = Reduction::sum;

  void validate() const {
    if (!(prob_clip > 0.0 && prob_clip < 0.5)) throw ConfigError("prob_clip must lie in (0, 0.5)");
    for (double w : class_weights)
      if (!(w >= 0.0)) throw ConfigError("class weights must be non-negative");
  }
};

template <typename T>
struct LossAndGrad {
  double loss = 0.0;
  Tensor3<T> grad;  // d loss / d logits
};

namespace detail {

template <typename T>
void check_finite(const Tensor3<T>& t, const char* what) {
  for (T v : t.span())
    if (!std::isfinite(v)) throw NumericalError(std::string(what) + " contains NaN or infinite values");
}

inline double clip(double p, double eps) { return p < eps ? eps : (p > 1.0 - eps ? 1.0 - eps : p); }

}  // namespace detail

// ---------------------------------------------------------------------------
// BCE3

inline std::size_t bce3_mask_count(const MultiSegTarget& t) {
  std::size_t n = 0;
  for (auto v : t.loss_roi.span()) n += v ? 1 : 0;
  return n;
}

template <typename T>
double bce3_loss(const Tensor3<T>& pred, const MultiSegTarget& target, const LossConfig& cfg = {}) {
  cfg.validate();
  if (pred.channels() != 3 || pred.size() != target.size())
    throw ShapeError("bce3_loss: prediction " + std::to_string(pred.channels()) + "x" + to_string(pred.size()) +
                     " does not match target 3x" + to_string(target.size()));
  detail::check_finite(pred, "prediction");
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto p = pred.plane(c);
    const auto s = target.channels.plane(c);
    const auto m = target.loss_roi.plane(c);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!m[i]) continue;
      const double q = detail::clip(static_cast<double>(p[i]), cfg.prob_clip);
      acc += s[i] ? std::log(q) : std::log(1.0 - q);
    }
    total -= acc;
  }
  if (cfg.reduction == Reduction::mean_over_mask) {
    const std::size_t n = bce3_mask_count(target);
    return n ? total / static_cast<double>(n) : 0.0;
  }
  return total;
}

template <typename T>
LossAndGrad<T> bce3_loss_and_grad(const Tensor3<T>& logits, const MultiSegTarget& target, const LossConfig& cfg = {}) {
  cfg.validate();
  if (logits.channels() != 3 || logits.size() != target.size())
    throw ShapeError("bce3_loss: logits do not match the 3-channel target");
  detail::check_finite(logits, "logits");
  LossAndGrad<T> out{0.0, Tensor3<T>(3, logits.size())};
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto z = logits.plane(c);
    const auto s = target.channels.plane(c);
    const auto m = target.loss_roi.plane(c);
    auto g = out.grad.plane(c);
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!m[i]) continue;
      const double raw = sigmoid(static_cast<double>(z[i]));
      const double q = detail::clip(raw, cfg.prob_clip);
      total -= s[i] ? std::log(q) : std::log(1.0 - q);
      g[i] = q == raw ? static_cast<T>(raw - (s[i] ? 1.0 : 0.0)) : T{0};
    }
  }
  double scale = 1.0;
  if (cfg.reduction == Reduction::mean_over_mask) {
    const std::size_t n = bce3_mask_count(target);
    scale = n ? 1.0 / static_cast<double>(n) : 0.0;
  }
  out.loss = total * scale;
  if (scale != 1.0)
    for (T& v : out.grad.span()) v = static_cast<T>(v * scale);
  return out;
}

// ---------------------------------------------------------------------------
// CE4

template <typename T>
void check_ce4_inputs(const Tensor3<T>& t, const Ce4Target& target, const char* what) {
  if (t.channels() != 4 || t.size() != target.size())
    throw ShapeError(std::string("ce4_loss: ") + what + " " + std::to_string(t.channels()) + "x" + to_string(t.size()) +
                     " does not match target 4x" + to_string(target.size()));
  if (target.roi.size() != target.size()) throw ShapeError("ce4_loss: target roi size mismatch");
  for (auto l : target.labels.span())
    if (l > 3) throw DataError("ce4_loss: label " + std::to_string(int(l)) + " out of range");
  for (double w : target.class_weights)
    if (!(w >= 0.0)) throw ConfigError("class weights must be non-negative");
}

template <typename T>
double ce4_loss(const Tensor3<T>& pred, const Ce4Target& target, const LossConfig& cfg = {}) {
  cfg.validate();
  check_ce4_inputs(pred, target, "prediction");
  detail::check_finite(pred, "prediction");
  const std::size_t n = target.labels.numel();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!target.roi[i]) continue;
    ++count;
    const int y = target.labels[i];
    const double w = target.class_weights[static_cast<std::size_t>(y)];
    if (w == 0.0) continue;
    total -= w * std::log(detail::clip(static_cast<double>(pred[static_cast<std::size_t>(y) * n + i]), cfg.prob_clip));
  }
  if (cfg.reduction == Reduction::mean_over_mask) return count ? total / static_cast<double>(count) : 0.0;
  return total;
}

template <typename T>
LossAndGrad<T> ce4_loss_and_grad(const Tensor3<T>& logits, const Ce4Target& target, const LossConfig& cfg = {}) {
  cfg.validate();
  check_ce4_inputs(logits, target, "logits");
  detail::check_finite(logits, "logits");
  const std::size_t n = target.labels.numel();
  LossAndGrad<T> out{0.0, Tensor3<T>(4, logits.size())};
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!target.roi[i]) continue;
    ++count;
    const int y = target.labels[i];
    const double w = target.class_weights[static_cast<std::size_t>(y)];
    if (w == 0.0) continue;
    std::array<double, 4> p;
    for (int c = 0; c < 4; ++c) p[c] = static_cast<double>(logits[static_cast<std::size_t>(c) * n + i]);
    softmax_inplace(p);
    const double q = detail::clip(p[y], cfg.prob_clip);
    total -= w * std::log(q);
    if (q != p[y]) continue;
    for (int c = 0; c < 4; ++c) out.grad[static_cast<std::size_t>(c) * n + i] = static_cast<T>(w * (p[c] - (c == y ? 1.0 : 0.0)));
  }
  double scale = 1.0;
  if (cfg.reduction == Reduction::mean_over_mask) scale = count ? 1.0 / static_cast<double>(count) : 0.0;
  out.loss = total * scale;
  if (scale != 1.0)
    for (T& v : out.grad.span()) v = static_cast<T>(v * scale);
  return out;
}

}  // namespace avseg
