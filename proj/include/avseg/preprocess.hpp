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

// Channel-wise contrast enhancement: subtract a Gaussian low-pass version of
// each channel and rescale the residual to a fixed global standard deviation.

#include <cmath>
#include <vector>

#include "avseg/error.hpp"
#include "avseg/tensor.hpp"

namespace avseg {

struct EnhancementConfig {
  double sigma0 = 1.0;
  double gaussian_sigma = 10.0;
  double epsilon = 1e-8;
  double truncate = 4.0;  // kernel half-width in units of gaussian_sigma
  bool std_over_roi = false;

  void validate() const {
    if (!(sigma0 > 0.0)) throw ConfigError("sigma0 must be > 0");
    if (!(gaussian_sigma > 0.0)) throw ConfigError("gaussian_sigma must be > 0");
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
    if (!(truncate > 0.0)) throw ConfigError("truncate must be > 0");
  }
};

// Half-sample symmetric reflection (d c b a | a b c d | d c b a).
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

inline std::vector<double> gaussian_kernel(double sigma, double truncate = 4.0) {
  const int radius = static_cast<int>(std::ceil(truncate * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable Gaussian blur with reflect boundary handling.
template <typename T>
Grid<T> gaussian_blur(const Grid<T>& src, double sigma, double truncate = 4.0) {
  const auto k = gaussian_kernel(sigma, truncate);
  const int radius = static_cast<int>(k.size() / 2);
  const int rows = src.rows(), cols = src.cols();
  Grid<T> tmp(src.size()), out(src.size());

  std::vector<int> col_idx(cols + 2 * radius);
  for (int c = -radius; c < cols + radius; ++c) col_idx[c + radius] = reflect_index(c, cols);
  for (int r = 0; r < rows; ++r) {
    const T* row = src.data() + static_cast<std::size_t>(r) * cols;
    T* dst = tmp.data() + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int j = 0; j < static_cast<int>(k.size()); ++j) acc += k[j] * row[col_idx[c + j]];
      dst[c] = static_cast<T>(acc);
    }
  }

  std::vector<double> acc(cols);
  for (int r = 0; r < rows; ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int j = 0; j < static_cast<int>(k.size()); ++j) {
      const T* row = tmp.data() + static_cast<std::size_t>(reflect_index(r + j - radius, rows)) * cols;
      const double w = k[j];
      for (int c = 0; c < cols; ++c) acc[c] += w * row[c];
    }
    T* dst = out.data() + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) dst[c] = static_cast<T>(acc[c]);
  }
  return out;
}

template <typename T>
double population_std(std::span<const T> v, const Mask* mask = nullptr) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    sum += v[i];
    ++n;
  }
  if (n == 0) return 0.0;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const double d = v[i] - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(n));
}

// High-pass residual of every channel scaled to a global standard deviation of
// sigma0. No ROI masking is applied, so each output plane has std == sigma0
// over the region the std was measured on.
template <typename T>
Tensor3<T> normalize_contrast(const Tensor3<T>& image, const Mask& roi, const EnhancementConfig& cfg) {
  cfg.validate();
  if (image.size() != roi.size()) throw ShapeError("image " + to_string(image.size()) + " and roi " + to_string(roi.size()) + " differ in size");
  Tensor3<T> out(image.channels(), image.size());
  for (int c = 0; c < image.channels(); ++c) {
    const Grid<T> channel = image.plane_copy(c);
    const Grid<T> low = gaussian_blur(channel, cfg.gaussian_sigma, cfg.truncate);
    auto residual = out.plane(c);
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = channel[i] - low[i];
    const double s = population_std<T>(residual, cfg.std_over_roi ? &roi : nullptr);
    if (!(s > cfg.epsilon))
      throw DegenerateInputError("channel " + std::to_string(c) + ": high-pass residual std " + std::to_string(s) +
                                 " is below epsilon");
    const double gain = cfg.sigma0 / s;
    for (auto& v : residual) v = static_cast<T>(v * gain);
  }
  return out;
}

// normalize_contrast followed by zeroing every pixel outside the ROI.
template <typename T>
Tensor3<T> enhance(const Tensor3<T>& image, const Mask& roi, const EnhancementConfig& cfg = {}) {
  Tensor3<T> out = normalize_contrast(image, roi, cfg);
  for (int c = 0; c < out.channels(); ++c) {
    auto p = out.plane(c);
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!roi[i]) p[i] = T{0};
  }
  return out;
}

// Per-channel min/max for 16-bit export of an enhanced image.
struct ChannelRange {
  double min = 0.0;
  double max = 0.0;
};

template <typename T>
std::vector<ChannelRange> channel_ranges(const Tensor3<T>& t) {
  std::vector<ChannelRange> out;
  for (int c = 0; c < t.channels(); ++c) {
    auto p = t.plane(c);
    ChannelRange r{static_cast<double>(p[0]), static_cast<double>(p[0])};
    for (T v : p) {
      r.min = std::min(r.min, static_cast<double>(v));
      r.max = std::max(r.max, static_cast<double>(v));
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace avseg
