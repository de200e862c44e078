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
#include <array>
#include <cmath>
#include <vector>

#include "avseg/tensor.hpp"

namespace avseg {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

template <std::size_t N>
void softmax_inplace(std::array<double, N>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

enum class Head { sigmoid, softmax };

inline const char* to_string(Head h) { return h == Head::sigmoid ? "sigmoid" : "softmax"; }

template <typename T>
Tensor3<T> apply_sigmoid(const Tensor3<T>& logits) {
  Tensor3<T> out(logits.channels(), logits.size());
  for (std::size_t i = 0; i < logits.numel(); ++i) out[i] = static_cast<T>(sigmoid(static_cast<double>(logits[i])));
  return out;
}

// Pixel-wise softmax across channels.
template <typename T>
Tensor3<T> apply_softmax(const Tensor3<T>& logits) {
  const int C = logits.channels();
  const std::size_t n = logits.plane_size();
  Tensor3<T> out(C, logits.size());
  std::vector<double> v(static_cast<std::size_t>(C));
  for (std::size_t i = 0; i < n; ++i) {
    double m = -INFINITY;
    for (int c = 0; c < C; ++c) m = std::max(m, v[c] = static_cast<double>(logits[c * n + i]));
    double sum = 0.0;
    for (int c = 0; c < C; ++c) sum += (v[c] = std::exp(v[c] - m));
    for (int c = 0; c < C; ++c) out[c * n + i] = static_cast<T>(v[c] / sum);
  }
  return out;
}

template <typename T>
Tensor3<T> apply_head(const Tensor3<T>& logits, Head h) {
  return h == Head::sigmoid ? apply_sigmoid(logits) : apply_softmax(logits);
}

}  // namespace avseg
