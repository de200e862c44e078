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

// Image files <-> library types, backed by OpenCV. Channel order in memory
// is always R, G, B.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "avseg/annotation.hpp"
#include "avseg/error.hpp"
#include "avseg/tensor.hpp"

namespace avseg::io {

namespace fs = std::filesystem;

inline cv::Mat read_raw(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("file not found: " + path.string());
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw DataError("cannot decode image: " + path.string());
  if (m.depth() != CV_8U && m.depth() != CV_16U) throw DataError("unsupported bit depth in " + path.string() + " (need 8 or 16 bit)");
  return m;
}

// Grey, BGR or BGRA data as a 3-channel RGB tensor (grey is replicated,
// alpha dropped) scaled to [0, 1].
inline Tensor3<float> read_image01(const fs::path& path) {
  const cv::Mat m = read_raw(path);
  const double scale = m.depth() == CV_8U ? 1.0 / 255.0 : 1.0 / 65535.0;
  Tensor3<float> out(3, m.rows, m.cols);
  const int ch = m.channels();
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c)
      for (int k = 0; k < 3; ++k) {
        const int src = ch == 1 ? 0 : 2 - k;  // BGR(A) -> RGB
        const double v = m.depth() == CV_8U ? m.ptr<std::uint8_t>(r)[c * ch + src] : m.ptr<std::uint16_t>(r)[c * ch + src];
        out(k, r, c) = static_cast<float>(v * scale);
      }
  return out;
}

inline Rgb8Image read_rgb8(const fs::path& path) {
  const cv::Mat m = read_raw(path);
  if (m.depth() != CV_8U) throw DataError("A/V annotation must be 8-bit: " + path.string());
  if (m.channels() < 3) throw DataError("A/V annotation must be a colour image: " + path.string());
  Rgb8Image out(3, m.rows, m.cols);
  const int ch = m.channels();
  for (int r = 0; r < m.rows; ++r) {
    const std::uint8_t* p = m.ptr<std::uint8_t>(r);
    for (int c = 0; c < m.cols; ++c)
      for (int k = 0; k < 3; ++k) out(k, r, c) = p[c * ch + 2 - k];
  }
  return out;
}

// Any non-zero sample in any channel marks the pixel.
inline Mask read_mask(const fs::path& path) {
  const cv::Mat m = read_raw(path);
  Mask out(m.rows, m.cols);
  const int n = m.cols * m.channels();
  for (int r = 0; r < m.rows; ++r)
    for (int i = 0; i < n; ++i) {
      const bool on = m.depth() == CV_8U ? m.ptr<std::uint8_t>(r)[i] != 0 : m.ptr<std::uint16_t>(r)[i] != 0;
      if (on) out(r, i / m.channels()) = 1;
    }
  return out;
}

inline void write_or_throw(const fs::path& path, const cv::Mat& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), m);
  } catch (const cv::Exception& e) {
    throw RuntimeFailure("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw RuntimeFailure("cannot write " + path.string());
}

inline std::uint16_t to_u16(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

inline double from_u16(std::uint16_t v) { return static_cast<double>(v) / 65535.0; }

// Values in [0, 1] (clamped) as a 16-bit grey PNG.
template <typename T>
void write_png16(const fs::path& path, const Grid<T>& g) {
  cv::Mat m(g.rows(), g.cols(), CV_16UC1);
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) m.at<std::uint16_t>(r, c) = to_u16(static_cast<double>(g(r, c)));
  write_or_throw(path, m);
}

inline Grid<float> read_gray01(const fs::path& path) {
  const cv::Mat m = read_raw(path);
  if (m.channels() != 1) throw DataError("expected a single-channel image: " + path.string());
  Grid<float> out(m.rows, m.cols);
  const double scale = m.depth() == CV_8U ? 1.0 / 255.0 : 1.0 / 65535.0;
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c)
      out(r, c) = static_cast<float>(scale * (m.depth() == CV_8U ? m.at<std::uint8_t>(r, c) : m.at<std::uint16_t>(r, c)));
  return out;
}

// RGB tensor with values in [0, 1] (clamped), written at the given depth.
template <typename T>
void write_rgb(const fs::path& path, const Tensor3<T>& t, bool sixteen_bit = false) {
  if (t.channels() != 3) throw ShapeError("write_rgb needs 3 channels");
  cv::Mat m(t.rows(), t.cols(), sixteen_bit ? CV_16UC3 : CV_8UC3);
  for (int r = 0; r < t.rows(); ++r)
    for (int c = 0; c < t.cols(); ++c)
      for (int k = 0; k < 3; ++k) {
        const double v = std::clamp(static_cast<double>(t(k, r, c)), 0.0, 1.0);
        if (sixteen_bit)
          m.ptr<std::uint16_t>(r)[c * 3 + 2 - k] = to_u16(v);
        else
          m.ptr<std::uint8_t>(r)[c * 3 + 2 - k] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
  write_or_throw(path, m);
}

inline void write_rgb8(const fs::path& path, const Rgb8Image& t) {
  cv::Mat m(t.rows(), t.cols(), CV_8UC3);
  for (int r = 0; r < t.rows(); ++r)
    for (int c = 0; c < t.cols(); ++c)
      for (int k = 0; k < 3; ++k) m.ptr<std::uint8_t>(r)[c * 3 + 2 - k] = t(k, r, c);
  write_or_throw(path, m);
}

inline void write_mask(const fs::path& path, const Mask& g) {
  cv::Mat m(g.rows(), g.cols(), CV_8UC1);
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) m.at<std::uint8_t>(r, c) = g(r, c) ? 255 : 0;
  write_or_throw(path, m);
}

}  // namespace avseg::io
