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

// Minimal line plots on the unit square, rendered with OpenCV.

#include <algorithm>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "avseg/io/image_io.hpp"

namespace avseg::io {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y) in [0, 1]
};

inline void write_plot(const std::filesystem::path& path, const std::string& title, const std::string& xlabel,
                       const std::string& ylabel, const std::vector<Series>& series) {
  constexpr int W = 640, H = 560, L = 80, R = 20, T = 50, B = 70;
  const cv::Scalar palette[] = {{40, 40, 220}, {220, 90, 30}, {40, 160, 40}, {150, 60, 150}, {30, 150, 200}};
  cv::Mat img(H, W, CV_8UC3, cv::Scalar(255, 255, 255));
  const int pw = W - L - R, ph = H - T - B;
  auto to_px = [&](double x, double y) {
    x = std::clamp(x, 0.0, 1.0);
    y = std::clamp(y, 0.0, 1.0);
    return cv::Point(L + static_cast<int>(x * pw + 0.5), T + ph - static_cast<int>(y * ph + 0.5));
  };
  const auto font = cv::FONT_HERSHEY_SIMPLEX;
  for (int k = 0; k <= 10; ++k) {
    const double v = k / 10.0;
    cv::line(img, to_px(v, 0), to_px(v, 1), cv::Scalar(230, 230, 230), 1);
    cv::line(img, to_px(0, v), to_px(1, v), cv::Scalar(230, 230, 230), 1);
    if (k % 2 == 0) {
      const std::string s = k == 10 ? "1.0" : "0." + std::to_string(k);
      cv::putText(img, s, to_px(v, 0) + cv::Point(-12, 20), font, 0.4, cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
      cv::putText(img, s, to_px(0, v) + cv::Point(-32, 4), font, 0.4, cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
    }
  }
  cv::rectangle(img, to_px(0, 1), to_px(1, 0), cv::Scalar(0, 0, 0), 1);
  cv::putText(img, title, {L, T - 18}, font, 0.6, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  cv::putText(img, xlabel, {L + pw / 2 - 60, H - 20}, font, 0.5, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  cv::Mat ylab(20, 260, CV_8UC3, cv::Scalar(255, 255, 255));
  cv::putText(ylab, ylabel, {0, 15}, font, 0.5, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  cv::rotate(ylab, ylab, cv::ROTATE_90_COUNTERCLOCKWISE);
  ylab.copyTo(img(cv::Rect(8, T + std::max(0, ph / 2 - 130), ylab.cols, ylab.rows)));

  for (std::size_t s = 0; s < series.size(); ++s) {
    const cv::Scalar col = palette[s % 5];
    std::vector<cv::Point> pts;
    for (const auto& [x, y] : series[s].points) pts.push_back(to_px(x, y));
    if (pts.size() == 1) cv::circle(img, pts[0], 3, col, cv::FILLED, cv::LINE_AA);
    if (pts.size() > 1) cv::polylines(img, pts, false, col, 2, cv::LINE_AA);
    const cv::Point key(L + 12, T + ph - 20 - static_cast<int>(series.size() - 1 - s) * 20);
    cv::line(img, key + cv::Point(0, -4), key + cv::Point(20, -4), col, 2);
    cv::putText(img, series[s].label, key + cv::Point(26, 0), font, 0.45, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  }
  write_or_throw(path, img);
}

}  // namespace avseg::io
