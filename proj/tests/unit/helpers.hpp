#pragma once

// Random instances shared by the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "avseg/annotation.hpp"
#include "avseg/rng.hpp"
#include "avseg/tensor.hpp"

namespace testing_helpers {

using namespace avseg;

// ROI disc plus random classes inside it, with every class represented
// with high probability.
inline AnnotatedFundusImage random_annotated(Size2 s, std::uint64_t seed) {
  Rng rng(seed);
  AnnotatedFundusImage a;
  a.id = "rand" + std::to_string(seed);
  a.roi = Mask(s);
  a.annotation = Annotation(s, VesselClass::background);
  const double cy = 0.5 * (s.rows - 1), cx = 0.5 * (s.cols - 1), r2 = 0.3 * (s.rows * s.rows + s.cols * s.cols) * 0.5;
  for (int r = 0; r < s.rows; ++r)
    for (int c = 0; c < s.cols; ++c) {
      const bool in = (r - cy) * (r - cy) + (c - cx) * (c - cx) <= r2;
      a.roi(r, c) = in ? 1 : 0;
      if (!in) continue;
      const double u = rng.uniform01();
      a.annotation(r, c) = u < 0.5   ? VesselClass::background
                           : u < 0.65 ? VesselClass::artery
                           : u < 0.8  ? VesselClass::vein
                           : u < 0.9  ? VesselClass::crossing
                                      : VesselClass::uncertain;
    }
  a.vessel_gt = vessel_mask_from(a.annotation);
  a.image = Tensor3<float>(3, s);
  for (float& v : a.image.span()) v = static_cast<float>(rng.uniform01());
  return a;
}

template <typename T>
Tensor3<T> random_tensor(int channels, Size2 s, Rng& rng, double lo, double hi) {
  Tensor3<T> t(channels, s);
  for (T& v : t.span()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("avseg_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_helpers
