#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "avseg/preprocess.hpp"
#include "unit/helpers.hpp"

namespace {

using namespace avseg;
using testing_helpers::random_annotated;
using testing_helpers::random_tensor;

TEST(Gaussian, KernelNormalisedWithExpectedRadius) {
  const auto k = gaussian_kernel(10.0);
  EXPECT_EQ(k.size(), 81u);
  EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(k[0], k[80]);
  EXPECT_GT(k[40], k[39]);
}

TEST(Gaussian, ReflectIndex) {
  EXPECT_EQ(reflect_index(-1, 5), 0);
  EXPECT_EQ(reflect_index(-2, 5), 1);
  EXPECT_EQ(reflect_index(5, 5), 4);
  EXPECT_EQ(reflect_index(6, 5), 3);
  EXPECT_EQ(reflect_index(12, 5), 2);
  EXPECT_EQ(reflect_index(3, 1), 0);
}

TEST(Gaussian, ConstantImageUnchanged) {
  Grid<double> g(30, 40, 0.37);
  const auto b = gaussian_blur(g, 10.0);
  for (double v : b.span()) EXPECT_NEAR(v, 0.37, 1e-14);
}

TEST(Gaussian, TranslationCovariantAwayFromBorders) {
  Grid<double> a(64, 64), b(64, 64);
  a(30, 30) = 1.0;
  b(33, 28) = 1.0;
  const auto ba = gaussian_blur(a, 2.0), bb = gaussian_blur(b, 2.0);
  for (int r = 20; r < 40; ++r)
    for (int c = 20; c < 40; ++c) EXPECT_NEAR(ba(r, c), bb(r + 3, c - 2), 1e-15);
}

TEST(Normalize, EveryChannelHasStdSigma0) {
  Rng rng(1);
  const auto a = random_annotated({48, 40}, 2);
  for (double sigma0 : {1.0, 0.5}) {
    EnhancementConfig cfg;
    cfg.sigma0 = sigma0;
    const auto out = normalize_contrast(tensor_cast<double>(a.image), a.roi, cfg);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(population_std<double>(out.plane(c)), sigma0, 1e-12);
  }
}

TEST(Normalize, InvariantToPositiveGainAndOffset) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const auto img = random_tensor<double>(3, {32, 36}, rng, 0.0, 1.0);
    Mask roi(32, 36, 1);
    const double gain = rng.uniform(0.2, 5.0), offset = rng.uniform(-1.0, 1.0);
    Tensor3<double> scaled = img;
    for (double& v : scaled.span()) v = gain * v + offset;
    const auto e1 = enhance(img, roi), e2 = enhance(scaled, roi);
    for (std::size_t i = 0; i < e1.numel(); ++i) ASSERT_NEAR(e1[i], e2[i], 1e-9);
  }
}

TEST(Enhance, ZeroOutsideRoi) {
  const auto a = random_annotated({24, 24}, 5);
  const auto e = enhance(a.image, a.roi);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.roi.numel(); ++i)
      if (!a.roi[i]) {
        EXPECT_EQ(e.plane(c)[i], 0.0f);
      }
}

TEST(Enhance, ConstantChannelIsDegenerate) {
  Tensor3<float> img(3, 16, 16, 0.5f);
  Mask roi(16, 16, 1);
  try {
    enhance(img, roi);
    FAIL();
  } catch (const DegenerateInputError& e) {
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST(Enhance, StdOverRoiOption) {
  const auto a = random_annotated({40, 40}, 8);
  EnhancementConfig cfg;
  cfg.std_over_roi = true;
  const auto out = normalize_contrast(tensor_cast<double>(a.image), a.roi, cfg);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(population_std<double>(out.plane(c), &a.roi), 1.0, 1e-12);
}

TEST(Enhance, InvalidConfigRejected) {
  EnhancementConfig cfg;
  cfg.gaussian_sigma = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
