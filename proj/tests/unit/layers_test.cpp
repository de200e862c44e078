#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "avseg/nn/layers.hpp"
#include "unit/helpers.hpp"

namespace {

using namespace avseg;
using namespace avseg::nn;
using testing_helpers::random_tensor;

// Direct loops: y[o][r][c] = b[o] + sum_{i,dy,dx} w[o][i][dy][dx] x[i][r+dy-k/2][c+dx-k/2]
Tensor3<double> direct_conv(const Conv2d<double>& conv, const Tensor3<double>& x) {
  const int k = conv.kernel(), p = k / 2, in = conv.in_channels(), out = conv.out_channels();
  Tensor3<double> y(out, x.size());
  const auto& w = conv.weight().value;
  for (int o = 0; o < out; ++o)
    for (int r = 0; r < x.rows(); ++r)
      for (int c = 0; c < x.cols(); ++c) {
        double s = conv.bias().value[static_cast<std::size_t>(o)];
        for (int i = 0; i < in; ++i)
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
              const int rr = r + dy - p, cc = c + dx - p;
              if (rr < 0 || cc < 0 || rr >= x.rows() || cc >= x.cols()) continue;
              s += w[static_cast<std::size_t>(((o * in + i) * k + dy) * k + dx)] * x(i, rr, cc);
            }
        y(o, r, c) = s;
      }
  return y;
}

void randomize(Parameter<double>& p, Rng& rng) {
  for (double& v : p.value) v = rng.uniform(-1, 1);
}

// Loss = <y, g> for a fixed random g, so dL/dy = g.
double probe(const Tensor3<double>& y, const Tensor3<double>& g) {
  double s = 0;
  for (std::size_t i = 0; i < y.numel(); ++i) s += y[i] * g[i];
  return s;
}

template <typename Layer>
void check_gradients(Layer& layer, Tensor3<double> x, Rng& rng) {
  const Tensor3<double> y = layer.forward(x);
  const auto g = random_tensor<double>(y.channels(), y.size(), rng, -1, 1);
  layer.weight().zero_grad();
  layer.bias().zero_grad();
  const Tensor3<double> dx = layer.backward(x, g);
  const double h = 1e-6;
  auto fd = [&](double& slot) {
    const double keep = slot;
    slot = keep + h;
    const double up = probe(layer.forward(x), g);
    slot = keep - h;
    const double down = probe(layer.forward(x), g);
    slot = keep;
    return (up - down) / (2 * h);
  };
  for (std::size_t i = 0; i < x.numel(); i += 3) EXPECT_NEAR(dx[i], fd(x[i]), 1e-6) << "dx " << i;
  for (std::size_t i = 0; i < layer.weight().size(); i += 2)
    EXPECT_NEAR(layer.weight().grad[i], fd(layer.weight().value[i]), 1e-6) << "dW " << i;
  for (std::size_t i = 0; i < layer.bias().size(); ++i) EXPECT_NEAR(layer.bias().grad[i], fd(layer.bias().value[i]), 1e-6);
}

TEST(Conv2d, MatchesDirectLoops) {
  Rng rng(1);
  for (int k : {1, 3}) {
    Conv2d<double> conv("c", 3, 5, k);
    randomize(conv.weight(), rng);
    randomize(conv.bias(), rng);
    const auto x = random_tensor<double>(3, {7, 9}, rng, -1, 1);
    const auto y = conv.forward(x), ref = direct_conv(conv, x);
    for (std::size_t i = 0; i < y.numel(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-12);
  }
}

TEST(Conv2d, GradientsMatchFiniteDifferences) {
  Rng rng(2);
  for (int k : {1, 3}) {
    Conv2d<double> conv("c", 2, 3, k);
    randomize(conv.weight(), rng);
    randomize(conv.bias(), rng);
    check_gradients(conv, random_tensor<double>(2, {5, 6}, rng, -1, 1), rng);
  }
}

TEST(Conv2d, ChannelMismatchIsShapeError) {
  Conv2d<float> conv("c", 3, 4, 3);
  EXPECT_THROW(conv.forward(Tensor3<float>(2, 4, 4)), ShapeError);
}

TEST(ConvTranspose, MatchesDirectScatter) {
  Rng rng(3);
  ConvTranspose2x2<double> up("u", 3, 2);
  randomize(up.weight(), rng);
  randomize(up.bias(), rng);
  const auto x = random_tensor<double>(3, {4, 5}, rng, -1, 1);
  const auto y = up.forward(x);
  ASSERT_EQ(y.size(), (Size2{8, 10}));
  const auto& w = up.weight().value;
  for (int o = 0; o < 2; ++o)
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 10; ++c) {
        double s = up.bias().value[static_cast<std::size_t>(o)];
        for (int i = 0; i < 3; ++i) s += w[static_cast<std::size_t>(((i * 2 + o) * 2 + r % 2) * 2 + c % 2)] * x(i, r / 2, c / 2);
        EXPECT_NEAR(y(o, r, c), s, 1e-12);
      }
}

TEST(ConvTranspose, GradientsMatchFiniteDifferences) {
  Rng rng(4);
  ConvTranspose2x2<double> up("u", 3, 2);
  randomize(up.weight(), rng);
  randomize(up.bias(), rng);
  check_gradients(up, random_tensor<double>(3, {3, 4}, rng, -1, 1), rng);
}

TEST(Pool, MaxAndRouting) {
  Tensor3<double> x(1, 2, 4);
  x(0, 0, 0) = 1;
  x(0, 1, 1) = 5;
  x(0, 0, 3) = -1;
  x(0, 1, 2) = -2;
  x(0, 0, 2) = -3;
  x(0, 1, 3) = -4;
  PoolIndices idx;
  const auto y = maxpool2x2(x, &idx);
  EXPECT_EQ(y(0, 0, 0), 5);
  EXPECT_EQ(y(0, 0, 1), -1);
  Tensor3<double> g(1, 1, 2);
  g(0, 0, 0) = 10;
  g(0, 0, 1) = 20;
  const auto dx = maxpool2x2_backward(g, idx);
  EXPECT_EQ(dx(0, 1, 1), 10);
  EXPECT_EQ(dx(0, 0, 3), 20);
  EXPECT_EQ(dx(0, 0, 0), 0);
  EXPECT_THROW(maxpool2x2(Tensor3<double>(1, 3, 4), nullptr), ShapeError);
}

TEST(Concat, SplitInvertsConcat) {
  Rng rng(5);
  const auto a = random_tensor<double>(2, {3, 3}, rng, 0, 1), b = random_tensor<double>(3, {3, 3}, rng, 0, 1);
  const auto [a2, b2] = split_channels(concat_channels(a, b), 2);
  EXPECT_EQ(a2, a);
  EXPECT_EQ(b2, b);
}

TEST(Relu, ForwardAndBackward) {
  Tensor3<double> y(1, 1, 3);
  y[0] = -1;
  y[1] = 0;
  y[2] = 2;
  relu_inplace(y);
  EXPECT_EQ(y[0], 0);
  EXPECT_EQ(y[2], 2);
  Tensor3<double> g(1, 1, 3, 1.0);
  relu_backward_inplace(y, g);
  EXPECT_EQ(g[0], 0);
  EXPECT_EQ(g[1], 0);
  EXPECT_EQ(g[2], 1);
}

TEST(HeInit, StandardDeviationWithinFivePercent) {
  Parameter<double> p("w", {64, 64, 3, 3}, 64 * 9);
  Rng rng(6);
  p.init_he_uniform(rng);
  double ss = 0;
  for (double v : p.value) ss += v * v;
  const double sd = std::sqrt(ss / static_cast<double>(p.size()));
  EXPECT_NEAR(sd / std::sqrt(2.0 / (64 * 9)), 1.0, 0.05);
}

}  // namespace
