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

// CPU building blocks for the encoder-decoder network. Tensors are CHW; all
// matrix products go through Eigen. Convolutions are lowered with im2col over
// bands of rows so that the column buffer stays bounded on large images.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "avseg/error.hpp"
#include "avseg/rng.hpp"
#include "avseg/tensor.hpp"

namespace avseg::nn {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using StridedMap = Eigen::Map<RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMatrix<T>, 0, Eigen::OuterStride<>>;

template <typename T>
struct Parameter {
  std::string name;
  std::vector<int> shape;
  AlignedVector<T> value;
  AlignedVector<T> grad;
  int fan_in = 0;  // 0 for biases

  Parameter() = default;
  Parameter(std::string n, std::vector<int> s, int fan) : name(std::move(n)), shape(std::move(s)), fan_in(fan) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    value.assign(count, T{0});
    grad.assign(count, T{0});
  }

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T{0}); }

  // He (Kaiming) uniform: U(-b, b) with b = sqrt(6 / fan_in), so that the
  // standard deviation is sqrt(2 / fan_in). Biases stay at zero.
  void init_he_uniform(Rng& rng) {
    if (fan_in == 0) {
      std::fill(value.begin(), value.end(), T{0});
      return;
    }
    const double bound = std::sqrt(6.0 / fan_in);
    for (T& v : value) v = static_cast<T>(rng.uniform(-bound, bound));
  }
};

inline constexpr std::size_t kColumnBudget = std::size_t{1} << 22;  // elements per im2col band

// Square convolution, stride 1, zero padding k/2 (size preserving for odd k).
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in, int out, int k)
      : in_(in), out_(out), k_(k),
        weight_(name + ".weight", {out, in, k, k}, in * k * k),
        bias_(name + ".bias", {out}, 0) {}

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return k_; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  const Parameter<T>& weight() const { return weight_; }
  const Parameter<T>& bias() const { return bias_; }

  Tensor3<T> forward(const Tensor3<T>& x) const {
    check_input(x);
    const int H = x.rows(), W = x.cols();
    Tensor3<T> y(out_, H, W);
    const ConstMatMap<T> w(weight_.value.data(), out_, in_ * k_ * k_);
    const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(bias_.value.data(), out_);
    const std::size_t plane = x.plane_size();
    if (k_ == 1) {
      const ConstMatMap<T> xm(x.data(), in_, static_cast<Eigen::Index>(plane));
      MatMap<T> ym(y.data(), out_, static_cast<Eigen::Index>(plane));
      ym.noalias() = w * xm;
      ym.colwise() += b;
      return y;
    }
    AlignedVector<T> col;
    for_each_band(H, W, [&](int r0, int r1) {
      const auto n = static_cast<Eigen::Index>((r1 - r0) * W);
      im2col(x, r0, r1, col);
      const ConstMatMap<T> cm(col.data(), in_ * k_ * k_, n);
      StridedMap<T> ym(y.data() + static_cast<std::size_t>(r0) * W, out_, n,
                       Eigen::OuterStride<>(static_cast<Eigen::Index>(plane)));
      ym.noalias() = w * cm;
      ym.colwise() += b;
    });
    return y;
  }

  // Accumulates parameter gradients; returns d loss / d x.
  Tensor3<T> backward(const Tensor3<T>& x, const Tensor3<T>& dy) {
    check_input(x);
    const int H = x.rows(), W = x.cols();
    const std::size_t plane = x.plane_size();
    Tensor3<T> dx(in_, H, W);
    const ConstMatMap<T> w(weight_.value.data(), out_, in_ * k_ * k_);
    MatMap<T> dw(weight_.grad.data(), out_, in_ * k_ * k_);
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(bias_.grad.data(), out_);
    const ConstMatMap<T> dym_full(dy.data(), out_, static_cast<Eigen::Index>(plane));
    db += dym_full.rowwise().sum();
    if (k_ == 1) {
      const ConstMatMap<T> xm(x.data(), in_, static_cast<Eigen::Index>(plane));
      dw.noalias() += dym_full * xm.transpose();
      MatMap<T> dxm(dx.data(), in_, static_cast<Eigen::Index>(plane));
      dxm.noalias() = w.transpose() * dym_full;
      return dx;
    }
    AlignedVector<T> col, dcol;
    for_each_band(H, W, [&](int r0, int r1) {
      const auto n = static_cast<Eigen::Index>((r1 - r0) * W);
      im2col(x, r0, r1, col);
      const ConstMatMap<T> cm(col.data(), in_ * k_ * k_, n);
      const ConstStridedMap<T> dym(dy.data() + static_cast<std::size_t>(r0) * W, out_, n,
                                   Eigen::OuterStride<>(static_cast<Eigen::Index>(plane)));
      dw.noalias() += dym * cm.transpose();
      dcol.resize(col.size());
      MatMap<T> dcm(dcol.data(), in_ * k_ * k_, n);
      dcm.noalias() = w.transpose() * dym;
      col2im_add(dcol, r0, r1, dx);
    });
    return dx;
  }

 private:
  void check_input(const Tensor3<T>& x) const {
    if (x.channels() != in_)
      throw ShapeError(weight_.name + ": expected " + std::to_string(in_) + " input channels, got " + std::to_string(x.channels()));
  }

  template <typename F>
  void for_each_band(int H, int W, F&& f) const {
    const std::size_t per_row = static_cast<std::size_t>(in_) * k_ * k_ * W;
    const int band = std::max(1, static_cast<int>(kColumnBudget / std::max<std::size_t>(per_row, 1)));
    for (int r0 = 0; r0 < H; r0 += band) f(r0, std::min(H, r0 + band));
  }

  void im2col(const Tensor3<T>& x, int r0, int r1, AlignedVector<T>& col) const {
    const int H = x.rows(), W = x.cols(), pad = k_ / 2;
    const std::size_t n = static_cast<std::size_t>(r1 - r0) * W;
    col.assign(static_cast<std::size_t>(in_) * k_ * k_ * n, T{0});
    for (int ci = 0; ci < in_; ++ci) {
      const T* src = x.plane(ci).data();
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          T* dst = col.data() + ((static_cast<std::size_t>(ci) * k_ + ky) * k_ + kx) * n;
          const int dx = kx - pad;
          const int c_lo = std::max(0, -dx), c_hi = std::min(W, W - dx);
          for (int r = r0; r < r1; ++r) {
            const int sr = r + ky - pad;
            if (sr < 0 || sr >= H) continue;
            const T* s = src + static_cast<std::size_t>(sr) * W;
            T* d = dst + static_cast<std::size_t>(r - r0) * W;
            std::copy(s + c_lo + dx, s + c_hi + dx, d + c_lo);
          }
        }
      }
    }
  }

  void col2im_add(const AlignedVector<T>& dcol, int r0, int r1, Tensor3<T>& dx) const {
    const int H = dx.rows(), W = dx.cols(), pad = k_ / 2;
    const std::size_t n = static_cast<std::size_t>(r1 - r0) * W;
    for (int ci = 0; ci < in_; ++ci) {
      T* dst_plane = dx.plane(ci).data();
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          const T* src = dcol.data() + ((static_cast<std::size_t>(ci) * k_ + ky) * k_ + kx) * n;
          const int dxo = kx - pad;
          const int c_lo = std::max(0, -dxo), c_hi = std::min(W, W - dxo);
          for (int r = r0; r < r1; ++r) {
            const int sr = r + ky - pad;
            if (sr < 0 || sr >= H) continue;
            T* d = dst_plane + static_cast<std::size_t>(sr) * W;
            const T* s = src + static_cast<std::size_t>(r - r0) * W;
            for (int c = c_lo; c < c_hi; ++c) d[c + dxo] += s[c];
          }
        }
      }
    }
  }

  int in_ = 0, out_ = 0, k_ = 3;
  Parameter<T> weight_;
  Parameter<T> bias_;
};

// 2x2 transposed convolution with stride 2: doubles the spatial resolution.
// Weight layout is (in, out, 2, 2).
template <typename T>
class ConvTranspose2x2 {
 public:
  ConvTranspose2x2() = default;
  // Each output pixel receives exactly one tap from every input channel, so
  // the effective fan-in is the number of input channels.
  ConvTranspose2x2(const std::string& name, int in, int out)
      : in_(in), out_(out), weight_(name + ".weight", {in, out, 2, 2}, in), bias_(name + ".bias", {out}, 0) {}

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  const Parameter<T>& weight() const { return weight_; }
  const Parameter<T>& bias() const { return bias_; }

  Tensor3<T> forward(const Tensor3<T>& x) const {
    check_input(x);
    const int H = x.rows(), W = x.cols();
    const auto n = static_cast<Eigen::Index>(x.plane_size());
    const ConstMatMap<T> w(weight_.value.data(), in_, out_ * 4);
    const ConstMatMap<T> xm(x.data(), in_, n);
    RowMatrix<T> z = w.transpose() * xm;  // (out*4) x n
    Tensor3<T> y(out_, 2 * H, 2 * W);
    for (int co = 0; co < out_; ++co) {
      const T b = bias_.value[static_cast<std::size_t>(co)];
      for (int k = 0; k < 4; ++k) {
        const int ky = k / 2, kx = k % 2;
        const T* zr = z.data() + (static_cast<std::size_t>(co) * 4 + k) * n;
        for (int r = 0; r < H; ++r)
          for (int c = 0; c < W; ++c) y(co, 2 * r + ky, 2 * c + kx) = zr[static_cast<std::size_t>(r) * W + c] + b;
      }
    }
    return y;
  }

  Tensor3<T> backward(const Tensor3<T>& x, const Tensor3<T>& dy) {
    check_input(x);
    const int H = x.rows(), W = x.cols();
    const auto n = static_cast<Eigen::Index>(x.plane_size());
    RowMatrix<T> dz(out_ * 4, n);
    for (int co = 0; co < out_; ++co) {
      T bsum{0};
      for (int k = 0; k < 4; ++k) {
        const int ky = k / 2, kx = k % 2;
        T* zr = dz.data() + (static_cast<std::size_t>(co) * 4 + k) * n;
        for (int r = 0; r < H; ++r)
          for (int c = 0; c < W; ++c) {
            const T g = dy(co, 2 * r + ky, 2 * c + kx);
            zr[static_cast<std::size_t>(r) * W + c] = g;
            bsum += g;
          }
      }
      bias_.grad[static_cast<std::size_t>(co)] += bsum;
    }
    const ConstMatMap<T> xm(x.data(), in_, n);
    const ConstMatMap<T> w(weight_.value.data(), in_, out_ * 4);
    MatMap<T> dw(weight_.grad.data(), in_, out_ * 4);
    dw.noalias() += xm * dz.transpose();
    Tensor3<T> dx(in_, H, W);
    MatMap<T> dxm(dx.data(), in_, n);
    dxm.noalias() = w * dz;
    return dx;
  }

 private:
  void check_input(const Tensor3<T>& x) const {
    if (x.channels() != in_)
      throw ShapeError(weight_.name + ": expected " + std::to_string(in_) + " input channels, got " + std::to_string(x.channels()));
  }

  int in_ = 0, out_ = 0;
  Parameter<T> weight_;
  Parameter<T> bias_;
};

template <typename T>
void relu_inplace(Tensor3<T>& x) {
  for (T& v : x.span()) v = v > T{0} ? v : T{0};
}

// Gradient through ReLU given its output.
template <typename T>
void relu_backward_inplace(const Tensor3<T>& y, Tensor3<T>& dy) {
  for (std::size_t i = 0; i < y.numel(); ++i)
    if (!(y[i] > T{0})) dy[i] = T{0};
}

struct PoolIndices {
  std::vector<std::uint8_t> argmax;  // 0..3 within each 2x2 window
};

template <typename T>
Tensor3<T> maxpool2x2(const Tensor3<T>& x, PoolIndices* indices) {
  if (x.rows() % 2 || x.cols() % 2) throw ShapeError("maxpool2x2 needs even spatial dimensions, got " + to_string(x.size()));
  const int C = x.channels(), H = x.rows() / 2, W = x.cols() / 2;
  Tensor3<T> y(C, H, W);
  if (indices) indices->argmax.assign(y.numel(), 0);
  std::size_t o = 0;
  for (int c = 0; c < C; ++c)
    for (int r = 0; r < H; ++r)
      for (int col = 0; col < W; ++col, ++o) {
        int best = 0;
        T v = x(c, 2 * r, 2 * col);
        for (int k = 1; k < 4; ++k) {
          const T u = x(c, 2 * r + k / 2, 2 * col + k % 2);
          if (u > v) {
            v = u;
            best = k;
          }
        }
        y[o] = v;
        if (indices) indices->argmax[o] = static_cast<std::uint8_t>(best);
      }
  return y;
}

template <typename T>
Tensor3<T> maxpool2x2_backward(const Tensor3<T>& dy, const PoolIndices& indices) {
  const int C = dy.channels(), H = dy.rows(), W = dy.cols();
  Tensor3<T> dx(C, 2 * H, 2 * W);
  std::size_t o = 0;
  for (int c = 0; c < C; ++c)
    for (int r = 0; r < H; ++r)
      for (int col = 0; col < W; ++col, ++o) {
        const int k = indices.argmax[o];
        dx(c, 2 * r + k / 2, 2 * col + k % 2) = dy[o];
      }
  return dx;
}

template <typename T>
Tensor3<T> concat_channels(const Tensor3<T>& a, const Tensor3<T>& b) {
  if (a.size() != b.size()) throw ShapeError("concat: spatial sizes differ: " + to_string(a.size()) + " vs " + to_string(b.size()));
  Tensor3<T> out(a.channels() + b.channels(), a.size());
  std::copy(a.span().begin(), a.span().end(), out.data());
  std::copy(b.span().begin(), b.span().end(), out.data() + a.numel());
  return out;
}

// Splits a gradient w.r.t. concat(a, b) into the part belonging to the first
// `first_channels` channels and the rest.
template <typename T>
std::pair<Tensor3<T>, Tensor3<T>> split_channels(const Tensor3<T>& g, int first_channels) {
  Tensor3<T> a(first_channels, g.size()), b(g.channels() - first_channels, g.size());
  std::copy_n(g.data(), a.numel(), a.data());
  std::copy_n(g.data() + a.numel(), b.numel(), b.data());
  return {std::move(a), std::move(b)};
}

}  // namespace avseg::nn
