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

// U-Net encoder-decoder.
//
// With N base channels and depth D (default 4):
//   encoder level l = 0..D-1:  conv3x3(->N*2^l) relu, conv3x3 relu, maxpool 2
//   decoder level L = D..1:    conv3x3(->N*2^L) relu, conv3x3 relu,
//                              convT 2x2/2 (->N*2^(L-1)), concat skip(L-1)
//   output:                    conv3x3(->N) relu, conv3x3 relu, conv1x1(->C)
// Convolutions zero-pad by one so that every block preserves its size; the
// network output matches the input resolution. Inputs must be multiples of
// 2^D; predict() reflect-pads and crops back.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "avseg/activations.hpp"
#include "avseg/error.hpp"
#include "avseg/nn/layers.hpp"
#include "avseg/preprocess.hpp"
#include "avseg/rng.hpp"
#include "avseg/tensor.hpp"

namespace avseg::nn {

inline Size2 padded_size(Size2 s, int multiple) {
  auto up = [multiple](int v) { return (v + multiple - 1) / multiple * multiple; };
  return {up(s.rows), up(s.cols)};
}

// Reflect padding on the bottom and right edges.
template <typename T>
Tensor3<T> pad_to_multiple(const Tensor3<T>& x, int multiple) {
  const Size2 ps = padded_size(x.size(), multiple);
  if (ps == x.size()) return x;
  Tensor3<T> out(x.channels(), ps);
  for (int c = 0; c < x.channels(); ++c)
    for (int r = 0; r < ps.rows; ++r) {
      const int sr = reflect_index(r, x.rows());
      for (int col = 0; col < ps.cols; ++col) out(c, r, col) = x(c, sr, reflect_index(col, x.cols()));
    }
  return out;
}

// Zero padding on the bottom and right edges (masks, targets).
template <typename T>
Grid<T> zero_pad_to(const Grid<T>& g, Size2 ps) {
  if (ps == g.size()) return g;
  Grid<T> out(ps);
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) out(r, c) = g(r, c);
  return out;
}

template <typename T>
Tensor3<T> zero_pad_to(const Tensor3<T>& t, Size2 ps) {
  if (ps == t.size()) return t;
  Tensor3<T> out(t.channels(), ps);
  for (int ch = 0; ch < t.channels(); ++ch)
    for (int r = 0; r < t.rows(); ++r)
      for (int c = 0; c < t.cols(); ++c) out(ch, r, c) = t(ch, r, c);
  return out;
}

template <typename T>
Tensor3<T> crop(const Tensor3<T>& t, Size2 s) {
  if (s == t.size()) return t;
  Tensor3<T> out(t.channels(), s);
  for (int ch = 0; ch < t.channels(); ++ch)
    for (int r = 0; r < s.rows; ++r)
      for (int c = 0; c < s.cols; ++c) out(ch, r, c) = t(ch, r, c);
  return out;
}

struct UNetConfig {
  int base_channels = 64;
  int in_channels = 3;
  int out_channels = 3;
  int depth = 4;
  Head head = Head::sigmoid;
  bool batch_norm = false;

  int multiple() const { return 1 << depth; }

  void validate() const {
    if (base_channels < 1) throw ConfigError("base_channels must be >= 1");
    if (in_channels < 1) throw ConfigError("in_channels must be >= 1");
    if (out_channels != 3 && out_channels != 4) throw ConfigError("out_channels must be 3 (sigmoid) or 4 (softmax)");
    if (depth < 1 || depth > 8) throw ConfigError("depth must lie in [1, 8]");
    if ((head == Head::sigmoid) != (out_channels == 3))
      throw ConfigError("the sigmoid head goes with 3 output channels and the softmax head with 4");
    if (batch_norm) throw ConfigError("batch_norm is not supported by this network (the reference architecture has none)");
  }
};

template <typename T>
class UNet {
 public:
  // Intermediate activations kept for the backward pass.
  struct Tape {
    std::vector<Tensor3<T>> enc_in, enc_mid, enc_skip;  // per encoder level
    std::vector<PoolIndices> pool;
    std::vector<Tensor3<T>> dec_in, dec_mid, dec_out;  // index L-1 for level L; index D for the output block
  };

  explicit UNet(const UNetConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int N = cfg.base_channels, D = cfg.depth;
    auto width = [N](int level) { return N << level; };
    int in = cfg.in_channels;
    for (int l = 0; l < D; ++l) {
      const std::string p = "enc" + std::to_string(l);
      enc_a_.emplace_back(p + ".conv1", in, width(l), 3);
      enc_b_.emplace_back(p + ".conv2", width(l), width(l), 3);
      in = width(l);
    }
    for (int L = D; L >= 1; --L) {
      const std::string p = "dec" + std::to_string(L);
      dec_a_.emplace_back(p + ".conv1", in, width(L), 3);
      dec_b_.emplace_back(p + ".conv2", width(L), width(L), 3);
      up_.emplace_back(p + ".up", width(L), width(L - 1));
      in = 2 * width(L - 1);
    }
    out_a_ = Conv2d<T>("out.conv1", in, N, 3);
    out_b_ = Conv2d<T>("out.conv2", N, N, 3);
    head_ = Conv2d<T>("out.head", N, cfg.out_channels, 1);
  }

  const UNetConfig& config() const { return cfg_; }

  // Parameters in a fixed order: encoder, decoder, output block.
  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> ps;
    auto add = [&](auto& layer) {
      ps.push_back(&layer.weight());
      ps.push_back(&layer.bias());
    };
    for (int l = 0; l < cfg_.depth; ++l) {
      add(enc_a_[l]);
      add(enc_b_[l]);
    }
    for (int i = 0; i < cfg_.depth; ++i) {
      add(dec_a_[i]);
      add(dec_b_[i]);
      add(up_[i]);
    }
    add(out_a_);
    add(out_b_);
    add(head_);
    return ps;
  }

  std::vector<const Parameter<T>*> parameters() const {
    auto ps = const_cast<UNet*>(this)->parameters();
    return {ps.begin(), ps.end()};
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += p->size();
    return n;
  }

  void init_params(std::uint64_t seed) {
    Rng rng(seed);
    for (auto* p : parameters()) p->init_he_uniform(rng);
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  // Flat copy of every parameter value, in parameters() order.
  std::vector<T> flat_values() const {
    std::vector<T> out;
    out.reserve(parameter_count());
    for (const auto* p : parameters()) out.insert(out.end(), p->value.begin(), p->value.end());
    return out;
  }

  void load_flat_values(const std::vector<T>& flat) {
    if (flat.size() != parameter_count())
      throw ShapeError("parameter blob holds " + std::to_string(flat.size()) + " values, network needs " +
                       std::to_string(parameter_count()));
    std::size_t off = 0;
    for (auto* p : parameters()) {
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), p->size(), p->value.begin());
      off += p->size();
    }
  }

  // Pre-activation output. Fills `tape` when given (needed for backward).
  Tensor3<T> forward(const Tensor3<T>& x, Tape* tape = nullptr) const {
    const int D = cfg_.depth;
    if (x.channels() != cfg_.in_channels)
      throw ShapeError("network expects " + std::to_string(cfg_.in_channels) + " input channels, got " + std::to_string(x.channels()));
    if (x.rows() % cfg_.multiple() || x.cols() % cfg_.multiple())
      throw ShapeError("input " + to_string(x.size()) + " must be padded to a multiple of " + std::to_string(cfg_.multiple()) +
                       " in both dimensions (see pad_to_multiple)");
    if (tape) *tape = Tape{};

    std::vector<Tensor3<T>> skips;
    Tensor3<T> h = x;
    for (int l = 0; l < D; ++l) {
      Tensor3<T> a = enc_a_[l].forward(h);
      relu_inplace(a);
      Tensor3<T> s = enc_b_[l].forward(a);
      relu_inplace(s);
      PoolIndices idx;
      Tensor3<T> pooled = maxpool2x2(s, tape ? &idx : nullptr);
      if (tape) {
        tape->enc_in.push_back(std::move(h));
        tape->enc_mid.push_back(std::move(a));
        tape->enc_skip.push_back(s);
        tape->pool.push_back(std::move(idx));
      }
      skips.push_back(std::move(s));
      h = std::move(pooled);
    }
    for (int i = 0; i < D; ++i) {
      const int L = D - i;
      Tensor3<T> m = dec_a_[i].forward(h);
      relu_inplace(m);
      Tensor3<T> o = dec_b_[i].forward(m);
      relu_inplace(o);
      Tensor3<T> up = up_[i].forward(o);
      Tensor3<T> next = concat_channels(up, skips[L - 1]);
      if (tape) {
        tape->dec_in.push_back(std::move(h));
        tape->dec_mid.push_back(std::move(m));
        tape->dec_out.push_back(std::move(o));
      }
      h = std::move(next);
    }
    Tensor3<T> m = out_a_.forward(h);
    relu_inplace(m);
    Tensor3<T> o = out_b_.forward(m);
    relu_inplace(o);
    Tensor3<T> logits = head_.forward(o);
    if (tape) {
      tape->dec_in.push_back(std::move(h));
      tape->dec_mid.push_back(std::move(m));
      tape->dec_out.push_back(std::move(o));
    }
    return logits;
  }

  // Accumulates parameter gradients from d loss / d logits; returns d loss / d input.
  Tensor3<T> backward(const Tape& tape, const Tensor3<T>& dlogits) {
    const int D = cfg_.depth;
    Tensor3<T> g = head_.backward(tape.dec_out[D], dlogits);
    relu_backward_inplace(tape.dec_out[D], g);
    g = out_b_.backward(tape.dec_mid[D], g);
    relu_backward_inplace(tape.dec_mid[D], g);
    g = out_a_.backward(tape.dec_in[D], g);

    std::vector<Tensor3<T>> dskip(static_cast<std::size_t>(D));
    for (int i = D - 1; i >= 0; --i) {
      const int L = D - i;
      auto [dup, ds] = split_channels(g, up_[i].out_channels());
      dskip[L - 1] = std::move(ds);
      g = up_[i].backward(tape.dec_out[i], dup);
      relu_backward_inplace(tape.dec_out[i], g);
      g = dec_b_[i].backward(tape.dec_mid[i], g);
      relu_backward_inplace(tape.dec_mid[i], g);
      g = dec_a_[i].backward(tape.dec_in[i], g);
    }
    for (int l = D - 1; l >= 0; --l) {
      Tensor3<T> ds = maxpool2x2_backward(g, tape.pool[l]);
      auto& skip_grad = dskip[l];
      for (std::size_t k = 0; k < ds.numel(); ++k) ds[k] += skip_grad[k];
      relu_backward_inplace(tape.enc_skip[l], ds);
      g = enc_b_[l].backward(tape.enc_mid[l], ds);
      relu_backward_inplace(tape.enc_mid[l], g);
      g = enc_a_[l].backward(tape.enc_in[l], g);
    }
    return g;
  }

  // Probability maps for an arbitrary-size image: reflect-pad, run, apply the
  // head, crop back.
  Tensor3<T> predict(const Tensor3<T>& image) const {
    const Tensor3<T> padded = pad_to_multiple(image, cfg_.multiple());
    const Tensor3<T> probs = apply_head(forward(padded), cfg_.head);
    return crop(probs, image.size());
  }

 private:
  UNetConfig cfg_;
  std::vector<Conv2d<T>> enc_a_, enc_b_, dec_a_, dec_b_;
  std::vector<ConvTranspose2x2<T>> up_;
  Conv2d<T> out_a_, out_b_, head_;
};

}  // namespace avseg::nn
