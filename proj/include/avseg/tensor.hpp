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
#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "avseg/error.hpp"

namespace avseg {

// Storage is 64-byte aligned so that vectorised kernels see the same
// alignment on every run; with std::vector the reduction order (and so the
// low bits of the result) could change with the heap address.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

struct Size2 {
  int rows = 0;
  int cols = 0;

  friend bool operator==(const Size2&, const Size2&) = default;
  std::size_t area() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

inline std::string to_string(Size2 s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

// Row-major single-plane array. Used for masks, label maps and scalar fields.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int rows, int cols, T fill = T{}) : size_{rows, cols}, data_(size_.area(), fill) {}
  explicit Grid(Size2 s, T fill = T{}) : Grid(s.rows, s.cols, fill) {}

  int rows() const { return size_.rows; }
  int cols() const { return size_.cols; }
  Size2 size() const { return size_; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int r, int c) { return data_[index(r, c)]; }
  const T& operator()(int r, int c) const { return data_[index(r, c)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(size_.cols) + static_cast<std::size_t>(c);
  }

  Size2 size_{};
  AlignedVector<T> data_;
};

using Mask = Grid<std::uint8_t>;

// Channel-major (CHW) stack of equally sized planes.
template <typename T>
class Tensor3 {
 public:
  using value_type = T;

  Tensor3() = default;
  Tensor3(int channels, int rows, int cols, T fill = T{})
      : channels_(channels), size_{rows, cols},
        data_(static_cast<std::size_t>(channels) * size_.area(), fill) {}
  Tensor3(int channels, Size2 s, T fill = T{}) : Tensor3(channels, s.rows, s.cols, fill) {}

  int channels() const { return channels_; }
  int rows() const { return size_.rows; }
  int cols() const { return size_.cols; }
  Size2 size() const { return size_; }
  std::size_t plane_size() const { return size_.area(); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int c, int r, int col) { return data_[index(c, r, col)]; }
  const T& operator()(int c, int r, int col) const { return data_[index(c, r, col)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const T> plane(int c) const { return {data_.data() + c * plane_size(), plane_size()}; }

  Grid<T> plane_copy(int c) const {
    Grid<T> g(size_);
    std::copy_n(data_.data() + c * plane_size(), plane_size(), g.data());
    return g;
  }
  void set_plane(int c, const Grid<T>& g) {
    if (g.size() != size_) throw ShapeError("plane size " + to_string(g.size()) + " != " + to_string(size_));
    std::copy_n(g.data(), plane_size(), data_.data() + c * plane_size());
  }

  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t index(int c, int r, int col) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(size_.rows) + static_cast<std::size_t>(r)) *
               static_cast<std::size_t>(size_.cols) +
           static_cast<std::size_t>(col);
  }

  int channels_ = 0;
  Size2 size_{};
  AlignedVector<T> data_;
};

template <typename To, typename From>
Tensor3<To> tensor_cast(const Tensor3<From>& src) {
  Tensor3<To> out(src.channels(), src.size());
  std::transform(src.span().begin(), src.span().end(), out.span().begin(),
                 [](From v) { return static_cast<To>(v); });
  return out;
}

template <typename T>
std::size_t count_nonzero(const Grid<T>& g) {
  return static_cast<std::size_t>(std::count_if(g.begin(), g.end(), [](T v) { return v != T{}; }));
}

}  // namespace avseg
