/* Copyright 2026 The LCDnet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lcdnet/errors.hpp"

namespace lcdnet {

// Dense N-dimensional array with contiguous row-major storage. 4-D tensors
// use (batch, channel, row, column) order; 2-D maps use (row, column).
// Every extent must be >= 1 and product(shape) == data.size() at all times.
template <typename T>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<std::size_t> shape, T fill = T{})
      : shape_(std::move(shape)) {
    data_.assign(checked_numel(shape_), fill);
  }

  static TensorT from_data(std::vector<std::size_t> shape,
                           std::vector<T> data) {
    TensorT t;
    if (checked_numel(shape) != data.size()) {
      throw DimensionError("tensor data size " + std::to_string(data.size()) +
                           " does not match shape " + shape_string(shape));
    }
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t extent(std::size_t axis) const {
    if (axis >= shape_.size()) {
      throw DimensionError("axis " + std::to_string(axis) +
                           " out of range for " + shape_string(shape_));
    }
    return shape_[axis];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // 4-D accessors (batch, channel, row, column).
  std::size_t index4(std::size_t n, std::size_t c, std::size_t y,
                     std::size_t x) const {
    return ((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
  }
  T& at4(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[index4(n, c, y, x)];
  }
  const T& at4(std::size_t n, std::size_t c, std::size_t y,
               std::size_t x) const {
    return data_[index4(n, c, y, x)];
  }

  // 2-D accessors (row, column).
  T& at2(std::size_t y, std::size_t x) { return data_[y * shape_[1] + x]; }
  const T& at2(std::size_t y, std::size_t x) const {
    return data_[y * shape_[1] + x];
  }

  // 3-D accessors (channel, row, column).
  T& at3(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  const T& at3(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  // Neumaier-compensated sum; effectively correctly rounded for the value
  // ranges occurring in density maps.
  T sum() const {
    double s = 0.0, comp = 0.0;
    for (const T& v : data_) {
      const double x = static_cast<double>(v);
      const double t = s + x;
      if (std::fabs(s) >= std::fabs(x)) {
        comp += (s - t) + x;
      } else {
        comp += (x - t) + s;
      }
      s = t;
    }
    return static_cast<T>(s + comp);
  }

  T max_value() const {
    T m = data_.empty() ? T{} : data_[0];
    for (const T& v : data_) m = std::max(m, v);
    return m;
  }

  T min_value() const {
    T m = data_.empty() ? T{} : data_[0];
    for (const T& v : data_) m = std::min(m, v);
    return m;
  }

  bool all_finite() const {
    for (const T& v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      out[i] = static_cast<U>(data_[i]);
    }
    return out;
  }

  static std::string shape_string(const std::vector<std::size_t>& shape) {
    if (shape.empty()) return "()";
    std::string s;
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s;
  }

  std::string shape_string() const { return shape_string(shape_); }

 private:
  static std::size_t checked_numel(const std::vector<std::size_t>& shape) {
    if (shape.empty()) {
      throw DimensionError("tensor shape must have at least one extent");
    }
    std::size_t n = 1;
    for (std::size_t e : shape) {
      if (e < 1) {
        throw DimensionError("tensor extents must be >= 1, got " +
                             shape_string(shape));
      }
      n *= e;
    }
    return n;
  }

  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<double>;
using TensorF = TensorT<float>;

// Debug-build guard: forward/backward ops assert their outputs stay finite.
#ifndef NDEBUG
template <typename T>
inline void debug_check_finite(const TensorT<T>& t, const char* where) {
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + where);
  }
}
#else
template <typename T>
inline void debug_check_finite(const TensorT<T>&, const char*) {}
#endif

// Plain-text dump of a 2-D map (or one (n, c) slice of a 4-D tensor) for
// inspection.
template <typename T>
inline void dump_text_grid(std::ostream& os, const TensorT<T>& t,
                           std::size_t n = 0, std::size_t c = 0) {
  std::size_t h = 0, w = 0;
  const T* base = nullptr;
  if (t.rank() == 2) {
    h = t.extent(0);
    w = t.extent(1);
    base = t.data();
  } else if (t.rank() == 4) {
    h = t.extent(2);
    w = t.extent(3);
    base = t.data() + (n * t.extent(1) + c) * h * w;
  } else {
    throw DimensionError("dump_text_grid expects a 2-D or 4-D tensor, got " +
                         t.shape_string());
  }
  os << "grid " << h << " " << w << "\n";
  std::ostringstream line;
  for (std::size_t y = 0; y < h; ++y) {
    line.str("");
    for (std::size_t x = 0; x < w; ++x) {
      if (x) line << " ";
      line << static_cast<double>(base[y * w + x]);
    }
    os << line.str() << "\n";
  }
}

}  // namespace lcdnet
