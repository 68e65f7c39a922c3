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

#include <cstddef>
#include <utility>
#include <vector>

#include "lcdnet/errors.hpp"
#include "lcdnet/tensor.hpp"

namespace lcdnet {

template <typename T>
TensorT<T> relu(const TensorT<T>& input) {
  TensorT<T> out(input.shape());
  const T* in = input.data();
  T* o = out.data();
  for (std::size_t i = 0; i < input.numel(); ++i) {
    o[i] = in[i] > T(0) ? in[i] : T(0);
  }
  return out;
}

// Subgradient 0 at exactly 0.
template <typename T>
TensorT<T> relu_backward(const TensorT<T>& grad_out,
                         const TensorT<T>& saved_input) {
  if (!grad_out.same_shape(saved_input)) {
    throw DimensionError("relu backward shape mismatch: " +
                         grad_out.shape_string() + " vs " +
                         saved_input.shape_string());
  }
  TensorT<T> out(grad_out.shape());
  for (std::size_t i = 0; i < grad_out.numel(); ++i) {
    out[i] = saved_input[i] > T(0) ? grad_out[i] : T(0);
  }
  return out;
}

template <typename T>
struct MaxPoolResult {
  TensorT<T> output;
  // Flat index into the input tensor of each window's maximum; routes the
  // backward gradient.
  std::vector<std::size_t> argmax;
};

// 2x2 max pooling with stride 2 over NCHW. Odd spatial extents are handled
// by replicating the last row/column, so the output is ceil(H/2) x ceil(W/2).
template <typename T>
MaxPoolResult<T> maxpool2x2(const TensorT<T>& input) {
  if (input.rank() != 4) {
    throw DimensionError("maxpool2x2 input must be 4-D, got " +
                         input.shape_string());
  }
  const std::size_t batch = input.extent(0), ch = input.extent(1);
  const std::size_t h = input.extent(2), w = input.extent(3);
  const std::size_t oh = (h + 1) / 2, ow = (w + 1) / 2;

  MaxPoolResult<T> res;
  res.output = TensorT<T>({batch, ch, oh, ow});
  res.argmax.assign(res.output.numel(), 0);
  const T* in = input.data();
  T* out = res.output.data();

  std::size_t oi = 0;
  for (std::size_t p = 0; p < batch * ch; ++p) {
    const T* plane = in + p * h * w;
    const std::size_t plane_off = p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const std::size_t y0 = 2 * oy;
      const std::size_t y1 = y0 + 1 < h ? y0 + 1 : h - 1;  // replicate
      for (std::size_t ox = 0; ox < ow; ++ox, ++oi) {
        const std::size_t x0 = 2 * ox;
        const std::size_t x1 = x0 + 1 < w ? x0 + 1 : w - 1;
        std::size_t best = y0 * w + x0;
        T bv = plane[best];
        const std::size_t cand[3] = {y0 * w + x1, y1 * w + x0, y1 * w + x1};
        for (std::size_t c : cand) {
          if (plane[c] > bv) {  // ties keep the earliest window position
            bv = plane[c];
            best = c;
          }
        }
        out[oi] = bv;
        res.argmax[oi] = plane_off + best;
      }
    }
  }
  return res;
}

template <typename T>
TensorT<T> maxpool2x2_backward(const TensorT<T>& grad_out,
                               const std::vector<std::size_t>& argmax,
                               const std::vector<std::size_t>& input_shape) {
  if (grad_out.numel() != argmax.size()) {
    throw DimensionError("maxpool backward grad/argmax size mismatch");
  }
  TensorT<T> grad_in(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    grad_in[argmax[i]] += grad_out[i];
  }
  return grad_in;
}

// Channel concatenation of two NCHW tensors agreeing on batch/H/W. Layout is
// a's channels followed by b's channels, per batch element.
template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rank() != 4 || b.rank() != 4) {
    throw DimensionError("concat_channels expects 4-D tensors");
  }
  if (a.extent(0) != b.extent(0) || a.extent(2) != b.extent(2) ||
      a.extent(3) != b.extent(3)) {
    throw DimensionError("concat_channels spatial/batch mismatch: " +
                         a.shape_string() + " vs " + b.shape_string());
  }
  const std::size_t batch = a.extent(0);
  const std::size_t ca = a.extent(1), cb = b.extent(1);
  const std::size_t plane = a.extent(2) * a.extent(3);
  TensorT<T> out({batch, ca + cb, a.extent(2), a.extent(3)});
  for (std::size_t n = 0; n < batch; ++n) {
    T* dst = out.data() + n * (ca + cb) * plane;
    const T* sa = a.data() + n * ca * plane;
    const T* sb = b.data() + n * cb * plane;
    std::copy(sa, sa + ca * plane, dst);
    std::copy(sb, sb + cb * plane, dst + ca * plane);
  }
  return out;
}

// Splits the gradient back into the two inputs; every element of grad_out is
// routed to exactly one side.
template <typename T>
std::pair<TensorT<T>, TensorT<T>> concat_channels_backward(
    const TensorT<T>& grad_out, std::size_t channels_a,
    std::size_t channels_b) {
  if (grad_out.rank() != 4 ||
      grad_out.extent(1) != channels_a + channels_b) {
    throw DimensionError("concat backward channel mismatch: " +
                         grad_out.shape_string() + " vs " +
                         std::to_string(channels_a) + "+" +
                         std::to_string(channels_b));
  }
  const std::size_t batch = grad_out.extent(0);
  const std::size_t h = grad_out.extent(2), w = grad_out.extent(3);
  const std::size_t plane = h * w;
  TensorT<T> ga({batch, channels_a, h, w});
  TensorT<T> gb({batch, channels_b, h, w});
  for (std::size_t n = 0; n < batch; ++n) {
    const T* src = grad_out.data() + n * (channels_a + channels_b) * plane;
    std::copy(src, src + channels_a * plane, ga.data() + n * channels_a * plane);
    std::copy(src + channels_a * plane, src + (channels_a + channels_b) * plane,
              gb.data() + n * channels_b * plane);
  }
  return {std::move(ga), std::move(gb)};
}

}  // namespace lcdnet
