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
#include <string>

#include "lcdnet/errors.hpp"
#include "lcdnet/tensor.hpp"

namespace lcdnet {

struct Padding {
  std::size_t top = 0;
  std::size_t bottom = 0;
  std::size_t left = 0;
  std::size_t right = 0;

  // "same" padding: floor(k/2) on each side per dimension.
  static Padding same(std::size_t kernel_h, std::size_t kernel_w) {
    return Padding{kernel_h / 2, kernel_h / 2, kernel_w / 2, kernel_w / 2};
  }
};

struct ConvSpec {
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  Padding padding;
  bool bias = true;

  static ConvSpec same_padded(std::size_t out_channels, std::size_t kernel_h,
                              std::size_t kernel_w) {
    ConvSpec s;
    s.out_channels = out_channels;
    s.kernel_h = kernel_h;
    s.kernel_w = kernel_w;
    s.padding = Padding::same(kernel_h, kernel_w);
    return s;
  }

  void validate() const {
    if (kernel_h < 1 || kernel_w < 1) {
      throw ConfigError("conv kernel extents must be >= 1");
    }
    if (stride < 1) throw ConfigError("conv stride must be >= 1");
    if (out_channels < 1) throw ConfigError("conv out_channels must be >= 1");
  }
};

namespace detail {

// Range [lo, hi) of output positions o for which the input coordinate
// o*stride + k - pad lands inside [0, in_extent).
inline void clipped_out_range(std::ptrdiff_t pad, std::ptrdiff_t k,
                              std::ptrdiff_t in_extent, std::ptrdiff_t stride,
                              std::ptrdiff_t out_extent, std::ptrdiff_t& lo,
                              std::ptrdiff_t& hi) {
  const std::ptrdiff_t num = pad - k;
  lo = num > 0 ? (num + stride - 1) / stride : 0;
  const std::ptrdiff_t top = in_extent - 1 + pad - k;
  hi = top < 0 ? 0 : top / stride + 1;
  if (lo < 0) lo = 0;
  if (hi > out_extent) hi = out_extent;
  if (hi < lo) hi = lo;
}

template <typename T>
inline void check_conv_shapes(const TensorT<T>& input,
                              const TensorT<T>& weights,
                              const TensorT<T>* bias, const ConvSpec& spec) {
  spec.validate();
  if (input.rank() != 4) {
    throw DimensionError("conv input must be 4-D (NCHW), got " +
                         input.shape_string());
  }
  if (weights.rank() != 4) {
    throw DimensionError("conv weights must be 4-D (OC,IC,KH,KW), got " +
                         weights.shape_string());
  }
  if (weights.extent(0) != spec.out_channels ||
      weights.extent(1) != input.extent(1) ||
      weights.extent(2) != spec.kernel_h ||
      weights.extent(3) != spec.kernel_w) {
    throw DimensionError(
        "conv weights " + weights.shape_string() + " inconsistent with input " +
        input.shape_string() + " and spec (oc=" +
        std::to_string(spec.out_channels) + ", k=" +
        std::to_string(spec.kernel_h) + "x" + std::to_string(spec.kernel_w) +
        ")");
  }
  if (spec.bias) {
    if (bias == nullptr) {
      throw DimensionError("conv spec requires a bias tensor, none given");
    }
    if (bias->rank() != 1 || bias->extent(0) != spec.out_channels) {
      throw DimensionError("conv bias must be 1-D of size " +
                           std::to_string(spec.out_channels) + ", got " +
                           bias->shape_string());
    }
  } else if (bias != nullptr) {
    throw DimensionError("conv spec has bias disabled but a bias was given");
  }
}

}  // namespace detail

// Output spatial extents for a given input; throws ConfigError when a
// dimension collapses to zero.
inline std::pair<std::size_t, std::size_t> conv2d_output_extents(
    std::size_t in_h, std::size_t in_w, const ConvSpec& spec) {
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(in_h) + spec.padding.top +
                           spec.padding.bottom -
                           static_cast<std::ptrdiff_t>(spec.kernel_h);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(in_w) +
                           spec.padding.left + spec.padding.right -
                           static_cast<std::ptrdiff_t>(spec.kernel_w);
  if (h < 0 || w < 0) {
    throw ConfigError("conv output extent is empty for input " +
                      std::to_string(in_h) + "x" + std::to_string(in_w) +
                      " with kernel " + std::to_string(spec.kernel_h) + "x" +
                      std::to_string(spec.kernel_w));
  }
  return {static_cast<std::size_t>(h) / spec.stride + 1,
          static_cast<std::size_t>(w) / spec.stride + 1};
}

// Cross-correlation (CNN convention, no kernel flip) over NCHW input.
template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const TensorT<T>& weights,
                          const TensorT<T>* bias, const ConvSpec& spec) {
  detail::check_conv_shapes(input, weights, bias, spec);
  const std::size_t batch = input.extent(0), in_ch = input.extent(1);
  const std::size_t in_h = input.extent(2), in_w = input.extent(3);
  const auto [out_h, out_w] = conv2d_output_extents(in_h, in_w, spec);
  const std::size_t out_ch = spec.out_channels;
  const std::size_t kh = spec.kernel_h, kw = spec.kernel_w;
  const std::ptrdiff_t stride = static_cast<std::ptrdiff_t>(spec.stride);
  const std::ptrdiff_t pt = spec.padding.top, pl = spec.padding.left;

  TensorT<T> out({batch, out_ch, out_h, out_w});
  const T* in_base = input.data();
  const T* w_base = weights.data();
  T* out_base = out.data();

  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t oc = 0; oc < out_ch; ++oc) {
      T* out_plane = out_base + (n * out_ch + oc) * out_h * out_w;
      const T init = spec.bias ? (*bias)[oc] : T(0);
      for (std::size_t i = 0; i < out_h * out_w; ++i) out_plane[i] = init;
      for (std::size_t ic = 0; ic < in_ch; ++ic) {
        const T* in_plane = in_base + (n * in_ch + ic) * in_h * in_w;
        const T* w_plane = w_base + (oc * in_ch + ic) * kh * kw;
        for (std::size_t ky = 0; ky < kh; ++ky) {
          std::ptrdiff_t oy_lo, oy_hi;
          detail::clipped_out_range(pt, ky, in_h, stride, out_h, oy_lo, oy_hi);
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const T w = w_plane[ky * kw + kx];
            std::ptrdiff_t ox_lo, ox_hi;
            detail::clipped_out_range(pl, kx, in_w, stride, out_w, ox_lo,
                                      ox_hi);
            const std::ptrdiff_t x_off = static_cast<std::ptrdiff_t>(kx) - pl;
            for (std::ptrdiff_t oy = oy_lo; oy < oy_hi; ++oy) {
              const std::ptrdiff_t iy = oy * stride + ky - pt;
              const T* in_row = in_plane + iy * in_w;
              T* out_row = out_plane + oy * out_w;
              if (stride == 1) {
                const T* in_shift = in_row + x_off;
                for (std::ptrdiff_t ox = ox_lo; ox < ox_hi; ++ox) {
                  out_row[ox] += w * in_shift[ox];
                }
              } else {
                for (std::ptrdiff_t ox = ox_lo; ox < ox_hi; ++ox) {
                  out_row[ox] += w * in_row[ox * stride + x_off];
                }
              }
            }
          }
        }
      }
    }
  }
  debug_check_finite(out, "conv2d_forward");
  return out;
}

template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const TensorT<T>& weights,
                          std::nullptr_t, const ConvSpec& spec) {
  return conv2d_forward(input, weights,
                        static_cast<const TensorT<T>*>(nullptr), spec);
}

template <typename T>
struct Conv2dGrads {
  TensorT<T> grad_input;    // empty when skipped
  TensorT<T> grad_weights;
  TensorT<T> grad_bias;     // empty when the layer has no bias
};

// Exact gradients of conv2d_forward. grad_input computation can be skipped
// for the first layer of a network (its input needs no gradient).
template <typename T>
Conv2dGrads<T> conv2d_backward(const TensorT<T>& grad_out,
                               const TensorT<T>& saved_input,
                               const TensorT<T>& weights, const ConvSpec& spec,
                               bool compute_grad_input = true) {
  ConvSpec no_bias_spec = spec;
  no_bias_spec.bias = false;
  detail::check_conv_shapes(saved_input, weights,
                            static_cast<const TensorT<T>*>(nullptr),
                            no_bias_spec);
  const std::size_t batch = saved_input.extent(0);
  const std::size_t in_ch = saved_input.extent(1);
  const std::size_t in_h = saved_input.extent(2), in_w = saved_input.extent(3);
  const auto [out_h, out_w] = conv2d_output_extents(in_h, in_w, spec);
  const std::size_t out_ch = spec.out_channels;
  if (grad_out.rank() != 4 || grad_out.extent(0) != batch ||
      grad_out.extent(1) != out_ch || grad_out.extent(2) != out_h ||
      grad_out.extent(3) != out_w) {
    throw DimensionError("conv grad_out " + grad_out.shape_string() +
                         " does not match forward output " +
                         TensorT<T>::shape_string({batch, out_ch, out_h, out_w}));
  }

  const std::size_t kh = spec.kernel_h, kw = spec.kernel_w;
  const std::ptrdiff_t stride = static_cast<std::ptrdiff_t>(spec.stride);
  const std::ptrdiff_t pt = spec.padding.top, pl = spec.padding.left;

  Conv2dGrads<T> grads;
  grads.grad_weights = TensorT<T>({out_ch, in_ch, kh, kw});
  if (spec.bias) grads.grad_bias = TensorT<T>({out_ch});
  if (compute_grad_input) {
    grads.grad_input = TensorT<T>({batch, in_ch, in_h, in_w});
  }

  const T* go_base = grad_out.data();
  const T* in_base = saved_input.data();
  const T* w_base = weights.data();

  if (spec.bias) {
    for (std::size_t oc = 0; oc < out_ch; ++oc) {
      T acc = 0;
      for (std::size_t n = 0; n < batch; ++n) {
        const T* go_plane = go_base + (n * out_ch + oc) * out_h * out_w;
        for (std::size_t i = 0; i < out_h * out_w; ++i) acc += go_plane[i];
      }
      grads.grad_bias[oc] = acc;
    }
  }

  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t oc = 0; oc < out_ch; ++oc) {
      const T* go_plane = go_base + (n * out_ch + oc) * out_h * out_w;
      for (std::size_t ic = 0; ic < in_ch; ++ic) {
        const T* in_plane = in_base + (n * in_ch + ic) * in_h * in_w;
        const T* w_plane = w_base + (oc * in_ch + ic) * kh * kw;
        T* gw_plane = grads.grad_weights.data() + (oc * in_ch + ic) * kh * kw;
        T* gi_plane = compute_grad_input
                          ? grads.grad_input.data() + (n * in_ch + ic) * in_h * in_w
                          : nullptr;
        for (std::size_t ky = 0; ky < kh; ++ky) {
          std::ptrdiff_t oy_lo, oy_hi;
          detail::clipped_out_range(pt, ky, in_h, stride, out_h, oy_lo, oy_hi);
          for (std::size_t kx = 0; kx < kw; ++kx) {
            std::ptrdiff_t ox_lo, ox_hi;
            detail::clipped_out_range(pl, kx, in_w, stride, out_w, ox_lo,
                                      ox_hi);
            const std::ptrdiff_t x_off = static_cast<std::ptrdiff_t>(kx) - pl;
            const T w = w_plane[ky * kw + kx];
            T gw_acc = 0;
            for (std::ptrdiff_t oy = oy_lo; oy < oy_hi; ++oy) {
              const std::ptrdiff_t iy = oy * stride + ky - pt;
              const T* go_row = go_plane + oy * out_w;
              const T* in_row = in_plane + iy * in_w;
              if (stride == 1) {
                const T* in_shift = in_row + x_off;
                for (std::ptrdiff_t ox = ox_lo; ox < ox_hi; ++ox) {
                  gw_acc += go_row[ox] * in_shift[ox];
                }
                if (gi_plane != nullptr) {
                  T* gi_shift = gi_plane + iy * in_w + x_off;
                  for (std::ptrdiff_t ox = ox_lo; ox < ox_hi; ++ox) {
                    gi_shift[ox] += w * go_row[ox];
                  }
                }
              } else {
                for (std::ptrdiff_t ox = ox_lo; ox < ox_hi; ++ox) {
                  gw_acc += go_row[ox] * in_row[ox * stride + x_off];
                }
                if (gi_plane != nullptr) {
                  T* gi_row = gi_plane + iy * in_w;
                  for (std::ptrdiff_t ox = ox_lo; ox < ox_hi; ++ox) {
                    gi_row[ox * stride + x_off] += w * go_row[ox];
                  }
                }
              }
            }
            gw_plane[ky * kw + kx] += gw_acc;
          }
        }
      }
    }
  }
  debug_check_finite(grads.grad_weights, "conv2d_backward");
  return grads;
}

}  // namespace lcdnet
