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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lcdnet/adam.hpp"
#include "lcdnet/conv.hpp"
#include "lcdnet/errors.hpp"
#include "lcdnet/hash.hpp"
#include "lcdnet/nn_ops.hpp"
#include "lcdnet/rng.hpp"
#include "lcdnet/tensor.hpp"

namespace lcdnet {

// The fixed LCDnet graph:
//
//   conv1 (3 -> 64, 5x5) + relu
//   2x2 max pool
//   column A: a1 (64 -> 32, 1x3) + relu, a2 (32 -> 32, 3x1) + relu,
//             a3 (32 -> 64, 3x3) + relu
//   column B: b1 (64 -> 32, 3x1) + relu, b2 (32 -> 32, 1x3) + relu,
//             b3 (32 -> 64, 3x3) + relu        (both columns read the pool)
//   channel concat (A then B -> 128)
//   conv6 (128 -> 1, 1x1), linear output
//
// All convolutions are same-padded with stride 1, so the output density map
// is exactly half the input size in each spatial dimension (even inputs).

struct LayerDef {
  const char* name;
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t kernel_h;
  std::size_t kernel_w;
  bool relu_after;
};

inline constexpr std::size_t kInputChannels = 3;
inline constexpr std::size_t kMinInputExtent = 8;

inline const std::vector<LayerDef>& lcdnet_layers() {
  static const std::vector<LayerDef> defs = {
      {"conv1", 3, 64, 5, 5, true},    {"col_a1", 64, 32, 1, 3, true},
      {"col_a2", 32, 32, 3, 1, true},  {"col_a3", 32, 64, 3, 3, true},
      {"col_b1", 64, 32, 3, 1, true},  {"col_b2", 32, 32, 1, 3, true},
      {"col_b3", 32, 64, 3, 3, true},  {"conv6", 128, 1, 1, 1, false},
  };
  return defs;
}

inline std::string manifest_description() {
  std::string s = "lcdnet/v1 in_ch=3 pool=max2x2-after-conv1 concat=A,B;";
  for (const LayerDef& d : lcdnet_layers()) {
    s += std::string(d.name) + ":" + std::to_string(d.in_channels) + "->" +
         std::to_string(d.out_channels) + ":" + std::to_string(d.kernel_h) +
         "x" + std::to_string(d.kernel_w) + ":same:s1" +
         (d.relu_after ? ":relu;" : ":linear;");
  }
  return s;
}

inline std::uint64_t manifest_hash() {
  static const std::uint64_t h = fnv1a64(manifest_description());
  return h;
}

template <typename T>
struct LayerT {
  std::string name;
  TensorT<T> weights;  // (out_ch, in_ch, kh, kw)
  TensorT<T> bias;     // (out_ch)
  ConvSpec spec;
};

template <typename T>
struct ModelParamsT {
  std::vector<LayerT<T>> layers;  // order matches lcdnet_layers()

  const LayerT<T>& layer(std::size_t i) const { return layers[i]; }
  LayerT<T>& layer(std::size_t i) { return layers[i]; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.numel() + l.bias.numel();
    return n;
  }

  template <typename U>
  ModelParamsT<U> cast() const {
    ModelParamsT<U> out;
    out.layers.reserve(layers.size());
    for (const auto& l : layers) {
      out.layers.push_back({l.name, l.weights.template cast<U>(),
                            l.bias.template cast<U>(), l.spec});
    }
    return out;
  }
};

using ModelParams = ModelParamsT<double>;

// Per-layer gradients, shaped exactly like the parameters.
struct LayerGrad {
  Tensor weights;
  Tensor bias;
};
using ModelGrads = std::vector<LayerGrad>;

inline void validate_params(const ModelParams& params) {
  const auto& defs = lcdnet_layers();
  if (params.layers.size() != defs.size()) {
    throw DimensionError("model has " + std::to_string(params.layers.size()) +
                         " layers, manifest requires " +
                         std::to_string(defs.size()));
  }
  for (std::size_t i = 0; i < defs.size(); ++i) {
    const auto& l = params.layers[i];
    const auto& d = defs[i];
    if (l.name != d.name || l.weights.rank() != 4 ||
        l.weights.extent(0) != d.out_channels ||
        l.weights.extent(1) != d.in_channels ||
        l.weights.extent(2) != d.kernel_h ||
        l.weights.extent(3) != d.kernel_w || l.bias.rank() != 1 ||
        l.bias.extent(0) != d.out_channels) {
      throw DimensionError("layer " + std::to_string(i) + " (" + l.name +
                           ") does not match the architecture manifest");
    }
  }
}

// Weights drawn from a zero-mean Gaussian with standard deviation 0.01 using
// the seeded generator; biases zero. Deterministic for a given seed.
inline ModelParams init_params(std::uint64_t seed) {
  constexpr double kInitStd = 0.01;
  Rng rng(mix_seed(seed, 0x6C63646E6574ull));
  ModelParams params;
  for (const LayerDef& d : lcdnet_layers()) {
    LayerT<double> layer;
    layer.name = d.name;
    layer.spec = ConvSpec::same_padded(d.out_channels, d.kernel_h, d.kernel_w);
    layer.weights =
        Tensor({d.out_channels, d.in_channels, d.kernel_h, d.kernel_w});
    for (std::size_t i = 0; i < layer.weights.numel(); ++i) {
      layer.weights[i] = rng.normal(0.0, kInitStd);
    }
    layer.bias = Tensor({d.out_channels});
    params.layers.push_back(std::move(layer));
  }
  return params;
}

namespace detail {

template <typename T>
void check_image(const TensorT<T>& image) {
  if (image.rank() != 4 || image.extent(1) != kInputChannels) {
    throw DimensionError("model input must be Nx3xHxW, got " +
                         image.shape_string());
  }
  if (image.extent(2) < kMinInputExtent || image.extent(3) < kMinInputExtent) {
    throw ConfigError("model input spatial extents must be >= " +
                      std::to_string(kMinInputExtent) + ", got " +
                      image.shape_string());
  }
}

}  // namespace detail

// Inference-only forward pass; works in float for benchmarking and double
// everywhere else. Output is (batch, 1, ceil(H/2), ceil(W/2)).
template <typename T>
TensorT<T> forward(const ModelParamsT<T>& params, const TensorT<T>& image) {
  detail::check_image(image);
  const auto& L = params.layers;
  TensorT<T> x = relu(conv2d_forward(image, L[0].weights, &L[0].bias, L[0].spec));
  x = maxpool2x2(x).output;
  TensorT<T> a = x, b = x;
  for (std::size_t i = 1; i <= 3; ++i) {
    a = relu(conv2d_forward(a, L[i].weights, &L[i].bias, L[i].spec));
  }
  for (std::size_t i = 4; i <= 6; ++i) {
    b = relu(conv2d_forward(b, L[i].weights, &L[i].bias, L[i].spec));
  }
  TensorT<T> merged = concat_channels(a, b);
  return conv2d_forward(merged, L[7].weights, &L[7].bias, L[7].spec);
}

// Everything the hand-scheduled backward pass needs from the forward pass.
struct ForwardTrace {
  Tensor image;
  Tensor conv1_pre;
  Tensor pooled;                  // relu(conv1) after 2x2 max pool
  std::vector<std::size_t> pool_argmax;
  std::vector<std::size_t> conv1_act_shape;
  // Column activations: pre-activation and post-relu per layer, A then B.
  Tensor col_pre[6];
  Tensor col_act[6];
  Tensor merged;                  // concat of A3/B3 activations
  Tensor output;
};

inline ForwardTrace forward_trace(const ModelParams& params,
                                  const Tensor& image) {
  detail::check_image(image);
  validate_params(params);
  const auto& L = params.layers;
  ForwardTrace t;
  t.image = image;
  t.conv1_pre = conv2d_forward(image, L[0].weights, &L[0].bias, L[0].spec);
  Tensor act1 = relu(t.conv1_pre);
  t.conv1_act_shape = act1.shape();
  auto pooled = maxpool2x2(act1);
  t.pooled = std::move(pooled.output);
  t.pool_argmax = std::move(pooled.argmax);

  Tensor cur = t.pooled;
  for (std::size_t i = 0; i < 3; ++i) {
    t.col_pre[i] =
        conv2d_forward(cur, L[i + 1].weights, &L[i + 1].bias, L[i + 1].spec);
    t.col_act[i] = relu(t.col_pre[i]);
    cur = t.col_act[i];
  }
  cur = t.pooled;
  for (std::size_t i = 3; i < 6; ++i) {
    t.col_pre[i] =
        conv2d_forward(cur, L[i + 1].weights, &L[i + 1].bias, L[i + 1].spec);
    t.col_act[i] = relu(t.col_pre[i]);
    cur = t.col_act[i];
  }
  t.merged = concat_channels(t.col_act[2], t.col_act[5]);
  t.output = conv2d_forward(t.merged, L[7].weights, &L[7].bias, L[7].spec);
  return t;
}

// Gradients of a scalar loss with respect to every parameter, given the loss
// gradient at the model output. The image gradient is not computed.
inline ModelGrads backward(const ModelParams& params, const ForwardTrace& t,
                           const Tensor& grad_output) {
  const auto& L = params.layers;
  ModelGrads grads(L.size());

  auto g6 = conv2d_backward(grad_output, t.merged, L[7].weights, L[7].spec);
  grads[7] = {std::move(g6.grad_weights), std::move(g6.grad_bias)};

  auto [grad_a, grad_b] = concat_channels_backward(
      g6.grad_input, t.col_act[2].extent(1), t.col_act[5].extent(1));

  // Walk one column backwards; returns the gradient at the pooled tensor.
  auto column_backward = [&](Tensor grad, std::size_t first_layer,
                             std::size_t trace_base) -> Tensor {
    for (std::size_t k = 3; k-- > 0;) {
      const std::size_t li = first_layer + k;
      const Tensor& pre = t.col_pre[trace_base + k];
      const Tensor& input =
          k == 0 ? t.pooled : t.col_act[trace_base + k - 1];
      Tensor grad_pre = relu_backward(grad, pre);
      auto g = conv2d_backward(grad_pre, input, L[li].weights, L[li].spec);
      grads[li] = {std::move(g.grad_weights), std::move(g.grad_bias)};
      grad = std::move(g.grad_input);
    }
    return grad;
  };

  Tensor grad_pooled = column_backward(std::move(grad_a), 1, 0);
  {
    Tensor gb = column_backward(std::move(grad_b), 4, 3);
    for (std::size_t i = 0; i < grad_pooled.numel(); ++i) {
      grad_pooled[i] += gb[i];
    }
  }

  Tensor grad_act1 =
      maxpool2x2_backward(grad_pooled, t.pool_argmax, t.conv1_act_shape);
  Tensor grad_conv1 = relu_backward(grad_act1, t.conv1_pre);
  auto g1 = conv2d_backward(grad_conv1, t.image, L[0].weights, L[0].spec,
                            /*compute_grad_input=*/false);
  grads[0] = {std::move(g1.grad_weights), std::move(g1.grad_bias)};
  return grads;
}

// Flat views used by the optimizer and the gradient checker.
inline std::vector<Tensor*> param_tensors(ModelParams& params) {
  std::vector<Tensor*> out;
  for (auto& l : params.layers) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

inline std::vector<const Tensor*> param_tensors(const ModelParams& params) {
  std::vector<const Tensor*> out;
  for (const auto& l : params.layers) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

inline std::vector<std::string> param_names(const ModelParams& params) {
  std::vector<std::string> out;
  for (const auto& l : params.layers) {
    out.push_back(l.name + std::string(".weights"));
    out.push_back(l.name + std::string(".bias"));
  }
  return out;
}

inline std::vector<const Tensor*> grad_tensors(const ModelGrads& grads) {
  std::vector<const Tensor*> out;
  for (const auto& g : grads) {
    out.push_back(&g.weights);
    out.push_back(&g.bias);
  }
  return out;
}

inline std::vector<Tensor> grad_tensor_copies(const ModelGrads& grads) {
  std::vector<Tensor> out;
  for (const auto& g : grads) {
    out.push_back(g.weights);
    out.push_back(g.bias);
  }
  return out;
}

// Rectangle in map pixel coordinates: [x, x+w) x [y, y+h).
struct Region {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;
};

// Sum of a 2-D density map over a region (whole map when absent), i.e. the
// estimated object count there. Compensated summation keeps region counts
// additive over partitions.
inline double count_from_density(const Tensor& map,
                                 std::optional<Region> region = {}) {
  if (map.rank() != 2) {
    throw DimensionError("count_from_density expects a 2-D map, got " +
                         map.shape_string());
  }
  const std::size_t h = map.extent(0), w = map.extent(1);
  Region r = region.value_or(Region{0, 0, w, h});
  if (r.x + r.w > w || r.y + r.h > h) {
    throw RangeError("region (" + std::to_string(r.x) + "," +
                     std::to_string(r.y) + ")+" + std::to_string(r.w) + "x" +
                     std::to_string(r.h) + " exceeds map " +
                     map.shape_string());
  }
  double s = 0.0, comp = 0.0;
  for (std::size_t y = r.y; y < r.y + r.h; ++y) {
    const double* row = map.data() + y * w;
    for (std::size_t x = r.x; x < r.x + r.w; ++x) {
      const double v = row[x];
      const double t = s + v;
      if (std::fabs(s) >= std::fabs(v)) {
        comp += (s - t) + v;
      } else {
        comp += (v - t) + s;
      }
      s = t;
    }
  }
  return s + comp;
}

// One (n, 0) slice of a model output as a 2-D map.
template <typename T>
Tensor density_slice(const TensorT<T>& output, std::size_t n = 0) {
  if (output.rank() != 4 || output.extent(1) != 1) {
    throw DimensionError("density_slice expects an Nx1xHxW tensor, got " +
                         output.shape_string());
  }
  const std::size_t h = output.extent(2), w = output.extent(3);
  Tensor map({h, w});
  const T* src = output.data() + n * h * w;
  for (std::size_t i = 0; i < h * w; ++i) {
    map[i] = static_cast<double>(src[i]);
  }
  return map;
}

struct ComplexityReport {
  std::size_t param_count = 0;
  std::uint64_t mac_count = 0;       // multiply-accumulates for one image
  std::size_t model_bytes = 0;
  std::size_t bytes_per_value = 4;
  std::size_t output_h = 0;
  std::size_t output_w = 0;
};

// Exact parameter/MAC accounting for a single image of the given size.
// mac_count sums out_elems * in_ch * kh * kw over the conv layers;
// model_bytes is param_count * bytes_per_value (4 for the float32
// deployment size, 8 for the double training checkpoint).
inline ComplexityReport complexity_report(const ModelParams& params,
                                          std::size_t input_h,
                                          std::size_t input_w,
                                          std::size_t bytes_per_value = 4) {
  validate_params(params);
  ComplexityReport rep;
  rep.bytes_per_value = bytes_per_value;
  rep.param_count = params.parameter_count();
  rep.model_bytes = rep.param_count * bytes_per_value;

  auto conv_macs = [](const LayerT<double>& l, std::size_t h, std::size_t w) {
    const auto [oh, ow] = conv2d_output_extents(h, w, l.spec);
    const std::uint64_t out_elems =
        static_cast<std::uint64_t>(l.spec.out_channels) * oh * ow;
    return out_elems * l.weights.extent(1) * l.spec.kernel_h * l.spec.kernel_w;
  };

  const auto& L = params.layers;
  rep.mac_count += conv_macs(L[0], input_h, input_w);
  const std::size_t ph = (input_h + 1) / 2, pw = (input_w + 1) / 2;
  for (std::size_t i = 1; i <= 7; ++i) {
    rep.mac_count += conv_macs(L[i], ph, pw);
  }
  rep.output_h = ph;
  rep.output_w = pw;
  return rep;
}

}  // namespace lcdnet
