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
#include <catch2/catch_amalgamated.hpp>

#include "lcdnet/conv.hpp"
#include "lcdnet/rng.hpp"
#include "oracles.hpp"

using lcdnet::ConfigError;
using lcdnet::ConvSpec;
using lcdnet::DimensionError;
using lcdnet::Rng;
using lcdnet::Tensor;

TEST_CASE("all-ones 3x3 kernel on all-ones input, same padding") {
  Tensor input({1, 1, 3, 3}, 1.0);
  Tensor weights({1, 1, 3, 3}, 1.0);
  ConvSpec spec = ConvSpec::same_padded(1, 3, 3);
  spec.bias = false;
  Tensor out = lcdnet::conv2d_forward(input, weights, nullptr, spec);
  REQUIRE(out.shape() == std::vector<std::size_t>{1, 1, 3, 3});
  CHECK(out.at4(0, 0, 1, 1) == 9.0);  // full overlap
  CHECK(out.at4(0, 0, 0, 0) == 4.0);  // corner sees a 2x2 patch
  CHECK(out.at4(0, 0, 2, 2) == 4.0);
  CHECK(out.at4(0, 0, 0, 1) == 6.0);  // edge sees 2x3
}

TEST_CASE("1x1 kernel with unit weight is the identity") {
  Rng rng(7);
  Tensor input = oracle::random_tensor({2, 1, 4, 5}, rng);
  Tensor weights({1, 1, 1, 1}, 1.0);
  Tensor bias({1}, 0.0);
  ConvSpec spec = ConvSpec::same_padded(1, 1, 1);
  Tensor out = lcdnet::conv2d_forward(input, weights, &bias, spec);
  REQUIRE(out.same_shape(input));
  for (std::size_t i = 0; i < out.numel(); ++i) {
    CHECK(out[i] == input[i]);
  }
}

TEST_CASE("rectangular kernels match the direct oracle") {
  Rng rng(11);
  Tensor input = oracle::random_tensor({1, 2, 5, 5}, rng);
  Tensor weights = oracle::random_tensor({2, 2, 1, 3}, rng);
  Tensor bias = oracle::random_tensor({2}, rng);
  ConvSpec spec = ConvSpec::same_padded(2, 1, 3);
  Tensor got = lcdnet::conv2d_forward(input, weights, &bias, spec);
  Tensor want = oracle::conv2d_reference(input, weights, &bias, spec);
  REQUIRE(got.same_shape(want));
  for (std::size_t i = 0; i < got.numel(); ++i) {
    CHECK(got[i] == Catch::Approx(want[i]).margin(1e-12));
  }
}

TEST_CASE("randomized conv configurations match the direct oracle") {
  Rng rng(42);
  const std::size_t kernels[][2] = {{1, 3}, {3, 1}, {3, 3}, {5, 5}, {1, 1}};
  for (int iter = 0; iter < 60; ++iter) {
    const auto& k = kernels[rng.index(5)];
    ConvSpec spec;
    spec.out_channels = 1 + rng.index(3);
    spec.kernel_h = k[0];
    spec.kernel_w = k[1];
    spec.stride = 1 + rng.index(2);
    const bool same = rng.bernoulli(0.5);
    spec.padding = same ? lcdnet::Padding::same(k[0], k[1])
                        : lcdnet::Padding{rng.index(2), rng.index(2),
                                          rng.index(2), rng.index(2)};
    spec.bias = rng.bernoulli(0.5);
    const std::size_t in_ch = 1 + rng.index(3);
    const std::size_t h = spec.kernel_h + rng.index(6);
    const std::size_t w = spec.kernel_w + rng.index(6);
    Tensor input = oracle::random_tensor({1 + rng.index(2), in_ch, h, w}, rng);
    Tensor weights = oracle::random_tensor(
        {spec.out_channels, in_ch, spec.kernel_h, spec.kernel_w}, rng);
    Tensor bias = oracle::random_tensor({spec.out_channels}, rng);
    const Tensor* bp = spec.bias ? &bias : nullptr;

    Tensor got = lcdnet::conv2d_forward(input, weights, bp, spec);
    Tensor want = oracle::conv2d_reference(input, weights, bp, spec);
    REQUIRE(got.same_shape(want));
    double worst = 0.0;
    for (std::size_t i = 0; i < got.numel(); ++i) {
      worst = std::max(worst, std::fabs(got[i] - want[i]));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("conv shape errors are descriptive") {
  Tensor input({1, 2, 4, 4});
  Tensor weights({1, 3, 3, 3});  // wrong in_channels
  ConvSpec spec = ConvSpec::same_padded(1, 3, 3);
  spec.bias = false;
  CHECK_THROWS_AS(lcdnet::conv2d_forward(input, weights, nullptr, spec),
                  DimensionError);

  // Kernel larger than padded input collapses the output.
  Tensor tiny({1, 1, 2, 2});
  Tensor big_w({1, 1, 5, 5});
  ConvSpec big;
  big.out_channels = 1;
  big.kernel_h = big.kernel_w = 5;
  big.bias = false;
  CHECK_THROWS_AS(lcdnet::conv2d_forward(tiny, big_w, nullptr, big),
                  ConfigError);
}

TEST_CASE("conv backward: zero upstream gradient gives zero gradients") {
  Rng rng(3);
  Tensor input = oracle::random_tensor({1, 2, 4, 4}, rng);
  Tensor weights = oracle::random_tensor({2, 2, 3, 1}, rng);
  ConvSpec spec = ConvSpec::same_padded(2, 3, 1);
  Tensor out = lcdnet::conv2d_forward(input, weights, nullptr, [&] {
    ConvSpec s = spec;
    s.bias = false;
    return s;
  }());
  ConvSpec nb = spec;
  nb.bias = false;
  Tensor grad_out(out.shape(), 0.0);
  auto grads = lcdnet::conv2d_backward(grad_out, input, weights, nb);
  for (std::size_t i = 0; i < grads.grad_input.numel(); ++i) {
    CHECK(grads.grad_input[i] == 0.0);
  }
  for (std::size_t i = 0; i < grads.grad_weights.numel(); ++i) {
    CHECK(grads.grad_weights[i] == 0.0);
  }
}

TEST_CASE("conv backward on scalars is the product rule") {
  Tensor input = Tensor::from_data({1, 1, 1, 1}, {3.0});
  Tensor weights = Tensor::from_data({1, 1, 1, 1}, {-2.0});
  ConvSpec spec;
  spec.bias = false;
  Tensor grad_out({1, 1, 1, 1}, 1.0);  // loss = output
  auto grads = lcdnet::conv2d_backward(grad_out, input, weights, spec);
  CHECK(grads.grad_input[0] == -2.0);   // dL/dx = w
  CHECK(grads.grad_weights[0] == 3.0);  // dL/dw = x
}

TEST_CASE("conv backward matches finite differences") {
  Rng rng(19);
  Tensor input = oracle::random_tensor({1, 2, 4, 4}, rng);
  Tensor weights = oracle::random_tensor({2, 2, 3, 1}, rng);
  Tensor bias = oracle::random_tensor({2}, rng);
  ConvSpec spec = ConvSpec::same_padded(2, 3, 1);

  // Scalar loss: weighted sum of outputs (weights fixed by the rng) so the
  // upstream gradient is nontrivial.
  Tensor mix;
  {
    Tensor probe = lcdnet::conv2d_forward(input, weights, &bias, spec);
    mix = oracle::random_tensor(probe.shape(), rng);
  }
  auto loss = [&]() {
    Tensor out = lcdnet::conv2d_forward(input, weights, &bias, spec);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) acc += out[i] * mix[i];
    return acc;
  };
  auto grads = lcdnet::conv2d_backward(mix, input, weights, spec);

  CHECK(oracle::fd_max_rel_error(input, grads.grad_input, loss) < 1e-6);
  CHECK(oracle::fd_max_rel_error(weights, grads.grad_weights, loss) < 1e-6);
  CHECK(oracle::fd_max_rel_error(bias, grads.grad_bias, loss) < 1e-6);
}

TEST_CASE("conv backward FD sweep over kernel shapes") {
  Rng rng(23);
  const std::size_t kernels[][2] = {{1, 3}, {3, 1}, {3, 3}, {1, 1}, {5, 5}};
  for (const auto& k : kernels) {
    ConvSpec spec = ConvSpec::same_padded(2, k[0], k[1]);
    const std::size_t h = std::max<std::size_t>(k[0], 4);
    const std::size_t w = std::max<std::size_t>(k[1], 4);
    Tensor input = oracle::random_tensor({1, 2, h, w}, rng);
    Tensor weights = oracle::random_tensor({2, 2, k[0], k[1]}, rng);
    Tensor bias = oracle::random_tensor({2}, rng);
    Tensor mix;
    {
      Tensor probe = lcdnet::conv2d_forward(input, weights, &bias, spec);
      mix = oracle::random_tensor(probe.shape(), rng);
    }
    auto loss = [&]() {
      Tensor out = lcdnet::conv2d_forward(input, weights, &bias, spec);
      double acc = 0.0;
      for (std::size_t i = 0; i < out.numel(); ++i) acc += out[i] * mix[i];
      return acc;
    };
    auto grads = lcdnet::conv2d_backward(mix, input, weights, spec);
    CHECK(oracle::fd_max_rel_error(input, grads.grad_input, loss) < 1e-6);
    CHECK(oracle::fd_max_rel_error(weights, grads.grad_weights, loss) < 1e-6);
    CHECK(oracle::fd_max_rel_error(bias, grads.grad_bias, loss) < 1e-6);
  }
}
