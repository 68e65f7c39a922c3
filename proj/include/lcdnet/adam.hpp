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

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lcdnet/errors.hpp"
#include "lcdnet/tensor.hpp"

namespace lcdnet {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed list of parameter tensors. Moment tensors
// match the parameter shapes exactly; step increases by one per update.
class AdamState {
 public:
  AdamState(const std::vector<const Tensor*>& params, AdamConfig config = {})
      : config_(config) {
    first_moment_.reserve(params.size());
    second_moment_.reserve(params.size());
    for (const Tensor* p : params) {
      first_moment_.emplace_back(p->shape());
      second_moment_.emplace_back(p->shape());
    }
  }

  std::size_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }
  const Tensor& first_moment(std::size_t i) const { return first_moment_[i]; }
  const Tensor& second_moment(std::size_t i) const { return second_moment_[i]; }

  friend void adam_step(std::vector<Tensor*>& params,
                        const std::vector<const Tensor*>& grads,
                        AdamState& state,
                        const std::vector<std::string>& names);

 private:
  AdamConfig config_;
  std::size_t step_ = 0;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
};

// In-place update of params from grads. `names` (optional, may be empty) is
// used only to identify the offending tensor when a gradient is non-finite.
inline void adam_step(std::vector<Tensor*>& params,
                      const std::vector<const Tensor*>& grads,
                      AdamState& state,
                      const std::vector<std::string>& names = {}) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment_.size()) {
    throw DimensionError("adam_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i]) ||
        !params[i]->same_shape(state.first_moment_[i])) {
      throw DimensionError("adam_step: shape mismatch at parameter " +
                           std::to_string(i));
    }
    if (!grads[i]->all_finite()) {
      const std::string which =
          i < names.size() ? names[i] : ("parameter " + std::to_string(i));
      throw NumericError("non-finite gradient for " + which);
    }
  }

  state.step_ += 1;
  const double b1 = state.config_.beta1, b2 = state.config_.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step_));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step_));
  const double lr = state.config_.lr, eps = state.config_.epsilon;

  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i]->data();
    const double* g = grads[i]->data();
    double* m = state.first_moment_[i].data();
    double* v = state.second_moment_[i].data();
    const std::size_t n = params[i]->numel();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = m[j] / corr1;
      const double vhat = v[j] / corr2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace lcdnet
