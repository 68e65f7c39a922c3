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
#include <utility>
#include <vector>

#include "lcdnet/errors.hpp"
#include "lcdnet/rng.hpp"
#include "lcdnet/tensor.hpp"

namespace lcdnet {

struct GradCheckOptions {
  double step = 1e-5;        // central-difference half step
  std::size_t min_coords = 200;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

// Relative error with the denominator floored at 1e-3: small enough that a
// sign flip of any meaningful gradient is flagged, large enough that
// central-difference round-off on near-zero gradients cannot inflate the
// ratio (the noise floor is ~1e-10 for unit-scale losses in 64-bit).
inline double gradcheck_rel_error(double analytic, double numeric) {
  const double denom =
      std::max({1e-3, std::fabs(analytic), std::fabs(numeric)});
  return std::fabs(analytic - numeric) / denom;
}

// Compares analytic gradients against central finite differences of `loss`
// over a random subsample of parameter coordinates (all coordinates when the
// total is at or below min_coords). `loss` must recompute the scalar loss
// from the current parameter values; parameters are restored after probing.
template <typename LossFn>
GradCheckReport grad_check(const std::vector<Tensor*>& params,
                           const std::vector<Tensor>& analytic_grads,
                           LossFn&& loss, GradCheckOptions opt = {}) {
  if (params.size() != analytic_grads.size()) {
    throw DimensionError("grad_check: params/gradients count mismatch");
  }
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  std::size_t total = 0;
  for (const Tensor* p : params) total += p->numel();

  Rng rng(mix_seed(opt.seed, 0x6772616463686bull));
  if (total <= opt.min_coords) {
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t j = 0; j < params[t]->numel(); ++j) {
        coords.emplace_back(t, j);
      }
    }
  } else {
    // Sample without replacement across the flattened coordinate space.
    std::vector<std::size_t> flat(total);
    for (std::size_t i = 0; i < total; ++i) flat[i] = i;
    for (std::size_t i = 0; i < opt.min_coords; ++i) {
      const std::size_t j = i + rng.index(total - i);
      std::swap(flat[i], flat[j]);
    }
    flat.resize(opt.min_coords);
    for (std::size_t f : flat) {
      std::size_t t = 0, rem = f;
      while (rem >= params[t]->numel()) {
        rem -= params[t]->numel();
        ++t;
      }
      coords.emplace_back(t, rem);
    }
  }

  GradCheckReport report;
  report.coords_checked = coords.size();
  for (const auto& [t, j] : coords) {
    double& slot = (*params[t])[j];
    const double saved = slot;
    slot = saved + opt.step;
    const double up = loss();
    slot = saved - opt.step;
    const double down = loss();
    slot = saved;
    const double numeric = (up - down) / (2.0 * opt.step);
    const double analytic = analytic_grads[t][j];
    report.max_rel_error =
        std::max(report.max_rel_error, gradcheck_rel_error(analytic, numeric));
  }
  return report;
}

}  // namespace lcdnet
