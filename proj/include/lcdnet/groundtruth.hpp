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
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lcdnet/errors.hpp"
#include "lcdnet/tensor.hpp"

namespace lcdnet {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Per-image dot annotations (head/car centers) in pixel coordinates.
struct DotMap {
  std::size_t image_w = 0;
  std::size_t image_h = 0;
  std::vector<Point> points;
  std::optional<double> altitude_m;
  std::string source_id;

  std::size_t count() const { return points.size(); }

  void validate() const {
    if (image_w == 0 || image_h == 0) {
      throw DataError("dotmap " + source_id + " has empty image dimensions");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Point& p = points[i];
      if (!(p.x >= 0.0 && p.x < static_cast<double>(image_w)) ||
          !(p.y >= 0.0 && p.y < static_cast<double>(image_h))) {
        throw DataError("dotmap " + source_id + ": point " +
                        std::to_string(i) + " (" + std::to_string(p.x) + "," +
                        std::to_string(p.y) + ") outside " +
                        std::to_string(image_w) + "x" +
                        std::to_string(image_h));
      }
    }
  }
};

struct AltitudeBand {
  double min_alt = 0.0;  // inclusive
  double max_alt = 0.0;  // exclusive
  double sigma = 0.0;
};

// Kernel-scale strategy for ground-truth rendering.
struct DensityConfig {
  enum class Mode { Fixed, AltitudeGrouped, AdaptiveKnn };

  Mode mode = Mode::Fixed;
  double sigma = 2.0;                      // Fixed mode
  std::vector<AltitudeBand> bands;         // AltitudeGrouped mode
  std::size_t knn_k = 3;                   // AdaptiveKnn mode
  double knn_beta = 1.0;
  double fallback_sigma = 2.0;             // AdaptiveKnn with a single point
  double truncation_radius_sigmas = 4.0;
  bool renormalize = true;

  void validate() const {
    switch (mode) {
      case Mode::Fixed:
        if (!(sigma > 0.0)) throw ConfigError("density sigma must be > 0");
        break;
      case Mode::AltitudeGrouped: {
        if (bands.empty()) {
          throw ConfigError("altitude-grouped density needs at least one band");
        }
        for (const auto& b : bands) {
          if (!(b.sigma > 0.0)) {
            throw ConfigError("altitude band sigma must be > 0");
          }
          if (!(b.min_alt < b.max_alt)) {
            throw ConfigError("altitude band range must satisfy min < max");
          }
        }
        for (std::size_t i = 0; i < bands.size(); ++i) {
          for (std::size_t j = i + 1; j < bands.size(); ++j) {
            if (bands[i].min_alt < bands[j].max_alt &&
                bands[j].min_alt < bands[i].max_alt) {
              throw ConfigError("altitude bands overlap");
            }
          }
        }
        break;
      }
      case Mode::AdaptiveKnn:
        if (knn_k < 1) throw ConfigError("adaptive density k must be >= 1");
        if (!(knn_beta > 0.0)) throw ConfigError("adaptive beta must be > 0");
        if (!(fallback_sigma > 0.0)) {
          throw ConfigError("adaptive fallback sigma must be > 0");
        }
        break;
    }
    if (!(truncation_radius_sigmas > 0.0)) {
      throw ConfigError("truncation radius must be > 0 sigmas");
    }
  }
};

// Kernel scale for one annotated point. AdaptiveKnn: beta times the mean
// Euclidean distance to the k nearest other points (k capped at N-1); a
// single-point map falls back to fallback_sigma with a warning.
inline double resolve_sigma(const DotMap& dots, std::size_t point_index,
                            const DensityConfig& config) {
  config.validate();
  if (point_index >= dots.points.size()) {
    throw RangeError("resolve_sigma: point index out of range");
  }
  switch (config.mode) {
    case DensityConfig::Mode::Fixed:
      return config.sigma;
    case DensityConfig::Mode::AltitudeGrouped: {
      if (!dots.altitude_m.has_value()) {
        throw ConfigError("dotmap " + dots.source_id +
                          " has no altitude but density mode is "
                          "altitude-grouped");
      }
      const double alt = *dots.altitude_m;
      for (const auto& b : config.bands) {
        if (alt >= b.min_alt && alt < b.max_alt) return b.sigma;
      }
      throw ConfigError("altitude " + std::to_string(alt) + " of " +
                        dots.source_id + " falls outside all configured bands");
    }
    case DensityConfig::Mode::AdaptiveKnn: {
      const std::size_t n = dots.points.size();
      if (n < 2) {
        std::cerr << "warning: adaptive sigma with a single point in "
                  << dots.source_id << "; using fallback sigma "
                  << config.fallback_sigma << "\n";
        return config.fallback_sigma;
      }
      const Point& p = dots.points[point_index];
      std::vector<double> dist;
      dist.reserve(n - 1);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == point_index) continue;
        const double dx = dots.points[j].x - p.x;
        const double dy = dots.points[j].y - p.y;
        dist.push_back(std::sqrt(dx * dx + dy * dy));
      }
      const std::size_t k = std::min(config.knn_k, dist.size());
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      double mean = 0.0;
      for (std::size_t i = 0; i < k; ++i) mean += dist[i];
      mean /= static_cast<double>(k);
      return config.knn_beta * mean;
    }
  }
  throw ConfigError("unknown density mode");
}

// Ground-truth density map at full image resolution: one Gaussian stamp per
// point, truncated at truncation_radius_sigmas * sigma. Stamps are evaluated
// at pixel centers (pixel (px, py) has center (px + 0.5, py + 0.5)). With
// renormalize on, each stamp's in-image mass is exactly 1 so the map total
// equals the point count; with it off, stamps are normalized over the full
// truncated window, so border-clipped stamps lose mass.
inline Tensor render_density(const DotMap& dots, const DensityConfig& config) {
  config.validate();
  dots.validate();
  const std::size_t h = dots.image_h, w = dots.image_w;
  Tensor map({h, w});

  for (std::size_t i = 0; i < dots.points.size(); ++i) {
    const double sigma = resolve_sigma(dots, i, config);
    const double radius = config.truncation_radius_sigmas * sigma;
    const double cx = dots.points[i].x, cy = dots.points[i].y;
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    const double r2 = radius * radius;

    const std::ptrdiff_t x_lo = static_cast<std::ptrdiff_t>(
        std::floor(cx - radius - 0.5));
    const std::ptrdiff_t x_hi = static_cast<std::ptrdiff_t>(
        std::ceil(cx + radius - 0.5));
    const std::ptrdiff_t y_lo = static_cast<std::ptrdiff_t>(
        std::floor(cy - radius - 0.5));
    const std::ptrdiff_t y_hi = static_cast<std::ptrdiff_t>(
        std::ceil(cy + radius - 0.5));

    double full_mass = 0.0, in_mass = 0.0;
    for (std::ptrdiff_t py = y_lo; py <= y_hi; ++py) {
      const double dy = (static_cast<double>(py) + 0.5) - cy;
      for (std::ptrdiff_t px = x_lo; px <= x_hi; ++px) {
        const double dx = (static_cast<double>(px) + 0.5) - cx;
        const double d2 = dx * dx + dy * dy;
        if (d2 > r2) continue;
        const double g = std::exp(-d2 * inv2s2);
        full_mass += g;
        if (py >= 0 && py < static_cast<std::ptrdiff_t>(h) && px >= 0 &&
            px < static_cast<std::ptrdiff_t>(w)) {
          in_mass += g;
        }
      }
    }
    const double norm = config.renormalize ? in_mass : full_mass;
    if (!(norm > 0.0)) continue;  // stamp entirely outside the image

    for (std::ptrdiff_t py = std::max<std::ptrdiff_t>(y_lo, 0);
         py <= std::min<std::ptrdiff_t>(y_hi, h - 1); ++py) {
      const double dy = (static_cast<double>(py) + 0.5) - cy;
      double* row = map.data() + py * w;
      for (std::ptrdiff_t px = std::max<std::ptrdiff_t>(x_lo, 0);
           px <= std::min<std::ptrdiff_t>(x_hi, w - 1); ++px) {
        const double dx = (static_cast<double>(px) + 0.5) - cx;
        const double d2 = dx * dx + dy * dy;
        if (d2 > r2) continue;
        row[px] += std::exp(-d2 * inv2s2) / norm;
      }
    }
  }
  return map;
}

// Half-resolution training target: 2x2 sum pooling. Each output value is
// (a + b) + (c + d) of its window, so summing the result in window order
// reproduces the input total bit for bit. Odd extents are zero-padded (sum
// pooling must not duplicate mass).
inline Tensor downscale_target(const Tensor& map) {
  if (map.rank() != 2) {
    throw DimensionError("downscale_target expects a 2-D map, got " +
                         map.shape_string());
  }
  const std::size_t h = map.extent(0), w = map.extent(1);
  const std::size_t oh = (h + 1) / 2, ow = (w + 1) / 2;
  Tensor out({oh, ow});
  for (std::size_t oy = 0; oy < oh; ++oy) {
    const std::size_t y0 = 2 * oy, y1 = y0 + 1;
    for (std::size_t ox = 0; ox < ow; ++ox) {
      const std::size_t x0 = 2 * ox, x1 = x0 + 1;
      const double a = map.at2(y0, x0);
      const double b = x1 < w ? map.at2(y0, x1) : 0.0;
      const double c = y1 < h ? map.at2(y1, x0) : 0.0;
      const double d = (x1 < w && y1 < h) ? map.at2(y1, x1) : 0.0;
      out.at2(oy, ox) = (a + b) + (c + d);
    }
  }
  return out;
}

}  // namespace lcdnet
