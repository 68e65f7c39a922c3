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
#include <algorithm>
#include <cmath>

#include "lcdnet/groundtruth.hpp"
#include "lcdnet/rng.hpp"

using lcdnet::ConfigError;
using lcdnet::DensityConfig;
using lcdnet::DotMap;
using lcdnet::Rng;
using lcdnet::Tensor;

namespace {

DotMap random_dotmap(std::size_t w, std::size_t h, std::size_t n,
                     Rng& rng) {
  DotMap d;
  d.image_w = w;
  d.image_h = h;
  d.source_id = "random";
  for (std::size_t i = 0; i < n; ++i) {
    d.points.push_back({rng.uniform(0.0, static_cast<double>(w) - 1e-9),
                        rng.uniform(0.0, static_cast<double>(h) - 1e-9)});
  }
  return d;
}

}  // namespace

TEST_CASE("fixed sigma applies to every point") {
  Rng rng(1);
  DotMap d = random_dotmap(32, 32, 5, rng);
  DensityConfig cfg;
  cfg.sigma = 3.0;
  for (std::size_t i = 0; i < d.count(); ++i) {
    CHECK(lcdnet::resolve_sigma(d, i, cfg) == 3.0);
  }
}

TEST_CASE("adaptive sigma of two points is their distance") {
  DotMap d;
  d.image_w = d.image_h = 32;
  d.points = {{5.0, 5.0}, {11.0, 13.0}};  // distance 10
  DensityConfig cfg;
  cfg.mode = DensityConfig::Mode::AdaptiveKnn;
  cfg.knn_k = 1;
  cfg.knn_beta = 1.0;
  CHECK(lcdnet::resolve_sigma(d, 0, cfg) == Catch::Approx(10.0));
  CHECK(lcdnet::resolve_sigma(d, 1, cfg) == Catch::Approx(10.0));
}

TEST_CASE("adaptive sigma on a unit square with k=2") {
  DotMap d;
  d.image_w = d.image_h = 16;
  d.points = {{2, 2}, {3, 2}, {2, 3}, {3, 3}};
  DensityConfig cfg;
  cfg.mode = DensityConfig::Mode::AdaptiveKnn;
  cfg.knn_k = 2;
  cfg.knn_beta = 1.0;
  // Brute-force all pairs: the two nearest neighbors of each corner are at
  // distance 1 (the diagonal sqrt(2) is excluded by k=2).
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<double> dist;
    for (std::size_t j = 0; j < 4; ++j) {
      if (i == j) continue;
      const double dx = d.points[i].x - d.points[j].x;
      const double dy = d.points[i].y - d.points[j].y;
      dist.push_back(std::sqrt(dx * dx + dy * dy));
    }
    std::sort(dist.begin(), dist.end());
    const double expected = (dist[0] + dist[1]) / 2.0;
    CHECK(expected == 1.0);
    CHECK(lcdnet::resolve_sigma(d, i, cfg) == Catch::Approx(expected));
  }
}

TEST_CASE("adaptive sigma caps k at N-1 and is permutation invariant") {
  Rng rng(2);
  DotMap d = random_dotmap(64, 64, 6, rng);
  DensityConfig cfg;
  cfg.mode = DensityConfig::Mode::AdaptiveKnn;
  cfg.knn_k = 50;  // capped at 5
  const double s0 = lcdnet::resolve_sigma(d, 0, cfg);

  DotMap shuffled = d;
  std::reverse(shuffled.points.begin(), shuffled.points.end());
  const double s0_again =
      lcdnet::resolve_sigma(shuffled, shuffled.count() - 1, cfg);
  CHECK(s0 == Catch::Approx(s0_again).margin(1e-12));
}

TEST_CASE("adaptive sigma with one point falls back") {
  DotMap d;
  d.image_w = d.image_h = 16;
  d.points = {{8.0, 8.0}};
  DensityConfig cfg;
  cfg.mode = DensityConfig::Mode::AdaptiveKnn;
  cfg.fallback_sigma = 1.5;
  CHECK(lcdnet::resolve_sigma(d, 0, cfg) == 1.5);
}

TEST_CASE("altitude bands pick the matching sigma") {
  DotMap d;
  d.image_w = d.image_h = 16;
  d.points = {{4.0, 4.0}};
  d.altitude_m = 75.0;
  DensityConfig cfg;
  cfg.mode = DensityConfig::Mode::AltitudeGrouped;
  cfg.bands = {{0.0, 50.0, 4.0}, {50.0, 100.0, 2.5}};
  CHECK(lcdnet::resolve_sigma(d, 0, cfg) == 2.5);

  d.altitude_m.reset();
  CHECK_THROWS_AS(lcdnet::resolve_sigma(d, 0, cfg), ConfigError);

  d.altitude_m = 200.0;  // outside all bands
  CHECK_THROWS_AS(lcdnet::resolve_sigma(d, 0, cfg), ConfigError);
}

TEST_CASE("empty dotmap renders an all-zero map") {
  DotMap d;
  d.image_w = 24;
  d.image_h = 16;
  DensityConfig cfg;
  Tensor map = lcdnet::render_density(d, cfg);
  CHECK(map.shape() == std::vector<std::size_t>{16, 24});
  CHECK(map.sum() == 0.0);
}

TEST_CASE("a single interior stamp has unit mass") {
  DotMap d;
  d.image_w = d.image_h = 64;
  d.points = {{31.3, 30.8}};
  DensityConfig cfg;
  cfg.sigma = 3.0;
  Tensor map = lcdnet::render_density(d, cfg);
  CHECK(map.sum() == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("renormalized maps integrate to the point count") {
  Rng rng(3);
  DotMap d = random_dotmap(48, 40, 25, rng);
  DensityConfig cfg;
  cfg.sigma = 2.5;
  Tensor map = lcdnet::render_density(d, cfg);
  CHECK(map.sum() == Catch::Approx(25.0).margin(1e-9));
}

TEST_CASE("without renormalization a corner stamp loses mass") {
  DotMap d;
  d.image_w = d.image_h = 32;
  d.points = {{0.2, 0.4}};
  DensityConfig cfg;
  cfg.sigma = 3.0;
  cfg.renormalize = false;
  Tensor map = lcdnet::render_density(d, cfg);
  CHECK(map.sum() < 0.9);

  cfg.renormalize = true;
  CHECK(lcdnet::render_density(d, cfg).sum() ==
        Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("mass property over random dotmaps") {
  Rng rng(4);
  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t n = rng.index(30);
    DotMap d = random_dotmap(20 + rng.index(40), 20 + rng.index(40), n, rng);
    DensityConfig cfg;
    cfg.sigma = 0.5 + rng.uniform() * 4.0;
    Tensor map = lcdnet::render_density(d, cfg);
    REQUIRE(std::fabs(map.sum() - static_cast<double>(n)) < 1e-9);
  }
}

TEST_CASE("horizontal reflection commutes with rendering") {
  Rng rng(5);
  DotMap d;
  d.image_w = 40;
  d.image_h = 32;
  for (int i = 0; i < 12; ++i) {
    d.points.push_back({rng.uniform(1.0, 39.0), rng.uniform(1.0, 31.0)});
  }
  DensityConfig cfg;
  cfg.sigma = 2.0;
  Tensor map = lcdnet::render_density(d, cfg);

  DotMap flipped = d;
  for (auto& p : flipped.points) {
    p.x = static_cast<double>(d.image_w) - p.x;  // continuous mirror
  }
  Tensor flipped_map = lcdnet::render_density(flipped, cfg);
  double worst = 0.0;
  for (std::size_t y = 0; y < map.extent(0); ++y) {
    for (std::size_t x = 0; x < map.extent(1); ++x) {
      worst = std::max(worst,
                       std::fabs(map.at2(y, x) -
                                 flipped_map.at2(y, map.extent(1) - 1 - x)));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("larger sigma lowers the peak but keeps the mass") {
  DotMap d;
  d.image_w = d.image_h = 64;
  d.points = {{32.0, 32.0}};
  DensityConfig small, large;
  small.sigma = 1.5;
  large.sigma = 3.0;
  Tensor a = lcdnet::render_density(d, small);
  Tensor b = lcdnet::render_density(d, large);
  CHECK(b.max_value() < a.max_value());
  CHECK(a.sum() == Catch::Approx(b.sum()).margin(1e-9));
}

TEST_CASE("downscale sums 2x2 windows") {
  Tensor m = Tensor::from_data({2, 2}, {0.1, 0.2, 0.3, 0.4});
  Tensor half = lcdnet::downscale_target(m);
  REQUIRE(half.shape() == std::vector<std::size_t>{1, 1});
  CHECK(half[0] == (0.1 + 0.2) + (0.3 + 0.4));
}

TEST_CASE("downscale preserves mass in window order exactly") {
  Rng rng(6);
  Tensor m({8, 10});
  for (std::size_t i = 0; i < m.numel(); ++i) m[i] = rng.uniform();
  Tensor half = lcdnet::downscale_target(m);

  // Window-order sum of the input, associated like the pooled values.
  double window_sum = 0.0;
  for (std::size_t oy = 0; oy < 4; ++oy) {
    for (std::size_t ox = 0; ox < 5; ++ox) {
      window_sum += (m.at2(2 * oy, 2 * ox) + m.at2(2 * oy, 2 * ox + 1)) +
                    (m.at2(2 * oy + 1, 2 * ox) + m.at2(2 * oy + 1, 2 * ox + 1));
    }
  }
  double half_sum = 0.0;
  for (std::size_t i = 0; i < half.numel(); ++i) half_sum += half[i];
  CHECK(half_sum == window_sum);
}

TEST_CASE("odd maps are zero-padded by downscale") {
  Tensor m = Tensor::from_data({3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor half = lcdnet::downscale_target(m);
  REQUIRE(half.shape() == std::vector<std::size_t>{2, 2});
  CHECK(half.at2(0, 0) == 12.0);  // 1+2+4+5
  CHECK(half.at2(0, 1) == 9.0);   // 3+6
  CHECK(half.at2(1, 0) == 15.0);  // 7+8
  CHECK(half.at2(1, 1) == 9.0);   // 9
  CHECK(half.sum() == 45.0);
}

TEST_CASE("render-then-downscale keeps the count") {
  Rng rng(7);
  DotMap d = random_dotmap(50, 42, 12, rng);
  DensityConfig cfg;
  cfg.sigma = 2.0;
  Tensor half = lcdnet::downscale_target(lcdnet::render_density(d, cfg));
  CHECK(half.sum() == Catch::Approx(12.0).margin(1e-9));
}
