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
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lcdnet/errors.hpp"
#include "lcdnet/groundtruth.hpp"
#include "lcdnet/pnm.hpp"
#include "lcdnet/rng.hpp"
#include "lcdnet/tensor.hpp"

namespace lcdnet {

struct Box {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
};

// One image's annotations: either dot points or boxes, never both.
struct AnnotationRecord {
  std::string image_path;
  std::vector<Point> points;
  std::vector<Box> boxes;
  std::optional<double> altitude_m;
};

// Annotation file: one "x y" point or "x1 y1 x2 y2" box per line, '#'
// comments allowed. The first data line fixes the record type.
inline AnnotationRecord read_annotation_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open annotation file " + path);
  AnnotationRecord rec;
  std::string line;
  std::size_t lineno = 0;
  int arity = 0;  // 2 = points, 4 = boxes
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    std::string trailing;
    if (ss.clear(), ss >> trailing) {
      throw DataError("annotation " + path + ":" + std::to_string(lineno) +
                      ": trailing junk '" + trailing + "'");
    }
    if (vals.size() != 2 && vals.size() != 4) {
      throw DataError("annotation " + path + ":" + std::to_string(lineno) +
                      ": expected 2 or 4 numbers, got " +
                      std::to_string(vals.size()));
    }
    if (arity == 0) arity = static_cast<int>(vals.size());
    if (static_cast<int>(vals.size()) != arity) {
      throw DataError("annotation " + path + ":" + std::to_string(lineno) +
                      ": mixed point/box records");
    }
    if (arity == 2) {
      rec.points.push_back({vals[0], vals[1]});
    } else {
      rec.boxes.push_back({vals[0], vals[1], vals[2], vals[3]});
    }
  }
  return rec;
}

// Box annotations become dots at box centers; count is preserved.
inline DotMap boxes_to_dots(const AnnotationRecord& rec, std::size_t image_w,
                            std::size_t image_h,
                            const std::string& source_id = "") {
  DotMap dots;
  dots.image_w = image_w;
  dots.image_h = image_h;
  dots.altitude_m = rec.altitude_m;
  dots.source_id = source_id;
  if (!rec.boxes.empty() && !rec.points.empty()) {
    throw DataError("annotation for " + source_id + " mixes points and boxes");
  }
  if (rec.boxes.empty()) {
    dots.points = rec.points;
  } else {
    dots.points.reserve(rec.boxes.size());
    for (std::size_t i = 0; i < rec.boxes.size(); ++i) {
      const Box& b = rec.boxes[i];
      if (!(b.x1 < b.x2) || !(b.y1 < b.y2)) {
        throw DataError("annotation for " + source_id + ": degenerate box " +
                        std::to_string(i));
      }
      dots.points.push_back({(b.x1 + b.x2) / 2.0, (b.y1 + b.y2) / 2.0});
    }
  }
  dots.validate();
  return dots;
}

struct Sample {
  std::string id;
  Tensor image;  // (3, H, W), values in [0, 1]
  DotMap dots;
};

struct ManifestEntry {
  std::string image_path;
  std::string annotation_path;
  std::optional<double> altitude_m;
};

// Manifest: "image_path annotation_path [altitude]" per line, '#' comments.
// Relative paths resolve against the manifest's directory.
inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open manifest " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    ManifestEntry e;
    if (!(ss >> e.image_path >> e.annotation_path)) {
      throw DataError("manifest " + path + ":" + std::to_string(lineno) +
                      ": expected image and annotation paths");
    }
    double alt;
    if (ss >> alt) e.altitude_m = alt;
    auto resolve = [&base](const std::string& p) {
      std::filesystem::path fp(p);
      return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    e.image_path = resolve(e.image_path);
    e.annotation_path = resolve(e.annotation_path);
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::string sample_id_from_path(const std::string& image_path) {
  return std::filesystem::path(image_path).stem().string();
}

// Loads whole images at native resolution; grayscale is replicated to three
// channels and values scaled to [0, 1] by the image reader.
inline std::vector<Sample> load_dataset(const std::string& manifest_path) {
  std::vector<Sample> samples;
  for (const ManifestEntry& e : read_manifest(manifest_path)) {
    if (!std::filesystem::exists(e.image_path)) {
      throw DataError("manifest " + manifest_path + " names missing image " +
                      e.image_path);
    }
    Sample s;
    s.id = sample_id_from_path(e.image_path);
    s.image = read_pnm(e.image_path);
    AnnotationRecord rec = read_annotation_file(e.annotation_path);
    rec.altitude_m = e.altitude_m;
    s.dots = boxes_to_dots(rec, s.image.extent(2), s.image.extent(1), s.id);
    samples.push_back(std::move(s));
  }
  return samples;
}

struct AugmentationConfig {
  double horizontal_flip_prob = 0.5;
  std::pair<double, double> brightness_delta_range{-0.2, 0.2};
  std::pair<double, double> contrast_factor_range{0.8, 1.25};
  std::uint64_t seed = 0;

  void validate() const {
    if (horizontal_flip_prob < 0.0 || horizontal_flip_prob > 1.0) {
      throw ConfigError("flip probability must be in [0, 1]");
    }
    if (brightness_delta_range.first > brightness_delta_range.second ||
        contrast_factor_range.first > contrast_factor_range.second) {
      throw ConfigError("augmentation ranges must be ordered");
    }
  }
};

// Horizontal flip (point x -> image_w - 1 - x), contrast about the image
// mean, brightness shift, then a clamp to [0, 1]. Photometric draws never
// touch the annotations. Deterministic per (config.seed, draw_seed).
inline std::pair<Tensor, DotMap> augment(const Tensor& image,
                                         const DotMap& dots,
                                         const AugmentationConfig& config,
                                         std::uint64_t draw_seed) {
  config.validate();
  if (image.rank() != 3 || image.extent(1) != dots.image_h ||
      image.extent(2) != dots.image_w) {
    throw DimensionError("augment: image " + image.shape_string() +
                         " does not match dotmap " +
                         std::to_string(dots.image_w) + "x" +
                         std::to_string(dots.image_h));
  }
  Rng rng(mix_seed(config.seed, draw_seed));
  const bool flip = rng.bernoulli(config.horizontal_flip_prob);
  const double delta = rng.uniform(config.brightness_delta_range.first,
                                   config.brightness_delta_range.second);
  const double factor = rng.uniform(config.contrast_factor_range.first,
                                    config.contrast_factor_range.second);

  Tensor out = image;
  DotMap out_dots = dots;
  const std::size_t ch = image.extent(0), h = image.extent(1),
                    w = image.extent(2);
  if (flip) {
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t y = 0; y < h; ++y) {
        double* row = out.data() + (c * h + y) * w;
        for (std::size_t x = 0; x < w / 2; ++x) {
          std::swap(row[x], row[w - 1 - x]);
        }
      }
    }
    for (Point& p : out_dots.points) {
      p.x = static_cast<double>(w - 1) - p.x;
    }
  }

  double mean = 0.0;
  for (std::size_t i = 0; i < out.numel(); ++i) mean += out[i];
  mean /= static_cast<double>(out.numel());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    double v = mean + (out[i] - mean) * factor + delta;
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    out[i] = v;
  }
  return {std::move(out), std::move(out_dots)};
}

struct SynthSpec {
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t n_objects = 8;
  std::pair<double, double> object_radius_range{2.0, 4.0};
  double background_noise = 0.08;
  std::uint64_t seed = 0;
};

// Synthetic labeled scene: seeded background noise plus Gaussian intensity
// bumps at the returned dot positions. Placement enforces a minimum
// separation of twice the maximum radius, relaxed by 0.7x after every 100
// failed draws; impossible specs raise an error suggesting lower density.
// Intensities are quantized to the 8-bit grid so a PGM round-trip is exact.
inline std::pair<Tensor, DotMap> synth_scene(const SynthSpec& spec) {
  if (spec.width < 8 || spec.height < 8) {
    throw ConfigError("synthetic scenes must be at least 8x8");
  }
  if (spec.object_radius_range.first <= 0.0 ||
      spec.object_radius_range.first > spec.object_radius_range.second) {
    throw ConfigError("object radius range must be ordered and positive");
  }
  Rng rng(mix_seed(spec.seed, 0x73796E7468ull));
  const std::size_t h = spec.height, w = spec.width;

  Tensor intensity({h, w});
  for (std::size_t i = 0; i < intensity.numel(); ++i) {
    intensity[i] = rng.uniform(0.0, spec.background_noise);
  }

  DotMap dots;
  dots.image_w = w;
  dots.image_h = h;
  const double r_max = spec.object_radius_range.second;
  const double margin = r_max + 1.0;
  if (2.0 * margin >= static_cast<double>(w) ||
      2.0 * margin >= static_cast<double>(h)) {
    throw ConfigError("object radius too large for scene size");
  }
  double min_sep = 2.0 * r_max;
  std::size_t failures = 0;
  while (dots.points.size() < spec.n_objects) {
    const Point cand{rng.uniform(margin, static_cast<double>(w) - margin),
                     rng.uniform(margin, static_cast<double>(h) - margin)};
    bool ok = true;
    for (const Point& p : dots.points) {
      const double dx = p.x - cand.x, dy = p.y - cand.y;
      if (dx * dx + dy * dy < min_sep * min_sep) {
        ok = false;
        break;
      }
    }
    if (ok) {
      dots.points.push_back(cand);
      continue;
    }
    if (++failures % 100 == 0) {
      min_sep *= 0.7;
      if (min_sep < 1.0) {
        throw DataError(
            "cannot place " + std::to_string(spec.n_objects) +
            " objects in a " + std::to_string(w) + "x" + std::to_string(h) +
            " scene; lower the object count or density");
      }
    }
  }

  for (const Point& p : dots.points) {
    const double radius =
        rng.uniform(spec.object_radius_range.first, spec.object_radius_range.second);
    const double amp = rng.uniform(0.6, 1.0);
    const double s = radius / 2.0;
    const double cut = 2.0 * radius;
    const std::ptrdiff_t x_lo = static_cast<std::ptrdiff_t>(std::floor(p.x - cut));
    const std::ptrdiff_t x_hi = static_cast<std::ptrdiff_t>(std::ceil(p.x + cut));
    const std::ptrdiff_t y_lo = static_cast<std::ptrdiff_t>(std::floor(p.y - cut));
    const std::ptrdiff_t y_hi = static_cast<std::ptrdiff_t>(std::ceil(p.y + cut));
    for (std::ptrdiff_t py = std::max<std::ptrdiff_t>(y_lo, 0);
         py <= std::min<std::ptrdiff_t>(y_hi, h - 1); ++py) {
      for (std::ptrdiff_t px = std::max<std::ptrdiff_t>(x_lo, 0);
           px <= std::min<std::ptrdiff_t>(x_hi, w - 1); ++px) {
        const double dx = (static_cast<double>(px) + 0.5) - p.x;
        const double dy = (static_cast<double>(py) + 0.5) - p.y;
        intensity.at2(py, px) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
      }
    }
  }

  Tensor image({3, h, w});
  for (std::size_t i = 0; i < intensity.numel(); ++i) {
    double v = intensity[i];
    if (v > 1.0) v = 1.0;
    v = std::lround(v * 255.0) / 255.0;  // 8-bit grid
    image[i] = v;
    image[h * w + i] = v;
    image[2 * h * w + i] = v;
  }
  return {std::move(image), std::move(dots)};
}

}  // namespace lcdnet
