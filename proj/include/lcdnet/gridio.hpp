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

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "lcdnet/errors.hpp"
#include "lcdnet/tensor.hpp"

namespace lcdnet {

// Portable float grid for density maps:
//   LCDG1 <height> <width>
//   one line of space-separated values per row, %.17g (exact round-trip)

inline std::string encode_density_grid(const Tensor& map) {
  if (map.rank() != 2) {
    throw DimensionError("density grid expects a 2-D map, got " +
                         map.shape_string());
  }
  const std::size_t h = map.extent(0), w = map.extent(1);
  std::string out = "LCDG1 " + std::to_string(h) + " " + std::to_string(w) + "\n";
  char buf[40];
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::snprintf(buf, sizeof(buf), "%.17g", map.at2(y, x));
      if (x) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline Tensor parse_density_grid(std::istream& is, const std::string& path) {
  std::string magic;
  std::size_t h = 0, w = 0;
  if (!(is >> magic >> h >> w) || magic != "LCDG1" || h == 0 || w == 0) {
    throw DataError("density grid " + path + ": bad header");
  }
  Tensor map({h, w});
  for (std::size_t i = 0; i < h * w; ++i) {
    if (!(is >> map[i])) {
      throw DataError("density grid " + path + ": truncated at value " +
                      std::to_string(i));
    }
  }
  return map;
}

inline void write_density_grid(const std::string& path, const Tensor& map) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open " + path + " for writing");
  f << encode_density_grid(map);
  if (!f) throw DataError("short write to " + path);
}

inline Tensor read_density_grid(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open density grid " + path);
  return parse_density_grid(f, path);
}

// Max-normalized 8-bit view of a map for visualization; an all-zero map
// stays all black.
inline Tensor normalize_for_export(const Tensor& map) {
  Tensor out = map;
  const double m = map.max_value();
  if (m > 0.0) {
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = out[i] / m;
  }
  return out;
}

}  // namespace lcdnet
