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
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lcdnet/errors.hpp"
#include "lcdnet/tensor.hpp"

namespace lcdnet {

// Minimal portable graymap/pixmap support: P2/P5 (gray) and P3/P6 (RGB),
// 8-bit maxval. Loaded pixels are scaled to [0, 1]; grayscale images are
// replicated to three channels so every image is a (3, H, W) tensor.

namespace pnm {

inline int next_token_int(std::istream& is, const std::string& path) {
  // Skips whitespace and '#' comment lines, pnm-style.
  for (;;) {
    const int c = is.peek();
    if (c == EOF) throw DataError("pnm " + path + ": unexpected end of header");
    if (c == '#') {
      std::string junk;
      std::getline(is, junk);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  int v;
  if (!(is >> v)) throw DataError("pnm " + path + ": malformed header token");
  return v;
}

}  // namespace pnm

inline Tensor read_pnm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open image " + path);
  std::string magic(2, '\0');
  f.read(magic.data(), 2);
  if (!f || (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6")) {
    throw DataError("image " + path + " is not a supported P2/P3/P5/P6 file");
  }
  const bool color = magic == "P3" || magic == "P6";
  const bool binary = magic == "P5" || magic == "P6";
  const int w = pnm::next_token_int(f, path);
  const int h = pnm::next_token_int(f, path);
  const int maxval = pnm::next_token_int(f, path);
  if (w < 1 || h < 1) throw DataError("image " + path + ": bad dimensions");
  if (maxval < 1 || maxval > 255) {
    throw DataError("image " + path + ": only 8-bit maxval supported, got " +
                    std::to_string(maxval));
  }

  const std::size_t channels = color ? 3 : 1;
  const std::size_t count = static_cast<std::size_t>(w) * h * channels;
  std::vector<double> raw(count);
  if (binary) {
    f.get();  // single whitespace after maxval
    std::vector<unsigned char> buf(count);
    f.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(count));
    if (!f) throw DataError("image " + path + ": truncated pixel data");
    for (std::size_t i = 0; i < count; ++i) {
      raw[i] = static_cast<double>(buf[i]) / maxval;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      int v;
      if (!(f >> v)) throw DataError("image " + path + ": truncated pixel data");
      raw[i] = static_cast<double>(v) / maxval;
    }
  }

  Tensor img({3, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  if (color) {
    // interleaved RGB -> planar
    for (std::size_t i = 0; i < plane; ++i) {
      img[0 * plane + i] = raw[3 * i + 0];
      img[1 * plane + i] = raw[3 * i + 1];
      img[2 * plane + i] = raw[3 * i + 2];
    }
  } else {
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < plane; ++i) img[c * plane + i] = raw[i];
    }
  }
  return img;
}

// Writes an 8-bit binary graymap from values in [0, 1].
inline std::string encode_pgm(const Tensor& gray) {
  if (gray.rank() != 2) {
    throw DimensionError("encode_pgm expects a 2-D map, got " +
                         gray.shape_string());
  }
  const std::size_t h = gray.extent(0), w = gray.extent(1);
  std::ostringstream os;
  os << "P5\n" << w << " " << h << "\n255\n";
  std::string body;
  body.reserve(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    double v = gray[i];
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    body.push_back(static_cast<char>(
        static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  return os.str() + body;
}

// Writes an 8-bit binary pixmap from a (3, H, W) tensor in [0, 1].
inline std::string encode_ppm(const Tensor& img) {
  if (img.rank() != 3 || img.extent(0) != 3) {
    throw DimensionError("encode_ppm expects a (3,H,W) tensor, got " +
                         img.shape_string());
  }
  const std::size_t h = img.extent(1), w = img.extent(2);
  const std::size_t plane = h * w;
  std::ostringstream os;
  os << "P6\n" << w << " " << h << "\n255\n";
  std::string body;
  body.reserve(3 * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      double v = img[c * plane + i];
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      body.push_back(static_cast<char>(
          static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
  return os.str() + body;
}

}  // namespace lcdnet
