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
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lcdnet/errors.hpp"
#include "lcdnet/hash.hpp"
#include "lcdnet/model.hpp"

namespace lcdnet {

// Checkpoint file layout (all integers and doubles little-endian):
//   magic "LCDNETCK" | u32 version | u64 manifest hash | u32 layer count
//   per layer: u32 name length | name bytes
//              u32 ndim | u64 extents... | f64 values...   (weights)
//              u32 ndim | u64 extents... | f64 values...   (bias)
//   u64 FNV-1a checksum of everything before it
namespace ckpt {

inline constexpr char kMagic[8] = {'L', 'C', 'D', 'N', 'E', 'T', 'C', 'K'};
inline constexpr std::uint32_t kVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(const char* field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64(const char* field) {
    const std::uint64_t bits = u64(field);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }

  std::string raw(std::size_t n, const char* field) {
    need(n, field);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }

  void need(std::size_t n, const char* field) {
    if (pos_ + n > bytes_.size()) {
      throw CheckpointError("checkpoint " + path_ +
                            ": truncated while reading " + field);
    }
  }

 private:
  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

inline void append_tensor(std::string& out, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t i = 0; i < t.rank(); ++i) {
    put_u64(out, t.extent(i));
  }
  for (std::size_t i = 0; i < t.numel(); ++i) put_f64(out, t[i]);
}

inline Tensor read_tensor(Reader& r, const char* field) {
  const std::uint32_t ndim = r.u32(field);
  if (ndim == 0 || ndim > 8) {
    throw CheckpointError(std::string("checkpoint: bad rank for ") + field);
  }
  std::vector<std::size_t> shape(ndim);
  std::size_t numel = 1;
  for (auto& e : shape) {
    e = static_cast<std::size_t>(r.u64(field));
    if (e == 0 || numel > (1u << 28)) {
      throw CheckpointError(std::string("checkpoint: bad extent for ") + field);
    }
    numel *= e;
  }
  std::vector<double> data(numel);
  for (double& d : data) d = r.f64(field);
  return Tensor::from_data(std::move(shape), std::move(data));
}

}  // namespace ckpt

inline std::string serialize_checkpoint(const ModelParams& params) {
  validate_params(params);
  std::string out;
  out.append(ckpt::kMagic, sizeof(ckpt::kMagic));
  ckpt::put_u32(out, ckpt::kVersion);
  ckpt::put_u64(out, manifest_hash());
  ckpt::put_u32(out, static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& layer : params.layers) {
    ckpt::put_u32(out, static_cast<std::uint32_t>(layer.name.size()));
    out += layer.name;
    ckpt::append_tensor(out, layer.weights);
    ckpt::append_tensor(out, layer.bias);
  }
  Fnv1a64 sum;
  sum.update(out.data(), out.size());
  ckpt::put_u64(out, sum.digest());
  return out;
}

inline ModelParams deserialize_checkpoint(const std::string& bytes,
                                          const std::string& path = "<memory>") {
  ckpt::Reader r(bytes, path);
  if (r.raw(sizeof(ckpt::kMagic), "magic") !=
      std::string(ckpt::kMagic, sizeof(ckpt::kMagic))) {
    throw CheckpointError("checkpoint " + path + ": bad magic");
  }
  const std::uint32_t version = r.u32("version");
  if (version != ckpt::kVersion) {
    throw CheckpointError("checkpoint " + path + ": unsupported version " +
                          std::to_string(version));
  }
  const std::uint64_t hash = r.u64("manifest hash");
  if (hash != manifest_hash()) {
    throw CheckpointError("checkpoint " + path +
                          ": architecture manifest hash mismatch");
  }
  const std::uint32_t layer_count = r.u32("layer count");
  if (layer_count != lcdnet_layers().size()) {
    throw CheckpointError("checkpoint " + path + ": layer count " +
                          std::to_string(layer_count) + " != " +
                          std::to_string(lcdnet_layers().size()));
  }

  ModelParams params;
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    LayerT<double> layer;
    const std::uint32_t name_len = r.u32("layer name length");
    if (name_len > 256) {
      throw CheckpointError("checkpoint " + path + ": layer name too long");
    }
    layer.name = r.raw(name_len, "layer name");
    layer.weights = ckpt::read_tensor(r, "weights");
    layer.bias = ckpt::read_tensor(r, "bias");
    const LayerDef& d = lcdnet_layers()[i];
    layer.spec = ConvSpec::same_padded(d.out_channels, d.kernel_h, d.kernel_w);
    params.layers.push_back(std::move(layer));
  }

  const std::size_t payload_end = r.pos();
  const std::uint64_t stored = r.u64("checksum");
  Fnv1a64 sum;
  sum.update(bytes.data(), payload_end);
  if (stored != sum.digest()) {
    throw CheckpointError("checkpoint " + path + ": checksum mismatch");
  }
  validate_params(params);  // rejects any shape drift before returning
  return params;
}

// Atomic write: the file appears only after a complete serialization.
inline void write_file_atomic(const std::string& path,
                              const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open " + tmp + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw DataError("cannot rename " + tmp + " to " + path + ": " +
                    ec.message());
  }
}

inline void save_checkpoint(const ModelParams& params,
                            const std::string& path) {
  write_file_atomic(path, serialize_checkpoint(params));
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, path);
}

}  // namespace lcdnet
