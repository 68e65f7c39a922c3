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
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lcdnet/errors.hpp"
#include "lcdnet/groundtruth.hpp"

namespace lcdnet {

// Plain "key = value" config files; '#' starts a comment, blank lines are
// skipped, unknown keys are ignored. Command-line overrides take precedence
// over file values, which take precedence over built-in defaults.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    KeyValueConfig cfg;
    cfg.path_ = path;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config " + path + ":" + std::to_string(lineno) +
                          ": expected key = value");
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) {
        throw ConfigError("config " + path + ":" + std::to_string(lineno) +
                          ": empty key");
      }
      cfg.values_[key] = value;
    }
    return cfg;
  }

  void set_override(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double(key, it->second);
  }

  std::size_t get_size(const std::string& key, std::size_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_size(key, it->second);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return static_cast<std::uint64_t>(parse_size(key, it->second));
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': cannot parse boolean '" + v +
                      "'");
  }

  std::string require_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
      throw ConfigError(describe() + ": missing required key '" + key + "'");
    }
    return it->second;
  }

  double require_double(const std::string& key) const {
    return parse_double(key, require_string(key));
  }

  // Altitude bands: "min:max:sigma" entries separated by commas.
  std::vector<AltitudeBand> get_bands(const std::string& key) const {
    std::vector<AltitudeBand> bands;
    auto it = values_.find(key);
    if (it == values_.end()) return bands;
    std::istringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      AltitudeBand b;
      if (std::sscanf(item.c_str(), "%lf:%lf:%lf", &b.min_alt, &b.max_alt,
                      &b.sigma) != 3) {
        throw ConfigError("config key '" + key + "': cannot parse band '" +
                          item + "' (want min:max:sigma)");
      }
      bands.push_back(b);
    }
    return bands;
  }

  std::string describe() const {
    return path_.empty() ? "config" : ("config " + path_);
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  double parse_double(const std::string& key, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': cannot parse number '" + v +
                        "'");
    }
  }

  std::size_t parse_size(const std::string& key, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const long long n = std::stoll(v, &pos);
      if (pos != v.size() || n < 0) throw std::invalid_argument(v);
      return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': cannot parse count '" + v +
                        "'");
    }
  }

  std::string path_;
  std::map<std::string, std::string> values_;
};

// Shared density-config keys (used by the gengt, train, and eval commands):
//   mode = fixed | altitude | adaptive
//   sigma, bands (min:max:sigma,...), knn_k, knn_beta, fallback_sigma,
//   truncation_sigmas, renormalize
inline DensityConfig density_config_from(const KeyValueConfig& cfg) {
  DensityConfig d;
  const std::string mode = cfg.get_string("mode", "fixed");
  if (mode == "fixed") {
    d.mode = DensityConfig::Mode::Fixed;
  } else if (mode == "altitude") {
    d.mode = DensityConfig::Mode::AltitudeGrouped;
  } else if (mode == "adaptive") {
    d.mode = DensityConfig::Mode::AdaptiveKnn;
  } else {
    throw ConfigError(cfg.describe() + ": unknown density mode '" + mode + "'");
  }
  d.sigma = cfg.get_double("sigma", d.sigma);
  d.bands = cfg.get_bands("bands");
  d.knn_k = cfg.get_size("knn_k", d.knn_k);
  d.knn_beta = cfg.get_double("knn_beta", d.knn_beta);
  d.fallback_sigma = cfg.get_double("fallback_sigma", d.fallback_sigma);
  d.truncation_radius_sigmas =
      cfg.get_double("truncation_sigmas", d.truncation_radius_sigmas);
  d.renormalize = cfg.get_bool("renormalize", d.renormalize);
  d.validate();
  return d;
}

}  // namespace lcdnet
