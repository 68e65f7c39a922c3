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
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lcdnet/errors.hpp"
#include "lcdnet/tensor.hpp"

namespace lcdnet {

// Mean absolute count error over (predicted, ground-truth) count pairs.
inline double mae(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) {
    throw ConfigError("mae needs at least one (prediction, truth) pair");
  }
  double acc = 0.0;
  for (const auto& [pred, gt] : pairs) acc += std::fabs(pred - gt);
  return acc / static_cast<double>(pairs.size());
}

// Patch grid for grid-average count error. Power{L} uses a 2^L x 2^L grid
// (4^L patches); Explicit gives the row/column counts directly. Patch
// boundaries step by floor(extent / n); the last row/column of patches
// absorbs any remainder.
struct GridSetting {
  enum class Kind { Power, Explicit };
  Kind kind = Kind::Explicit;
  std::size_t level = 0;  // Power
  std::size_t rows = 4;   // Explicit
  std::size_t cols = 4;

  static GridSetting power(std::size_t level) {
    GridSetting g;
    g.kind = Kind::Power;
    g.level = level;
    return g;
  }
  static GridSetting explicit_grid(std::size_t rows, std::size_t cols) {
    GridSetting g;
    g.kind = Kind::Explicit;
    g.rows = rows;
    g.cols = cols;
    return g;
  }

  std::pair<std::size_t, std::size_t> dimensions() const {
    if (kind == Kind::Power) {
      const std::size_t n = std::size_t(1) << level;
      return {n, n};
    }
    return {rows, cols};
  }

  std::string label() const {
    const auto [r, c] = dimensions();
    return std::to_string(r) + "x" + std::to_string(c);
  }
};

// Per-image grid average absolute error: sum over patches of the absolute
// difference between predicted and true patch counts.
inline double game_image(const Tensor& pred, const Tensor& gt,
                         const GridSetting& grid) {
  if (pred.rank() != 2 || gt.rank() != 2 || !pred.same_shape(gt)) {
    throw DimensionError("game_image: map shapes differ: " +
                         pred.shape_string() + " vs " + gt.shape_string());
  }
  const std::size_t h = pred.extent(0), w = pred.extent(1);
  const auto [rows, cols] = grid.dimensions();
  if (rows < 1 || cols < 1 || rows > h || cols > w) {
    throw DimensionError("game grid " + grid.label() +
                         " does not divide map " + pred.shape_string());
  }
  const std::size_t bh = h / rows, bw = w / cols;
  double total = 0.0;
  for (std::size_t gy = 0; gy < rows; ++gy) {
    const std::size_t y0 = gy * bh;
    const std::size_t y1 = (gy + 1 == rows) ? h : y0 + bh;
    for (std::size_t gx = 0; gx < cols; ++gx) {
      const std::size_t x0 = gx * bw;
      const std::size_t x1 = (gx + 1 == cols) ? w : x0 + bw;
      double ps = 0.0, gs = 0.0;
      for (std::size_t y = y0; y < y1; ++y) {
        const double* pr = pred.data() + y * w;
        const double* gr = gt.data() + y * w;
        for (std::size_t x = x0; x < x1; ++x) {
          ps += pr[x];
          gs += gr[x];
        }
      }
      total += std::fabs(ps - gs);
    }
  }
  return total;
}

struct SSIMConfig {
  enum class Mode { GlobalStats, Windowed };
  Mode mode = Mode::GlobalStats;
  std::size_t window = 11;       // Windowed mode
  double k1 = 0.01;
  double k2 = 0.03;
  // Stabilization constants are (k1*range)^2 and (k2*range)^2. When range is
  // not set it defaults to the max value over both maps (floored at 1 so the
  // constants stay positive for all-zero maps).
  std::optional<double> dynamic_range;

  std::string label() const {
    return mode == Mode::GlobalStats
               ? "global"
               : "windowed" + std::to_string(window);
  }
};

namespace detail {

struct SsimStats {
  double mean_x, mean_y, var_x, var_y, cov;
};

inline SsimStats ssim_stats(const double* x, const double* y, std::size_t row_stride,
                            std::size_t rows, std::size_t cols) {
  const double n = static_cast<double>(rows * cols);
  double mx = 0.0, my = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      mx += x[r * row_stride + c];
      my += y[r * row_stride + c];
    }
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double dx = x[r * row_stride + c] - mx;
      const double dy = y[r * row_stride + c] - my;
      vx += dx * dx;
      vy += dy * dy;
      cov += dx * dy;
    }
  }
  return {mx, my, vx / n, vy / n, cov / n};
}

inline double ssim_formula(const SsimStats& s, double c1, double c2) {
  const double num = (2.0 * s.mean_x * s.mean_y + c1) * (2.0 * s.cov + c2);
  const double den = (s.mean_x * s.mean_x + s.mean_y * s.mean_y + c1) *
                     (s.var_x + s.var_y + c2);
  return num / den;
}

}  // namespace detail

// Structural similarity between two maps. GlobalStats evaluates the formula
// once from whole-map statistics; Windowed averages it over sliding
// square windows (maps smaller than the window fall back to one whole-map
// window).
inline double ssim(const Tensor& pred, const Tensor& gt,
                   const SSIMConfig& config = {}) {
  if (pred.rank() != 2 || gt.rank() != 2 || !pred.same_shape(gt)) {
    throw DimensionError("ssim: map shapes differ: " + pred.shape_string() +
                         " vs " + gt.shape_string());
  }
  double range = config.dynamic_range.value_or(
      std::max(pred.max_value(), gt.max_value()));
  if (!(range > 0.0)) range = 1.0;
  const double c1 = (config.k1 * range) * (config.k1 * range);
  const double c2 = (config.k2 * range) * (config.k2 * range);
  if (!(c1 > 0.0) || !(c2 > 0.0)) {
    throw ConfigError("ssim stabilization constants must be positive");
  }

  const std::size_t h = pred.extent(0), w = pred.extent(1);
  if (config.mode == SSIMConfig::Mode::GlobalStats || h < config.window ||
      w < config.window) {
    return detail::ssim_formula(
        detail::ssim_stats(pred.data(), gt.data(), w, h, w), c1, c2);
  }

  const std::size_t win = config.window;
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t y = 0; y + win <= h; ++y) {
    for (std::size_t x = 0; x + win <= w; ++x) {
      acc += detail::ssim_formula(
          detail::ssim_stats(pred.data() + y * w + x, gt.data() + y * w + x, w,
                             win, win),
          c1, c2);
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

// Peak signal-to-noise ratio in dB: 10 log10(max^2 / MSE). The peak defaults
// to the ground-truth map maximum (density maps are floats, not 8-bit data).
// Identical maps return +infinity.
inline double psnr(const Tensor& pred, const Tensor& gt,
                   std::optional<double> max_value = {}) {
  if (pred.rank() != 2 || gt.rank() != 2 || !pred.same_shape(gt)) {
    throw DimensionError("psnr: map shapes differ: " + pred.shape_string() +
                         " vs " + gt.shape_string());
  }
  const double peak = max_value.value_or(gt.max_value());
  if (!(peak > 0.0)) {
    throw ConfigError("psnr peak value must be > 0, got " +
                      std::to_string(peak));
  }
  double mse = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = pred[i] - gt[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

struct ImageMetrics {
  std::string sample_id;
  double gt_count = 0.0;
  double pred_count = 0.0;
  double abs_err = 0.0;
  double game = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;
};

struct MetricReport {
  std::vector<ImageMetrics> per_image;
  double mae = 0.0;
  double game = 0.0;
  double mean_ssim = 0.0;
  double mean_psnr = 0.0;
  GridSetting grid;
  SSIMConfig ssim_config;
  std::optional<double> psnr_max;
  std::string notes;  // e.g. the evaluation resolution
};

// Full per-image + aggregate evaluation of prediction/ground-truth map pairs.
inline MetricReport evaluate_maps(const std::vector<std::string>& ids,
                                  const std::vector<Tensor>& preds,
                                  const std::vector<Tensor>& gts,
                                  const GridSetting& grid = {},
                                  const SSIMConfig& ssim_config = {},
                                  std::optional<double> psnr_max = {}) {
  if (ids.size() != preds.size() || ids.size() != gts.size()) {
    throw DimensionError("evaluate_maps: ids/preds/gts sizes differ");
  }
  if (ids.empty()) throw ConfigError("evaluate_maps: empty evaluation set");

  MetricReport rep;
  rep.grid = grid;
  rep.ssim_config = ssim_config;
  rep.psnr_max = psnr_max;
  rep.per_image.resize(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ImageMetrics& m = rep.per_image[i];
    m.sample_id = ids[i];
    m.pred_count = preds[i].sum();
    m.gt_count = gts[i].sum();
    m.abs_err = std::fabs(m.pred_count - m.gt_count);
    m.game = game_image(preds[i], gts[i], grid);
    m.ssim = ssim(preds[i], gts[i], ssim_config);
    m.psnr = psnr(preds[i], gts[i], psnr_max);
  }
  const double n = static_cast<double>(ids.size());
  for (const auto& m : rep.per_image) {
    rep.mae += m.abs_err / n;
    rep.game += m.game / n;
    rep.mean_ssim += m.ssim / n;
    rep.mean_psnr += m.psnr / n;
  }
  return rep;
}

inline void write_report_delimited(std::ostream& os, const MetricReport& rep) {
  os << "# game_grid=" << rep.grid.label()
     << " ssim_mode=" << rep.ssim_config.label() << " psnr_max="
     << (rep.psnr_max ? std::to_string(*rep.psnr_max) : std::string("gt-max"));
  if (!rep.notes.empty()) os << " " << rep.notes;
  os << "\n";
  os << "sample_id\tgt_count\tpred_count\tabs_err\tgame\tssim\tpsnr\n";
  os << std::setprecision(12);
  for (const auto& m : rep.per_image) {
    os << m.sample_id << "\t" << m.gt_count << "\t" << m.pred_count << "\t"
       << m.abs_err << "\t" << m.game << "\t" << m.ssim << "\t" << m.psnr
       << "\n";
  }
  os << "aggregate\t-\t-\t" << rep.mae << "\t" << rep.game << "\t"
     << rep.mean_ssim << "\t" << rep.mean_psnr << "\n";
}

inline void write_report_table(std::ostream& os, const MetricReport& rep) {
  os << "evaluation (" << rep.per_image.size() << " images, game grid "
     << rep.grid.label() << ", ssim " << rep.ssim_config.label() << ")";
  if (!rep.notes.empty()) os << " [" << rep.notes << "]";
  os << "\n";
  os << std::left << std::setw(24) << "sample" << std::right << std::setw(10)
     << "gt" << std::setw(12) << "pred" << std::setw(10) << "err"
     << std::setw(10) << "game" << std::setw(9) << "ssim" << std::setw(9)
     << "psnr" << "\n";
  auto row = [&os](const std::string& id, double gt, double pred, double err,
                   double game, double ssim_v, double psnr_v) {
    os << std::left << std::setw(24) << id << std::right << std::fixed
       << std::setprecision(2) << std::setw(10) << gt << std::setw(12) << pred
       << std::setw(10) << err << std::setw(10) << game << std::setw(9)
       << ssim_v << std::setw(9) << psnr_v << "\n";
    os.unsetf(std::ios_base::floatfield);
  };
  for (const auto& m : rep.per_image) {
    row(m.sample_id, m.gt_count, m.pred_count, m.abs_err, m.game, m.ssim,
        m.psnr);
  }
  row("MEAN", 0.0, 0.0, rep.mae, rep.game, rep.mean_ssim, rep.mean_psnr);
}

}  // namespace lcdnet
