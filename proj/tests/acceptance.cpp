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

// Acceptance suite: one line per criterion, every tolerance pinned in code.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lcdnet/checkpoint.hpp"
#include "lcdnet/curriculum.hpp"
#include "lcdnet/dataio.hpp"
#include "lcdnet/groundtruth.hpp"
#include "lcdnet/metrics.hpp"
#include "lcdnet/model.hpp"
#include "lcdnet/trainer.hpp"
#include "oracles.hpp"

using namespace lcdnet;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::vector<Sample> synth_dataset(std::size_t count, std::size_t size,
                                  std::uint64_t seed, std::size_t n_min,
                                  std::size_t n_max) {
  Rng count_rng(mix_seed(seed, 0xD5ull));
  std::vector<Sample> out;
  for (std::size_t i = 0; i < count; ++i) {
    SynthSpec spec;
    spec.width = size;
    spec.height = size;
    spec.seed = mix_seed(seed, i);
    spec.n_objects = n_min + count_rng.index(n_max - n_min + 1);
    auto [img, dots] = synth_scene(spec);
    Sample s;
    s.id = (i < 10 ? "scene0" : "scene") + std::to_string(i);
    s.image = std::move(img);
    s.dots = std::move(dots);
    s.dots.source_id = s.id;
    out.push_back(std::move(s));
  }
  return out;
}

// --------------------------------------------------------------------------
// C1: gradient correctness, full model and per op.

Outcome c1_gradients() {
  Outcome o;
  ModelParams params = init_params(31);
  Rng rng(32);
  Tensor image = oracle::random_tensor({1, 3, 8, 8}, rng, 0.0, 1.0);
  Tensor target = oracle::random_tensor({1, 1, 4, 4}, rng, 0.0, 1.0);
  GradCheckOptions opt;
  opt.seed = 33;
  opt.min_coords = 300;
  const auto rep = model_grad_check(params, image, target, opt);
  o.require(rep.max_rel_error < 1e-4,
            "full-model grad error " + std::to_string(rep.max_rel_error));
  o.note("model max rel err " + std::to_string(rep.max_rel_error) + " over " +
         std::to_string(rep.coords_checked) + " coords");

  // Per-op finite-difference checks at 1e-6.
  double worst_op = 0.0;
  const std::size_t kernels[][2] = {{1, 3}, {3, 1}, {3, 3}, {1, 1}, {5, 5}};
  for (const auto& k : kernels) {
    ConvSpec spec = ConvSpec::same_padded(2, k[0], k[1]);
    const std::size_t h = std::max<std::size_t>(k[0], 4);
    const std::size_t w = std::max<std::size_t>(k[1], 4);
    Tensor input = oracle::random_tensor({1, 2, h, w}, rng);
    Tensor weights = oracle::random_tensor({2, 2, k[0], k[1]}, rng);
    Tensor bias = oracle::random_tensor({2}, rng);
    Tensor mix;
    {
      Tensor probe = conv2d_forward(input, weights, &bias, spec);
      mix = oracle::random_tensor(probe.shape(), rng);
    }
    auto loss = [&]() {
      Tensor out = conv2d_forward(input, weights, &bias, spec);
      double acc = 0.0;
      for (std::size_t i = 0; i < out.numel(); ++i) acc += out[i] * mix[i];
      return acc;
    };
    auto grads = conv2d_backward(mix, input, weights, spec);
    worst_op = std::max(worst_op,
                        oracle::fd_max_rel_error(input, grads.grad_input, loss));
    worst_op = std::max(
        worst_op, oracle::fd_max_rel_error(weights, grads.grad_weights, loss));
    worst_op =
        std::max(worst_op, oracle::fd_max_rel_error(bias, grads.grad_bias, loss));
  }

  {
    // relu + maxpool + concat composite.
    Tensor a = oracle::random_tensor({1, 2, 6, 6}, rng);
    Tensor b = oracle::random_tensor({1, 2, 6, 6}, rng);
    Tensor mix = oracle::random_tensor({1, 4, 3, 3}, rng);
    auto loss = [&]() {
      Tensor pa = maxpool2x2(relu(a)).output;
      Tensor pb = maxpool2x2(relu(b)).output;
      Tensor m = concat_channels(pa, pb);
      double acc = 0.0;
      for (std::size_t i = 0; i < m.numel(); ++i) acc += m[i] * mix[i];
      return acc;
    };
    Tensor ra = relu(a);
    Tensor rb = relu(b);
    auto pa = maxpool2x2(ra);
    auto pb = maxpool2x2(rb);
    auto [gpa, gpb] = concat_channels_backward(mix, 2, 2);
    Tensor ga = relu_backward(
        maxpool2x2_backward(gpa, pa.argmax, ra.shape()), a);
    Tensor gb = relu_backward(
        maxpool2x2_backward(gpb, pb.argmax, rb.shape()), b);
    worst_op = std::max(worst_op, oracle::fd_max_rel_error(a, ga, loss));
    worst_op = std::max(worst_op, oracle::fd_max_rel_error(b, gb, loss));
  }
  o.require(worst_op < 1e-6, "per-op grad error " + std::to_string(worst_op));
  o.note("per-op max rel err " + std::to_string(worst_op));
  return o;
}

// --------------------------------------------------------------------------
// C2: count conservation over 1000 random dotmaps.

Outcome c2_count_conservation() {
  Outcome o;
  Rng rng(41);
  double worst_full = 0.0;
  double worst_half = 0.0;
  bool window_exact = true;
  for (int iter = 0; iter < 1000; ++iter) {
    DotMap d;
    d.image_w = 16 + rng.index(49);
    d.image_h = 16 + rng.index(49);
    d.source_id = "case" + std::to_string(iter);
    const std::size_t n = rng.index(31);
    for (std::size_t i = 0; i < n; ++i) {
      d.points.push_back(
          {rng.uniform(0.0, static_cast<double>(d.image_w) - 1e-9),
           rng.uniform(0.0, static_cast<double>(d.image_h) - 1e-9)});
    }
    DensityConfig cfg;
    cfg.sigma = 0.5 + 3.5 * rng.uniform();
    Tensor full = render_density(d, cfg);
    worst_full = std::max(worst_full,
                          std::fabs(full.sum() - static_cast<double>(n)));

    Tensor half = downscale_target(full);
    worst_half = std::max(worst_half,
                          std::fabs(half.sum() - static_cast<double>(n)));

    // Exact mass preservation in window order.
    const std::size_t oh = half.extent(0), ow = half.extent(1);
    const std::size_t h = full.extent(0), w = full.extent(1);
    double window_sum = 0.0;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t y0 = 2 * oy, x0 = 2 * ox;
        const double a = full.at2(y0, x0);
        const double bb = x0 + 1 < w ? full.at2(y0, x0 + 1) : 0.0;
        const double c = y0 + 1 < h ? full.at2(y0 + 1, x0) : 0.0;
        const double dd =
            (x0 + 1 < w && y0 + 1 < h) ? full.at2(y0 + 1, x0 + 1) : 0.0;
        window_sum += (a + bb) + (c + dd);
      }
    }
    double half_sum = 0.0;
    for (std::size_t i = 0; i < half.numel(); ++i) half_sum += half[i];
    window_exact = window_exact && (half_sum == window_sum);
  }
  o.require(worst_full < 1e-9,
            "full-map mass error " + std::to_string(worst_full));
  o.require(worst_half < 1e-9,
            "half-map mass error " + std::to_string(worst_half));
  o.require(window_exact, "downscale mass not bit-exact in window order");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max |mass-N| full %.2e half %.2e",
                worst_full, worst_half);
  o.note(buf);
  return o;
}

// --------------------------------------------------------------------------
// C3: output geometry over a grid of even input sizes.

Outcome c3_geometry() {
  Outcome o;
  ModelParams params = init_params(51);
  const std::size_t sizes[] = {16, 32, 48, 64, 96, 128, 192, 256};
  for (std::size_t h : sizes) {
    Tensor img({1, 3, h, h}, 0.25);
    Tensor out = forward(params, img);
    o.require(out.shape() == std::vector<std::size_t>{1, 1, h / 2, h / 2},
              "square " + std::to_string(h));
  }
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{16, 256},
                      {256, 16},
                      {64, 128}}) {
    Tensor img({1, 3, h, w}, 0.25);
    Tensor out = forward(params, img);
    o.require(out.shape() == std::vector<std::size_t>{1, 1, h / 2, w / 2},
              "rect " + std::to_string(h) + "x" + std::to_string(w));
  }
  o.note("8 square + 3 rectangular sizes, all exactly (H/2, W/2, 1ch)");
  return o;
}

// --------------------------------------------------------------------------
// C4: complexity accounting.

Outcome c4_complexity() {
  Outcome o;
  ModelParams params = init_params(61);
  const auto rep = complexity_report(params, 512, 640, 4);
  o.require(rep.param_count == 60545,
            "param count " + std::to_string(rep.param_count) + " != 60545");
  o.require(rep.param_count >= 40000 && rep.param_count <= 70000,
            "outside the 0.04M..0.07M band");
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "this manifest: %zu params (%.4f M), %.2f GMAC at 512x640; "
                "published reference: 0.05 M, 4.85 GMAC (the prose admits "
                "two readings of the column layers; both numbers reported)",
                rep.param_count, rep.param_count / 1e6, rep.mac_count / 1e9);
  o.note(buf);
  return o;
}

// --------------------------------------------------------------------------
// C5: metric identities.

Outcome c5_metrics() {
  Outcome o;
  Rng rng(71);

  // Single-patch game equals the absolute count error, bit for bit.
  bool single_exact = true;
  for (int iter = 0; iter < 50; ++iter) {
    Tensor pred = oracle::random_tensor({8, 8}, rng, 0.0, 1.0);
    Tensor gt = oracle::random_tensor({8, 8}, rng, 0.0, 1.0);
    double ps = 0.0, gs = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
      ps += pred[i];
      gs += gt[i];
    }
    single_exact = single_exact &&
                   (game_image(pred, gt, GridSetting::power(0)) ==
                    std::fabs(ps - gs));
  }
  o.require(single_exact, "single-patch game != count error");

  // 4x4 game against the brute-force patch oracle.
  double worst_game = 0.0;
  for (int iter = 0; iter < 50; ++iter) {
    Tensor pred = oracle::random_tensor({8, 8}, rng, 0.0, 1.0);
    Tensor gt = oracle::random_tensor({8, 8}, rng, 0.0, 1.0);
    double want = 0.0;
    for (std::size_t gy = 0; gy < 4; ++gy) {
      for (std::size_t gx = 0; gx < 4; ++gx) {
        double dp = 0.0, dg = 0.0;
        for (std::size_t y = gy * 2; y < gy * 2 + 2; ++y) {
          for (std::size_t x = gx * 2; x < gx * 2 + 2; ++x) {
            dp += pred.at2(y, x);
            dg += gt.at2(y, x);
          }
        }
        want += std::fabs(dp - dg);
      }
    }
    worst_game = std::max(
        worst_game,
        std::fabs(game_image(pred, gt, GridSetting::explicit_grid(4, 4)) -
                  want));
  }
  o.require(worst_game < 1e-12, "4x4 game oracle gap " + std::to_string(worst_game));

  // ssim(x, x) == 1 exactly.
  Tensor x = oracle::random_tensor({16, 16}, rng, 0.0, 2.0);
  o.require(ssim(x, x) == 1.0, "ssim(x,x) != 1");
  Tensor flat({8, 8}, 3.25);
  o.require(ssim(flat, flat) == 1.0, "ssim(const,const) != 1");

  // PSNR closed form: 0.9 vs 1.0 with peak 1 is exactly 20 dB.
  Tensor ones({8, 8}, 1.0);
  Tensor nine({8, 8}, 0.9);
  o.require(std::fabs(psnr(nine, ones, 1.0) - 20.0) < 1e-9,
            "psnr closed form");

  // Aggregate GAME >= aggregate MAE on 100 random pairs.
  std::vector<std::string> ids;
  std::vector<Tensor> preds, gts;
  for (int i = 0; i < 100; ++i) {
    ids.push_back("r" + std::to_string(i));
    preds.push_back(oracle::random_tensor({8, 8}, rng, 0.0, 1.0));
    gts.push_back(oracle::random_tensor({8, 8}, rng, 0.0, 1.0));
  }
  const auto rep = evaluate_maps(ids, preds, gts);
  o.require(rep.game >= rep.mae, "aggregate GAME < aggregate MAE");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "aggregate mae %.4f game %.4f", rep.mae,
                rep.game);
  o.note(buf);
  return o;
}

// --------------------------------------------------------------------------
// C6: curriculum invariants over 1000 randomized score sets.

Outcome c6_curriculum() {
  Outcome o;
  Rng rng(81);
  for (int iter = 0; iter < 1000 && o.pass; ++iter) {
    const std::size_t n = 1 + rng.index(60);
    std::vector<DifficultyScore> scores;
    for (std::size_t i = 0; i < n; ++i) {
      scores.push_back({"s" + std::to_string(i),
                        std::floor(rng.uniform(0.0, 8.0)), "acc"});
    }
    const std::size_t bs = 1 + rng.index(9);
    const std::uint64_t seed = rng.next_u64();
    const CurriculumPlan plan = build_plan(scores, bs, seed);

    std::set<std::string> seen;
    std::size_t total = 0;
    double prev_mean = -1.0;
    for (const auto& batch : plan.batches) {
      o.require(!batch.empty() && batch.size() <= bs, "batch size bounds");
      double mean = 0.0;
      for (const auto& id : batch) {
        o.require(seen.insert(id).second, "duplicate sample in plan");
        ++total;
        for (const auto& s : scores) {
          if (s.sample_id == id) mean += s.score;
        }
      }
      mean /= static_cast<double>(batch.size());
      o.require(mean >= prev_mean, "batch means decreased");
      prev_mean = mean;
    }
    o.require(total == n, "plan does not cover the sample set");

    const CurriculumPlan again = build_plan(scores, bs, seed);
    o.require(again.batches == plan.batches, "plan not deterministic");
  }
  o.note("1000 randomized score sets");
  return o;
}

// --------------------------------------------------------------------------
// C7: end-to-end overfit fixture.

Outcome c7_overfit(std::string* summary_out) {
  Outcome o;
  auto dataset = synth_dataset(8, 64, 1001, 4, 11);
  TrainConfig cfg;  // lr 1e-4, batch 4, curriculum on: struct defaults
  cfg.max_epochs = 700;  // 2 steps/epoch -> 1400 optimizer steps
  cfg.eval_every = 50;
  cfg.seed = 2024;
  cfg.density.sigma = 2.0;
  cfg.threads = 0;

  const auto t0 = std::chrono::steady_clock::now();
  TrainResult run1 = train(dataset, cfg);
  const auto t1 = std::chrono::steady_clock::now();
  const double minutes =
      std::chrono::duration<double>(t1 - t0).count() / 60.0;

  o.require(run1.steps.size() <= 2000, "step budget exceeded");
  o.require(run1.final_train_mae < 1.0,
            "train MAE " + std::to_string(run1.final_train_mae) + " >= 1.0");
  o.require(run1.loss_window_ok, "smoothed loss increased over a 200-step window");

  TrainResult run2 = train(dataset, cfg);
  const bool identical = serialize_checkpoint(run1.params) ==
                         serialize_checkpoint(run2.params);
  o.require(identical, "same-seed checkpoints differ");

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "train MAE %.4f after %zu steps (%.1f min), rerun %s",
                run1.final_train_mae, run1.steps.size(), minutes,
                identical ? "byte-identical" : "DIFFERS");
  o.note(buf);
  if (summary_out != nullptr) *summary_out = buf;
  return o;
}

// --------------------------------------------------------------------------
// C8: curriculum on/off comparison report (emitted, not asserted).

Outcome c8_comparison() {
  Outcome o;
  auto dataset = synth_dataset(64, 48, 2002, 2, 12);
  TrainConfig cfg;
  cfg.max_epochs = 20;  // 16 steps/epoch -> 320 steps
  cfg.eval_every = 0;
  cfg.seed = 7;
  cfg.density.sigma = 2.0;

  TrainConfig on = cfg;
  on.curriculum = true;
  TrainConfig off = cfg;
  off.curriculum = false;

  const TrainResult r_on = train(dataset, on);
  const TrainResult r_off = train(dataset, off);

  std::filesystem::create_directories("acceptance_artifacts");
  std::ofstream rep("acceptance_artifacts/curriculum_comparison.txt");
  rep << "curriculum comparison on a 64-scene synthetic set (48x48, seed 7,\n"
      << "320 optimizer steps, identical init and augmentation draws)\n\n";
  rep << "curriculum on : final train MAE " << r_on.final_train_mae << "\n";
  rep << "curriculum off: final train MAE " << r_off.final_train_mae << "\n\n";
  rep << "final-step loss on  " << r_on.steps.back().loss << "\n";
  rep << "final-step loss off " << r_off.steps.back().loss << "\n";
  rep << "\nno quantitative delta is asserted; this report is archived for\n"
      << "inspection alongside the training logs.\n";
  rep.close();

  o.require(std::filesystem::exists("acceptance_artifacts/curriculum_comparison.txt"),
            "report not written");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "MAE on %.3f / off %.3f (report archived)",
                r_on.final_train_mae, r_off.final_train_mae);
  o.note(buf);
  return o;
}

// --------------------------------------------------------------------------
// C9: conv oracle equivalence over 500 random configurations.

Outcome c9_conv_oracle() {
  Outcome o;
  Rng rng(91);
  const std::size_t kernels[][2] = {{1, 3}, {3, 1}, {3, 3}, {5, 5}, {1, 1}};
  double worst = 0.0;
  for (int iter = 0; iter < 500; ++iter) {
    const auto& k = kernels[rng.index(5)];
    ConvSpec spec;
    spec.out_channels = 1 + rng.index(4);
    spec.kernel_h = k[0];
    spec.kernel_w = k[1];
    spec.stride = 1 + rng.index(2);
    spec.padding = rng.bernoulli(0.5)
                       ? Padding::same(k[0], k[1])
                       : Padding{rng.index(3), rng.index(3), rng.index(3),
                                 rng.index(3)};
    spec.bias = rng.bernoulli(0.5);
    const std::size_t in_ch = 1 + rng.index(4);
    const std::size_t h = std::max<std::size_t>(spec.kernel_h, 2) + rng.index(7);
    const std::size_t w = std::max<std::size_t>(spec.kernel_w, 2) + rng.index(7);
    Tensor input =
        oracle::random_tensor({1 + rng.index(2), in_ch, h, w}, rng);
    Tensor weights = oracle::random_tensor(
        {spec.out_channels, in_ch, spec.kernel_h, spec.kernel_w}, rng);
    Tensor bias = oracle::random_tensor({spec.out_channels}, rng);
    const Tensor* bp = spec.bias ? &bias : nullptr;
    Tensor got = conv2d_forward(input, weights, bp, spec);
    Tensor want = oracle::conv2d_reference(input, weights, bp, spec);
    if (!got.same_shape(want)) {
      o.require(false, "shape mismatch at iteration " + std::to_string(iter));
      break;
    }
    for (std::size_t i = 0; i < got.numel(); ++i) {
      worst = std::max(worst, std::fabs(got[i] - want[i]));
    }
  }
  o.require(worst < 1e-12, "max deviation " + std::to_string(worst));
  char buf[96];
  std::snprintf(buf, sizeof(buf), "500 configurations, max |diff| %.2e", worst);
  o.note(buf);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> fn;
  };
  std::string c7_summary;
  const std::vector<Criterion> criteria = {
      {"C1 gradient correctness", c1_gradients},
      {"C2 count conservation", c2_count_conservation},
      {"C3 output geometry", c3_geometry},
      {"C4 complexity accounting", c4_complexity},
      {"C5 metric identities", c5_metrics},
      {"C6 curriculum invariants", c6_curriculum},
      {"C7 end-to-end overfit",
       [&c7_summary] { return c7_overfit(&c7_summary); }},
      {"C8 curriculum comparison report", c8_comparison},
      {"C9 convolution oracle equivalence", c9_conv_oracle},
  };

  bool all_pass = true;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    std::printf("[%s] %s (%.1fs)%s%s\n", o.pass ? "PASS" : "FAIL", c.name,
                secs, o.detail.empty() ? "" : " -- ", o.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
