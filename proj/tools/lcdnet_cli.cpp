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

// lcdnet command-line pipeline: ground-truth generation, training,
// evaluation, complexity/latency benchmarking, synthetic data, and density
// map export. Exit codes: 0 ok, 1 usage, 2 data/config error, 3 numeric
// failure. Output files are written to a temp name and renamed on success,
// so failed commands never leave partial outputs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lcdnet/checkpoint.hpp"
#include "lcdnet/config.hpp"
#include "lcdnet/curriculum.hpp"
#include "lcdnet/dataio.hpp"
#include "lcdnet/gridio.hpp"
#include "lcdnet/metrics.hpp"
#include "lcdnet/model.hpp"
#include "lcdnet/parallel.hpp"
#include "lcdnet/pnm.hpp"
#include "lcdnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace lcdnet;

namespace {

struct GlobalOpts {
  std::optional<std::uint64_t> seed;  // overrides config-file seeds
  std::size_t threads = 0;
  bool verbose = false;
};

void vlog(const GlobalOpts& g, const std::string& msg) {
  if (g.verbose) std::cerr << "[lcdnet] " << msg << "\n";
}

std::string out_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir);
}

// ---------------------------------------------------------------------------
// gengt: render full- and half-resolution ground-truth maps for a manifest.

int cmd_gengt(const GlobalOpts& g, const std::string& manifest,
              const std::string& config_path, const std::string& out_dir) {
  KeyValueConfig cfg = KeyValueConfig::from_file(config_path);
  DensityConfig density = density_config_from(cfg);
  ensure_out_dir(out_dir);

  auto samples = load_dataset(manifest);
  std::vector<double> masses(samples.size());
  std::vector<std::pair<std::string, std::string>> outputs(samples.size());
  parallel_for(samples.size(), g.threads, [&](std::size_t i) {
    const Sample& s = samples[i];
    Tensor full = render_density(s.dots, density);
    Tensor half = downscale_target(full);
    masses[i] = full.sum();
    outputs[i] = {encode_density_grid(full), encode_density_grid(half)};
  });
  for (std::size_t i = 0; i < samples.size(); ++i) {
    write_file_atomic(out_path(out_dir, samples[i].id + "_full.dgrid"),
                      outputs[i].first);
    write_file_atomic(out_path(out_dir, samples[i].id + "_half.dgrid"),
                      outputs[i].second);
  }

  double total_count = 0.0, total_mass = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    total_count += static_cast<double>(samples[i].dots.count());
    total_mass += masses[i];
    worst = std::max(worst, std::fabs(masses[i] -
                                      static_cast<double>(samples[i].dots.count())));
  }
  std::cout << samples.size() << " images, total count " << total_count
            << ", total mass " << total_mass << ", max per-image mass error "
            << worst << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

TrainConfig train_config_from(const KeyValueConfig& cfg, const GlobalOpts& g) {
  TrainConfig t;
  t.lr = cfg.get_double("lr", t.lr);
  t.batch_size = cfg.get_size("batch_size", t.batch_size);
  t.max_epochs = cfg.get_size("max_epochs", t.max_epochs);
  t.eval_every = cfg.get_size("eval_every", t.eval_every);
  t.seed = cfg.get_u64("seed", t.seed);
  if (g.seed) t.seed = *g.seed;
  t.curriculum = cfg.get_bool("curriculum", t.curriculum);
  t.augment_enabled = cfg.get_bool("augment", t.augment_enabled);
  t.augmentation.horizontal_flip_prob =
      cfg.get_double("flip_prob", t.augmentation.horizontal_flip_prob);
  t.augmentation.brightness_delta_range = {
      cfg.get_double("brightness_min", t.augmentation.brightness_delta_range.first),
      cfg.get_double("brightness_max", t.augmentation.brightness_delta_range.second)};
  t.augmentation.contrast_factor_range = {
      cfg.get_double("contrast_min", t.augmentation.contrast_factor_range.first),
      cfg.get_double("contrast_max", t.augmentation.contrast_factor_range.second)};
  t.density = density_config_from(cfg);
  t.oracle = cfg.get_string("oracle", t.oracle);
  t.teacher_checkpoint = cfg.get_string("teacher_checkpoint", "");
  t.scores_file = cfg.get_string("scores_file", "");
  t.threads = g.threads;
  return t;
}

std::string format_train_log(const TrainResult& r) {
  std::ostringstream os;
  os << "step\tepoch\tbatch_id\tloss\tlr\twall_ms\n";
  os.precision(12);
  for (const auto& s : r.steps) {
    os << s.step << "\t" << s.epoch << "\t" << s.batch_id << "\t" << s.loss
       << "\t" << s.lr << "\t" << s.wall_ms << "\n";
  }
  return os.str();
}

std::string format_eval_log(const TrainResult& r) {
  std::ostringstream os;
  os << "step\tmae\tgame\n";
  os.precision(12);
  for (const auto& e : r.evals) {
    os << e.step << "\t" << e.mae << "\t" << e.game << "\n";
  }
  return os.str();
}

int cmd_train(const GlobalOpts& g, const std::string& manifest,
              const std::string& config_path, const std::string& out_dir) {
  KeyValueConfig cfg = KeyValueConfig::from_file(config_path);
  TrainConfig tcfg = train_config_from(cfg, g);
  ensure_out_dir(out_dir);

  auto samples = load_dataset(manifest);
  vlog(g, "training on " + std::to_string(samples.size()) + " samples");
  TrainResult result = train(samples, tcfg);

  write_file_atomic(out_path(out_dir, "train_log.tsv"),
                    format_train_log(result));
  write_file_atomic(out_path(out_dir, "eval_log.tsv"), format_eval_log(result));
  if (tcfg.curriculum) {
    std::ostringstream plan;
    write_plan(plan, result.plan);
    write_file_atomic(out_path(out_dir, "curriculum_plan.txt"), plan.str());
  }
  save_checkpoint(result.params, out_path(out_dir, "model_best.ckpt"));

  std::cout << "steps " << result.steps.size() << ", final train MAE "
            << result.final_train_mae;
  if (!result.evals.empty()) {
    std::cout << ", best MAE " << result.best_mae << " at step "
              << result.best_step;
  }
  std::cout << (result.loss_window_ok ? "" : " [loss-window flag]") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const GlobalOpts& g, const std::string& manifest,
             const std::string& config_path, const std::string& out_dir,
             const std::string& checkpoint, bool self_eval) {
  KeyValueConfig cfg = KeyValueConfig::from_file(config_path);
  DensityConfig density = density_config_from(cfg);
  GridSetting grid = GridSetting::explicit_grid(cfg.get_size("game_rows", 4),
                                                cfg.get_size("game_cols", 4));
  if (cfg.has("game_power_L")) {
    grid = GridSetting::power(cfg.get_size("game_power_L", 0));
  }
  SSIMConfig ssim_cfg;
  const std::string ssim_mode = cfg.get_string("ssim_mode", "global");
  if (ssim_mode == "windowed") {
    ssim_cfg.mode = SSIMConfig::Mode::Windowed;
    ssim_cfg.window = cfg.get_size("ssim_window", ssim_cfg.window);
  } else if (ssim_mode != "global") {
    throw ConfigError("unknown ssim_mode '" + ssim_mode + "'");
  }
  std::optional<double> psnr_max;
  if (cfg.has("psnr_max")) psnr_max = cfg.get_double("psnr_max", 0.0);

  if (!self_eval && checkpoint.empty()) {
    throw ConfigError("eval needs --checkpoint unless --self-eval is given");
  }
  ensure_out_dir(out_dir);

  auto samples = load_dataset(manifest);
  if (samples.empty()) throw DataError("evaluation manifest is empty");
  ModelParams params;
  if (!self_eval) params = load_checkpoint(checkpoint);

  std::vector<std::string> ids(samples.size());
  std::vector<Tensor> preds(samples.size()), gts(samples.size());
  parallel_for(samples.size(), g.threads, [&](std::size_t i) {
    const Sample& s = samples[i];
    ids[i] = s.id;
    gts[i] = downscale_target(render_density(s.dots, density));
    if (self_eval) {
      preds[i] = gts[i];
    } else {
      preds[i] = density_slice(forward(params, detail::as_batch1(s.image)));
    }
  });

  MetricReport rep = evaluate_maps(ids, preds, gts, grid, ssim_cfg, psnr_max);
  rep.notes = "resolution=half";
  std::ostringstream table, tsv;
  write_report_table(table, rep);
  write_report_delimited(tsv, rep);
  write_file_atomic(out_path(out_dir, "report.txt"), table.str());
  write_file_atomic(out_path(out_dir, "report.tsv"), tsv.str());

  std::cout << "MAE " << rep.mae << "  GAME(" << grid.label() << ") "
            << rep.game << "  SSIM " << rep.mean_ssim << "  PSNR "
            << rep.mean_psnr << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench

int cmd_bench(const GlobalOpts& g, const std::string& checkpoint,
              std::size_t height, std::size_t width, std::size_t iterations,
              std::size_t warmup) {
  ModelParams params = load_checkpoint(checkpoint);
  const ComplexityReport rep = complexity_report(params, height, width, 4);

  // Inference benchmarking runs in float32.
  ModelParamsT<float> fparams = params.cast<float>();
  Rng rng(g.seed.value_or(0));
  TensorF input({1, 3, height, width});
  for (std::size_t i = 0; i < input.numel(); ++i) {
    input[i] = static_cast<float>(rng.uniform());
  }

  for (std::size_t i = 0; i < warmup; ++i) {
    volatile float sink = forward(fparams, input)[0];
    (void)sink;
  }
  std::vector<double> ms(iterations);
  for (std::size_t i = 0; i < iterations; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    volatile float sink = forward(fparams, input)[0];
    (void)sink;
    const auto t1 = std::chrono::steady_clock::now();
    ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const double mean =
      std::accumulate(sorted.begin(), sorted.end(), 0.0) / sorted.size();
  const double median = sorted[sorted.size() / 2];
  const double p95 = sorted[std::min(sorted.size() - 1,
                                     static_cast<std::size_t>(
                                         std::ceil(0.95 * sorted.size()) - 1))];

  std::cout << "input " << height << "x" << width << ", " << iterations
            << " iterations (" << warmup << " warmup), float32\n";
  std::cout << "latency ms: mean " << mean << ", median " << median << ", p95 "
            << p95 << "\n";
  std::cout << "params " << rep.param_count << " ("
            << rep.param_count / 1e6 << " M), model bytes " << rep.model_bytes
            << " (" << rep.model_bytes / 1e6 << " MB), macs " << rep.mac_count
            << " (" << rep.mac_count / 1e9 << " GMAC), output "
            << rep.output_h << "x" << rep.output_w << " (1/2 scale)\n";
  std::cout << "published reference: 0.05 M params, 0.21 MB, 4.85 GMAC, "
               "1/2 output scale\n";
  return 0;
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const GlobalOpts& g, const std::string& spec_path,
              const std::string& out_dir) {
  KeyValueConfig cfg = KeyValueConfig::from_file(spec_path);
  const std::size_t scenes = cfg.get_size("scenes", 8);
  const std::string prefix = cfg.get_string("prefix", "scene");
  SynthSpec base;
  base.width = cfg.get_size("width", base.width);
  base.height = cfg.get_size("height", base.height);
  base.n_objects = cfg.get_size("n_objects", base.n_objects);
  base.object_radius_range = {
      cfg.get_double("radius_min", base.object_radius_range.first),
      cfg.get_double("radius_max", base.object_radius_range.second)};
  base.background_noise =
      cfg.get_double("background_noise", base.background_noise);
  base.seed = cfg.get_u64("seed", base.seed);
  if (g.seed) base.seed = *g.seed;
  const std::size_t n_min = cfg.get_size("n_objects_min", base.n_objects);
  const std::size_t n_max = cfg.get_size("n_objects_max", base.n_objects);
  if (n_min > n_max) throw ConfigError("n_objects_min > n_objects_max");

  ensure_out_dir(out_dir);
  std::string manifest;
  Rng count_rng(mix_seed(base.seed, 0x636F756E74ull));
  for (std::size_t i = 0; i < scenes; ++i) {
    SynthSpec spec = base;
    spec.seed = mix_seed(base.seed, i);
    spec.n_objects = n_min + count_rng.index(n_max - n_min + 1);
    auto [img, dots] = synth_scene(spec);

    Tensor gray({spec.height, spec.width});
    for (std::size_t p = 0; p < gray.numel(); ++p) gray[p] = img[p];
    const std::string img_name = prefix + std::to_string(i) + ".pgm";
    const std::string ann_name = prefix + std::to_string(i) + ".txt";
    write_file_atomic(out_path(out_dir, img_name), encode_pgm(gray));

    std::string ann;
    char buf[80];
    for (const auto& p : dots.points) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", p.x, p.y);
      ann += buf;
    }
    write_file_atomic(out_path(out_dir, ann_name), ann);
    manifest += img_name + " " + ann_name + "\n";
  }
  write_file_atomic(out_path(out_dir, "manifest.txt"), manifest);
  std::cout << scenes << " scenes written to " << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// export

int cmd_export(const std::string& map_path, const std::string& image_out) {
  Tensor map = read_density_grid(map_path);
  write_file_atomic(image_out, encode_pgm(normalize_for_export(map)));
  std::cout << "wrote " << image_out << " (" << map.extent(1) << "x"
            << map.extent(0) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lcdnet crowd-density estimation pipeline"};
  app.require_subcommand(1);

  GlobalOpts g;
  std::uint64_t seed_flag = 0;
  auto* seed_opt =
      app.add_option("--seed", seed_flag, "override config-file seeds");
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)");
  app.add_flag("--verbose", g.verbose, "extra progress output on stderr");

  std::string manifest, config_path, out_dir, checkpoint, map_path, image_out;
  bool self_eval = false;
  std::size_t height = 256, width = 256, iterations = 20, warmup = 3;

  auto* gengt = app.add_subcommand("gengt", "render ground-truth density maps");
  gengt->add_option("manifest", manifest)->required();
  gengt->add_option("config", config_path)->required();
  gengt->add_option("out_dir", out_dir)->required();

  auto* train = app.add_subcommand("train", "train on a manifest");
  train->add_option("manifest", manifest)->required();
  train->add_option("config", config_path)->required();
  train->add_option("out_dir", out_dir)->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("manifest", manifest)->required();
  eval->add_option("config", config_path)->required();
  eval->add_option("out_dir", out_dir)->required();
  eval->add_option("--checkpoint", checkpoint, "model checkpoint to evaluate");
  eval->add_flag("--self-eval", self_eval,
                 "score the ground truth against itself");

  auto* bench = app.add_subcommand("bench", "inference latency benchmark");
  bench->add_option("checkpoint", checkpoint)->required();
  bench->add_option("--height", height, "input height");
  bench->add_option("--width", width, "input width");
  bench->add_option("--iterations", iterations, "timed forward passes");
  bench->add_option("--warmup", warmup, "untimed warmup passes");

  auto* synth = app.add_subcommand("synth", "generate labeled synthetic scenes");
  synth->add_option("spec", config_path)->required();
  synth->add_option("out_dir", out_dir)->required();

  auto* exp = app.add_subcommand("export", "density map to 8-bit image");
  exp->add_option("map", map_path)->required();
  exp->add_option("image_out", image_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (*seed_opt) g.seed = seed_flag;

  try {
    if (*gengt) return cmd_gengt(g, manifest, config_path, out_dir);
    if (*train) return cmd_train(g, manifest, config_path, out_dir);
    if (*eval) {
      return cmd_eval(g, manifest, config_path, out_dir, checkpoint, self_eval);
    }
    if (*bench) {
      return cmd_bench(g, checkpoint, height, width, iterations, warmup);
    }
    if (*synth) return cmd_synth(g, config_path, out_dir);
    if (*exp) return cmd_export(map_path, image_out);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
