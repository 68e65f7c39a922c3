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
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lcdnet/adam.hpp"
#include "lcdnet/checkpoint.hpp"
#include "lcdnet/curriculum.hpp"
#include "lcdnet/dataio.hpp"
#include "lcdnet/errors.hpp"
#include "lcdnet/gradcheck.hpp"
#include "lcdnet/groundtruth.hpp"
#include "lcdnet/metrics.hpp"
#include "lcdnet/model.hpp"
#include "lcdnet/parallel.hpp"

namespace lcdnet {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 4;
  std::size_t max_epochs = 1;
  std::size_t eval_every = 0;  // optimizer steps between evals; 0 disables
  std::uint64_t seed = 0;
  bool curriculum = true;
  bool augment_enabled = true;
  AugmentationConfig augmentation;
  DensityConfig density;
  // Difficulty oracle: count_proxy | teacher | file.
  std::string oracle = "count_proxy";
  std::string teacher_checkpoint;
  std::string scores_file;
  std::size_t threads = 0;  // 0 = hardware concurrency

  void validate() const {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    augmentation.validate();
    density.validate();
  }
};

struct LossResult {
  double value = 0.0;
  Tensor grad;
};

// Batch loss: mean over the batch of the pixelwise squared distance between
// predicted and target maps; gradient is 2 (pred - target) / batch.
inline LossResult loss_and_grad(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw DimensionError("loss: prediction " + pred.shape_string() +
                         " vs target " + target.shape_string());
  }
  const double inv_batch =
      1.0 / static_cast<double>(pred.rank() == 4 ? pred.extent(0) : 1);
  LossResult res;
  res.grad = Tensor(pred.shape());
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
    res.grad[i] = 2.0 * d * inv_batch;
  }
  res.value = acc * inv_batch;
  return res;
}

struct TrainStepLog {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::string batch_id;
  double loss = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;
};

struct TrainEvalLog {
  std::size_t step = 0;
  double mae = 0.0;
  double game = 0.0;
};

struct TrainResult {
  ModelParams params;  // best-MAE checkpoint (final params if never evaluated)
  std::vector<TrainStepLog> steps;
  std::vector<TrainEvalLog> evals;
  CurriculumPlan plan;  // populated when curriculum ordering is on
  std::vector<std::vector<std::string>> first_epoch_batches;  // realized order
  double best_mae = std::numeric_limits<double>::infinity();
  std::size_t best_step = 0;
  double final_train_mae = std::numeric_limits<double>::infinity();
  // Smoothed-loss monotonicity: disjoint 200-step window means may not grow
  // by more than 5%; a violation flags the run.
  bool loss_window_ok = true;
};

namespace detail {

inline Tensor as_batch1(const Tensor& image3) {
  return Tensor::from_data(
      {1, image3.extent(0), image3.extent(1), image3.extent(2)},
      image3.values());
}

inline double predicted_count(const ModelParams& params, const Tensor& image3) {
  const Tensor out = forward(params, as_batch1(image3));
  return count_from_density(density_slice(out));
}

inline DifficultyOracle make_oracle(const TrainConfig& config,
                                    const std::vector<Sample>& dataset,
                                    std::string& oracle_name) {
  auto find_sample = [&dataset](const std::string& id) -> const Sample& {
    for (const Sample& s : dataset) {
      if (s.id == id) return s;
    }
    throw DataError("unknown sample id " + id);
  };
  if (config.oracle == "count_proxy") {
    oracle_name = "count_proxy";
    return [find_sample](const std::string& id) {
      return static_cast<double>(find_sample(id).dots.count());
    };
  }
  if (config.oracle == "teacher") {
    oracle_name = "teacher_error";
    if (config.teacher_checkpoint.empty()) {
      throw ConfigError("teacher oracle needs teacher_checkpoint");
    }
    auto teacher = std::make_shared<ModelParams>(
        load_checkpoint(config.teacher_checkpoint));
    return [teacher, find_sample](const std::string& id) {
      const Sample& s = find_sample(id);
      return std::fabs(predicted_count(*teacher, s.image) -
                       static_cast<double>(s.dots.count()));
    };
  }
  if (config.oracle == "file") {
    oracle_name = "file";
    if (config.scores_file.empty()) {
      throw ConfigError("file oracle needs scores_file");
    }
    return file_oracle(config.scores_file);
  }
  throw ConfigError("unknown difficulty oracle '" + config.oracle + "'");
}

inline bool check_loss_windows(const std::vector<TrainStepLog>& steps) {
  constexpr std::size_t kWindow = 200;
  if (steps.size() < 2 * kWindow) return true;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start + kWindow <= steps.size();
       start += kWindow) {
    double mean = 0.0;
    for (std::size_t i = start; i < start + kWindow; ++i) {
      mean += steps[i].loss;
    }
    mean /= kWindow;
    if (mean > prev * 1.05) return false;
    prev = mean;
  }
  return true;
}

}  // namespace detail

// Curriculum-ordered (or seeded-shuffled) training with Adam. Gradients are
// computed per image and reduced in batch order, so results are identical
// for any thread count and reproducible bit-for-bit per seed.
inline TrainResult train(const std::vector<Sample>& dataset,
                         const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw ConfigError("training dataset is empty");
  for (const Sample& s : dataset) s.dots.validate();

  // Whole-image training: mixed image sizes degrade to single-image batches.
  std::size_t batch_size = config.batch_size;
  for (const Sample& s : dataset) {
    if (!s.image.same_shape(dataset.front().image)) {
      batch_size = 1;
      break;
    }
  }

  TrainResult result;
  ModelParams current = init_params(config.seed);

  std::vector<std::string> ids;
  ids.reserve(dataset.size());
  for (const Sample& s : dataset) ids.push_back(s.id);
  auto sample_index = [&dataset](const std::string& id) -> std::size_t {
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset[i].id == id) return i;
    }
    throw DataError("plan names unknown sample " + id);
  };

  if (config.curriculum) {
    std::string oracle_name;
    DifficultyOracle oracle = detail::make_oracle(config, dataset, oracle_name);
    result.plan = build_plan(score_samples(oracle, ids, oracle_name),
                             batch_size, config.seed);
  }

  std::vector<Tensor*> params = param_tensors(current);
  const std::vector<std::string> names = param_names(current);
  AdamState adam(param_tensors(std::as_const(current)),
                 AdamConfig{config.lr, 0.9, 0.999, 1e-8});

  const std::uint64_t aug_seed =
      mix_seed(config.seed, config.augmentation.seed);
  const std::size_t threads = resolve_thread_count(config.threads);

  // Unaugmented half-resolution targets, shared by every evaluation pass.
  std::vector<Tensor> eval_targets(dataset.size());
  parallel_for(dataset.size(), threads, [&](std::size_t i) {
    eval_targets[i] =
        downscale_target(render_density(dataset[i].dots, config.density));
  });

  auto eval_train = [&](const ModelParams& p) {
    std::vector<double> abs_err(dataset.size());
    std::vector<double> game_err(dataset.size());
    parallel_for(dataset.size(), threads, [&](std::size_t i) {
      const Sample& s = dataset[i];
      const Tensor pred = density_slice(forward(p, detail::as_batch1(s.image)));
      abs_err[i] = std::fabs(count_from_density(pred) -
                             static_cast<double>(s.dots.count()));
      game_err[i] =
          game_image(pred, eval_targets[i], GridSetting::explicit_grid(4, 4));
    });
    double mae_acc = 0.0, game_acc = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      mae_acc += abs_err[i];
      game_acc += game_err[i];
    }
    return std::pair<double, double>{mae_acc / dataset.size(),
                                     game_acc / dataset.size()};
  };

  ModelParams best;
  bool have_best = false;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::vector<std::vector<std::string>> batches;
    if (config.curriculum) {
      batches = result.plan.batches;
    } else {
      std::vector<std::string> order = ids;
      Rng rng(mix_seed(config.seed, 0x657065ull, epoch));
      rng.shuffle(order);
      for (std::size_t i = 0; i < order.size(); i += batch_size) {
        batches.emplace_back(
            order.begin() + i,
            order.begin() + std::min(i + batch_size, order.size()));
      }
    }
    if (epoch == 0) result.first_epoch_batches = batches;

    std::size_t epoch_pos = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::vector<std::string>& batch = batches[b];
      const double inv_batch = 1.0 / static_cast<double>(batch.size());

      std::vector<ModelGrads> image_grads(batch.size());
      std::vector<double> image_sq(batch.size());
      const std::size_t base_pos = epoch_pos;
      parallel_for(batch.size(), threads, [&](std::size_t k) {
        const Sample& s = dataset[sample_index(batch[k])];
        Tensor image = s.image;
        DotMap dots = s.dots;
        if (config.augment_enabled) {
          AugmentationConfig aug = config.augmentation;
          aug.seed = aug_seed;
          auto [aug_image, aug_dots] =
              augment(image, dots, aug, mix_seed(epoch, base_pos + k));
          image = std::move(aug_image);
          dots = std::move(aug_dots);
        }
        const Tensor target =
            downscale_target(render_density(dots, config.density));
        ForwardTrace trace = forward_trace(current, detail::as_batch1(image));
        double sq = 0.0;
        Tensor grad_out(trace.output.shape());
        for (std::size_t i = 0; i < trace.output.numel(); ++i) {
          const double d = trace.output[i] - target[i];
          sq += d * d;
          grad_out[i] = 2.0 * d * inv_batch;
        }
        image_sq[k] = sq;
        image_grads[k] = backward(current, trace, grad_out);
      });
      epoch_pos += batch.size();

      double loss = 0.0;
      for (double sq : image_sq) loss += sq;
      loss *= inv_batch;
      if (!std::isfinite(loss)) {
        std::string about;
        for (const auto& id : batch) about += id + " ";
        throw NumericError("non-finite loss at step " + std::to_string(step) +
                           " on batch: " + about);
      }

      // Fixed-order reduction keeps results independent of the thread count.
      ModelGrads total = std::move(image_grads[0]);
      for (std::size_t k = 1; k < image_grads.size(); ++k) {
        for (std::size_t l = 0; l < total.size(); ++l) {
          for (std::size_t i = 0; i < total[l].weights.numel(); ++i) {
            total[l].weights[i] += image_grads[k][l].weights[i];
          }
          for (std::size_t i = 0; i < total[l].bias.numel(); ++i) {
            total[l].bias[i] += image_grads[k][l].bias[i];
          }
        }
      }

      adam_step(params, grad_tensors(total), adam, names);
      ++step;

      const auto t1 = std::chrono::steady_clock::now();
      TrainStepLog log;
      log.step = step;
      log.epoch = epoch;
      log.batch_id = "e" + std::to_string(epoch) + "b" + std::to_string(b);
      log.loss = loss;
      log.lr = config.lr;
      log.wall_ms =
          std::chrono::duration<double, std::milli>(t1 - t0).count();
      result.steps.push_back(log);

      if (config.eval_every > 0 && step % config.eval_every == 0) {
        const auto [mae_v, game_v] = eval_train(current);
        result.evals.push_back({step, mae_v, game_v});
        if (mae_v < result.best_mae) {
          result.best_mae = mae_v;
          result.best_step = step;
          best = current;
          have_best = true;
        }
      }
    }
  }

  result.params = have_best ? std::move(best) : std::move(current);
  result.loss_window_ok = detail::check_loss_windows(result.steps);
  if (config.max_epochs > 0) {
    const auto [final_mae, final_game] = eval_train(result.params);
    (void)final_game;
    result.final_train_mae = final_mae;
  }
  return result;
}

// Full-model gradient check: analytic gradients of the batch loss against
// central finite differences over a random subsample of parameters.
inline GradCheckReport model_grad_check(ModelParams& params,
                                        const Tensor& image4,
                                        const Tensor& target4,
                                        GradCheckOptions opt = {}) {
  ForwardTrace trace = forward_trace(params, image4);
  LossResult loss = loss_and_grad(trace.output, target4);
  ModelGrads grads = backward(params, trace, loss.grad);
  std::vector<Tensor*> tensors = param_tensors(params);
  std::vector<Tensor> analytic = grad_tensor_copies(grads);
  auto loss_fn = [&params, &image4, &target4]() {
    return loss_and_grad(forward(params, image4), target4).value;
  };
  return grad_check(tensors, analytic, loss_fn, opt);
}

}  // namespace lcdnet
