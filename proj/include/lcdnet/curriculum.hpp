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
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "lcdnet/errors.hpp"
#include "lcdnet/rng.hpp"

namespace lcdnet {

struct DifficultyScore {
  std::string sample_id;
  double score = 0.0;
  std::string oracle_name;
};

// Batches replayed in ascending difficulty, built once before training.
struct CurriculumPlan {
  std::vector<std::vector<std::string>> batches;
  std::size_t batch_size = 0;
  std::string policy = "static-ascending";
};

// A difficulty oracle maps a sample id to a nonnegative score. Concrete
// oracles (teacher counting error, ground-truth count, score file) are wired
// up by the caller; the scheduler itself never looks at sample content.
using DifficultyOracle = std::function<double(const std::string& sample_id)>;

inline std::vector<DifficultyScore> score_samples(
    const DifficultyOracle& oracle, const std::vector<std::string>& sample_ids,
    const std::string& oracle_name) {
  std::vector<DifficultyScore> out;
  out.reserve(sample_ids.size());
  for (const std::string& id : sample_ids) {
    double s;
    try {
      s = oracle(id);
    } catch (const std::exception& e) {
      throw DataError("difficulty oracle '" + oracle_name + "' failed on " +
                      id + ": " + e.what());
    }
    if (!std::isfinite(s) || s < 0.0) {
      throw DataError("difficulty oracle '" + oracle_name +
                      "' returned an invalid score for " + id);
    }
    out.push_back({id, s, oracle_name});
  }
  return out;
}

// Difficulty scores from a "sample_id score" text file.
inline DifficultyOracle file_oracle(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open score file " + path);
  auto table = std::make_shared<std::vector<std::pair<std::string, double>>>();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string id;
    double score;
    if (!(ss >> id >> score)) {
      throw DataError("score file " + path + ": malformed line " +
                      std::to_string(lineno));
    }
    table->emplace_back(id, score);
  }
  return [table, path](const std::string& id) {
    for (const auto& [k, v] : *table) {
      if (k == id) return v;
    }
    throw DataError("no score for " + id + " in " + path);
  };
}

// Samples sorted ascending by score and chunked sequentially into batches
// (the last batch may be short). Ties are ordered by sample_id and then
// shuffled with the seeded generator, so the plan is a deterministic
// function of (scores, batch_size, seed) regardless of input order.
inline CurriculumPlan build_plan(std::vector<DifficultyScore> scores,
                                 std::size_t batch_size, std::uint64_t seed) {
  if (scores.empty()) {
    throw ConfigError("cannot build a curriculum plan from zero samples");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");

  std::sort(scores.begin(), scores.end(),
            [](const DifficultyScore& a, const DifficultyScore& b) {
              if (a.score != b.score) return a.score < b.score;
              return a.sample_id < b.sample_id;
            });

  Rng rng(mix_seed(seed, 0x706C616Eull));
  std::size_t lo = 0;
  while (lo < scores.size()) {
    std::size_t hi = lo + 1;
    while (hi < scores.size() && scores[hi].score == scores[lo].score) ++hi;
    for (std::size_t i = hi - lo; i > 1; --i) {
      std::swap(scores[lo + i - 1], scores[lo + rng.index(i)]);
    }
    lo = hi;
  }

  CurriculumPlan plan;
  plan.batch_size = batch_size;
  for (std::size_t i = 0; i < scores.size(); i += batch_size) {
    std::vector<std::string> batch;
    for (std::size_t j = i; j < std::min(i + batch_size, scores.size()); ++j) {
      batch.push_back(scores[j].sample_id);
    }
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

// Plan file: one sample id per line, blank line between batches.
inline void write_plan(std::ostream& os, const CurriculumPlan& plan) {
  for (std::size_t b = 0; b < plan.batches.size(); ++b) {
    if (b) os << "\n";
    for (const std::string& id : plan.batches[b]) os << id << "\n";
  }
}

inline CurriculumPlan parse_plan(std::istream& is) {
  CurriculumPlan plan;
  std::vector<std::string> batch;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) {
      if (!batch.empty()) plan.batches.push_back(std::move(batch));
      batch.clear();
    } else {
      batch.push_back(line);
    }
  }
  if (!batch.empty()) plan.batches.push_back(std::move(batch));
  for (const auto& b : plan.batches) {
    plan.batch_size = std::max(plan.batch_size, b.size());
  }
  return plan;
}

}  // namespace lcdnet
