// Copyright 2026 The CatHarm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CATHARM_TRAINER_CV_HPP_
#define CATHARM_TRAINER_CV_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "catharm/metrics/metrics.hpp"
#include "catharm/trainer/train.hpp"

namespace catharm::trainer {

struct EvalOptions {
  // Covariate scored by MMD and ADV; empty picks the first invariant one.
  std::string nuisance;
  double mmd_sigma = 1.0;
  metrics::AdvOptions adv;
  // Score MMD and ADV on latents of every row (under the fold's model)
  // rather than only the held-out fold.
  bool invariance_all_rows = true;
};

// Scores one trained bundle. `test` supplies ACC and the D/CS transitions;
// `probe` the rows for MMD and the ADV probe.
metrics::FoldMetrics evaluate(const ModelBundle& b, const Dataset& test, const Dataset& probe,
                              const EvalOptions& options);

using BundleFactory = std::function<ModelBundle(std::uint64_t seed)>;

struct FoldRun {
  std::vector<std::size_t> test_rows;
  ModelBundle bundle;
  TrainResult log;
};

struct CvResult {
  std::vector<FoldRun> runs;
  metrics::MetricsReport report;
};

// Stratified k-fold cross validation. Numeric columns are standardized with
// statistics of each training split. Folds run on up to `threads` workers;
// results do not depend on the worker count.
CvResult train_cv(const Dataset& data, const BundleFactory& make, const TrainConfig& config,
                  const EvalOptions& options = {}, std::size_t threads = 1);

// Re-scores the fold models of an earlier train_cv run on the same data and
// config. The result matches the train-time report exactly.
metrics::MetricsReport evaluate_cv(const Dataset& data, const std::vector<ModelBundle>& bundles,
                                   const TrainConfig& config, const EvalOptions& options = {},
                                   std::size_t threads = 1);

// Test rows of every fold, as used by train_cv.
std::vector<std::vector<std::size_t>> cv_folds(const Dataset& data, const TrainConfig& config);

}  // namespace catharm::trainer

#endif  // CATHARM_TRAINER_CV_HPP_
