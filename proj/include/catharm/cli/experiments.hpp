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

#ifndef CATHARM_CLI_EXPERIMENTS_HPP_
#define CATHARM_CLI_EXPERIMENTS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "catharm/dataio/dataset.hpp"
#include "catharm/specdsl/plan.hpp"
#include "catharm/trainer/checkpoint.hpp"
#include "catharm/trainer/cv.hpp"

namespace catharm::cli {

namespace fs = std::filesystem;
using dataio::Dataset;
using functors::ModelBundle;
using nlohmann::json;
using specdsl::ExperimentPlan;

// Relative dataset paths in a spec file resolve against its directory.
fs::path resolve(const fs::path& base_dir, const std::string& path);

// The dataset named by the plan with the plan's covariates bound. Image
// experiments return the full image set; see the split helpers below.
Dataset load_dataset(const ExperimentPlan& plan, const fs::path& base_dir);

ModelBundle make_model(const ExperimentPlan& plan, std::size_t input_dim, std::size_t classes,
                       std::uint64_t seed);
trainer::EvalOptions eval_options(const ExperimentPlan& plan);

json standardizer_json(const dataio::Standardizer& s);
dataio::Standardizer standardizer_from_json(const json& j);

// ---- successor experiment

// Rows of the full image set. Per class, train_per_class shuffled images
// train; of the rest, eval_seeds seeds are taken half from label 4 and half
// from label 5 (the labels whose every +/-4 successor exists). The pool for
// the nearest-class rule is every image that is not a seed.
struct SuccessorSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> seeds;
  std::vector<std::size_t> pool;
};

SuccessorSplit successor_split(const Dataset& all, const specdsl::DatasetDirective& d);

struct SuccessorScore {
  std::size_t cases = 0;
  std::size_t hits = 0;
  double success = 0.0;       // percent
  std::map<int, double> per_d;  // percent per power
  json to_json() const;
};

SuccessorScore score_successor(const ModelBundle& b, const Dataset& all, const SuccessorSplit& split,
                               const std::string& covariate, int max_d = 4);

// ---- transform experiment

// Base rows used to build the rotation and scaling series, and disjoint
// held-out rows used for scoring.
struct TransformSplit {
  std::vector<std::size_t> base;
  std::vector<std::size_t> eval;
};

TransformSplit transform_split(const Dataset& all, const specdsl::DatasetDirective& d);

// Training set: the rotation series followed by the scaling series, both
// covariates present on every row (0 on the other series), with the
// (base, transformed) pairs of each series.
struct TransformData {
  Dataset data;
  std::vector<pairing::PairSet> pairs;
};

TransformData transform_training_set(const Dataset& all, const TransformSplit& split,
                                     const specdsl::DatasetDirective& d);

struct TransformScore {
  std::map<int, double> rotate_mse;  // k = 0..2 * rotate_steps
  std::map<int, double> scale_mse;   // k = 0..scale_steps
  // (i, j) -> MSE of W_r^i W_s^j against rotate^i(scale^j(s)).
  std::map<std::pair<int, int>, double> composite_mse;
  double generalization_ratio = 0.0;  // rotate_mse[2n] / rotate_mse[n]
  double worst_composition_ratio = 0.0;  // max composite / max(single_i, single_j)
  json to_json() const;
};

TransformScore score_transforms(const ModelBundle& b, const Dataset& all, const TransformSplit& split,
                                const specdsl::DatasetDirective& d);

// ---- full runs

struct TrainOutput {
  trainer::Checkpoint checkpoint;
  json report;
  std::string losses_csv;
  std::string summary;  // human-readable table
};

TrainOutput run_training(const ExperimentPlan& plan, const fs::path& base_dir, std::size_t threads);

// Recomputes the report of a checkpoint written by run_training.
json run_evaluation(const trainer::Checkpoint& ck, const ExperimentPlan& plan, const fs::path& base_dir,
                    std::size_t threads);

// Rows of `data` (a loaded plan dataset) scaled the way the checkpoint's
// main model saw them in training.
Dataset scaled_for(const trainer::Checkpoint& ck, const Dataset& data);

}  // namespace catharm::cli

#endif  // CATHARM_CLI_EXPERIMENTS_HPP_
