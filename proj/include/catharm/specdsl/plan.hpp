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

#ifndef CATHARM_SPECDSL_PLAN_HPP_
#define CATHARM_SPECDSL_PLAN_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "catharm/functors/model.hpp"
#include "catharm/pairing/covariate.hpp"
#include "catharm/trainer/train.hpp"

namespace catharm::specdsl {

enum class DatasetKind { kTabular, kMnist, kSynthetic };
enum class Experiment { kNone, kSuccessor, kTransforms };

struct DatasetDirective {
  DatasetKind kind = DatasetKind::kTabular;
  // tabular
  std::string csv;
  std::string schema;
  std::size_t subsample = 0;  // 0 keeps every row
  // mnist
  std::string images;
  std::string labels;
  Experiment experiment = Experiment::kNone;
  std::size_t train_per_class = 400;
  std::size_t eval_seeds = 100;
  std::size_t base_images = 128;
  int rotate_steps = 0;  // transform copies per base image
  int scale_steps = 0;
  // synthetic
  std::size_t samples = 5000;
  std::size_t features = 8;
  double effect = 2.0;
  std::uint64_t data_seed = 0;

  friend bool operator==(const DatasetDirective&, const DatasetDirective&) = default;
};

struct MetricsSelection {
  std::string nuisance;  // empty: first invariant covariate
  double mmd_sigma = 1.0;
  std::size_t adv_repeats = 5;
  double adv_train_fraction = 0.7;
  std::size_t adv_iterations = 500;
  double adv_l2 = 1e-3;
  bool all_rows = true;
  std::vector<std::string> select = {"acc", "adv", "cs", "d", "mmd"};

  friend bool operator==(const MetricsSelection&, const MetricsSelection&) = default;
};

struct ExperimentPlan {
  DatasetDirective dataset;
  functors::LatentSpec latent;
  functors::Activation decoder_output = functors::Activation::kLinear;
  std::vector<std::size_t> classifier_hidden;
  std::vector<pairing::CovariateSpec> covariates;
  trainer::TrainConfig train;  // train.weights holds the loss weights
  MetricsSelection metrics;

  friend bool operator==(const ExperimentPlan&, const ExperimentPlan&) = default;
};

struct ParseError {
  std::size_t line = 0;
  std::size_t column = 0;
  std::string message;
  std::string token;

  std::string to_string() const;  // "line:col: message (near 'token')"
};

struct ParseResult {
  std::optional<ExperimentPlan> plan;
  std::vector<ParseError> errors;

  bool ok() const { return plan.has_value(); }
};

// Never throws on malformed input; every problem found is reported.
ParseResult parse(std::string_view source);
// Reads the file; an unreadable file is a single error at line 0.
ParseResult parse_file(const std::string& path);

// Canonical text: fixed block order, keys sorted alphabetically, every field
// written out. Comments are not preserved.
std::string format_plan(const ExperimentPlan& plan);

// Hash of the canonical text with the seed cleared, as 16 hex digits.
std::string config_hash(const ExperimentPlan& plan);

enum class TermKind { kReconstruction, kPrediction, kStructure, kInvariance, kMmd, kOrthogonality };
std::string to_string(TermKind k);

struct LossTerm {
  TermKind kind;
  std::string covariate;  // empty for reconstruction and prediction
  double weight = 0.0;    // effective multiplier in the total loss
  pairing::PairPolicy policy = pairing::PairPolicy::kAll;

  friend bool operator==(const LossTerm&, const LossTerm&) = default;
};

// The loss terms read off the plan, in declaration order: reconstruction,
// prediction, then per covariate its structure/invariance/mmd term, then one
// orthogonality term per orthogonal morphism.
std::vector<LossTerm> compile(const ExperimentPlan& plan);

// Architecture implied by the plan for a dataset of the given shape.
functors::BundleShape bundle_shape(const ExperimentPlan& plan, std::size_t input_dim,
                                   std::size_t classes);

}  // namespace catharm::specdsl

#endif  // CATHARM_SPECDSL_PLAN_HPP_
