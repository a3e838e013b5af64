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

#ifndef CATHARM_TRAINER_TRAIN_HPP_
#define CATHARM_TRAINER_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "catharm/dataio/dataset.hpp"
#include "catharm/functors/model.hpp"
#include "catharm/objective/losses.hpp"
#include "catharm/pairing/pairs.hpp"

namespace catharm::trainer {

using dataio::Dataset;
using functors::ModelBundle;
using objective::LossBreakdown;
using objective::LossWeights;

enum class OptimizerKind { kAdam, kSgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

struct TrainConfig {
  int epochs = 50;
  std::size_t batch_size = 64;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  LossWeights weights;
  std::size_t folds = 5;
  std::size_t max_pairs = 4096;
  int max_power = 64;
  // Bandwidth of the MMD penalty; 0 selects the per-batch median heuristic.
  double mmd_sigma = 0.0;
  // QR retraction of orthogonal morphisms after every epoch.
  bool retract = false;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Adam or SGD over named tensors. State is keyed by parameter name.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}
  void step(const std::vector<std::pair<std::string, numcore::Tensor*>>& params,
            const std::map<std::string, numcore::Tensor>& grads);
  std::size_t steps() const { return t_; }

 private:
  OptimizerConfig config_;
  std::size_t t_ = 0;
  std::map<std::string, numcore::Tensor> m_, v_;
};

// Pairs supplied from outside the batch (image experiments). Batches are then
// formed over the pooled pair list and contain the rows those pairs touch.
struct PairSource {
  std::vector<pairing::PairSet> fixed;
  // Called at the start of every epoch when set; replaces `fixed`.
  std::function<std::vector<pairing::PairSet>(int epoch)> per_epoch;

  bool empty() const { return fixed.empty() && !per_epoch; }
};

struct EpochLog {
  int epoch = 0;
  LossBreakdown mean;  // batch means
  std::map<std::string, std::size_t> pairs;  // pairs seen per covariate
};

struct TrainResult {
  std::vector<EpochLog> log;
};

// Trains `bundle` in place on every row of `data`. Covariate specs come from
// data.covariates; covariates without external pairs are paired within the
// batch by their own policy.
TrainResult train(const Dataset& data, ModelBundle& bundle, const TrainConfig& config,
                  const PairSource& pairs = {});

// One optimizer step on a prepared batch; returns the breakdown before the step.
LossBreakdown train_step(ModelBundle& bundle, const objective::BatchData& batch,
                         const TrainConfig& config, Optimizer& optimizer);

}  // namespace catharm::trainer

#endif  // CATHARM_TRAINER_TRAIN_HPP_
