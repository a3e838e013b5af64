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

#ifndef CATHARM_METRICS_METRICS_HPP_
#define CATHARM_METRICS_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "catharm/dataio/dataset.hpp"
#include "catharm/functors/model.hpp"

namespace catharm::metrics {

using dataio::Dataset;
using functors::ModelBundle;
using numcore::Tensor;

// Percentage of rows whose argmax class matches the label.
double metric_accuracy(const ModelBundle& b, const Tensor& features, const std::vector<int>& labels);
double accuracy_of(const Tensor& probabilities, const std::vector<int>& labels);

// Unsquared biased MMD (RBF, width sigma) between row groups of `latents`;
// the mean over unordered group pairs when there are more than two.
double metric_mmd(const Tensor& latents, const std::vector<std::vector<std::size_t>>& groups,
                  double sigma = 1.0);
// Groups rows by covariate code (ascending code order).
std::vector<std::vector<std::size_t>> groups_by_code(const std::vector<int>& codes);

struct AdvOptions {
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  std::size_t repeats = 5;
  std::size_t iterations = 500;
  double l2 = 1e-3;
  // z-score latents with the probe's training split before fitting.
  bool standardize = false;
};

struct AdvResult {
  double adv = 0.0;     // balanced held-out accuracy, percent
  double chance = 0.0;  // 100 / classes
};

// Multinomial logistic probe from latents to nuisance codes, trained with
// class-balanced weights on a stratified split and averaged over repeats.
// Full-batch gradient descent with step 1/L, L the smoothness bound of the
// weighted objective.
AdvResult metric_adv(const Tensor& latents, const std::vector<int>& codes,
                     const AdvOptions& options = {});

struct TransitionResult {
  double d = 0.0;   // mean over sources
  double cs = 0.0;  // mean over sources with nonzero other-covariate vectors
  std::size_t sources = 0;
  std::size_t cs_skipped = 0;
  std::vector<std::size_t> matches;  // pool row of each source's nearest target
};

// For every pool row in bin c1: W^{c2-c1} F(s1), the nearest bin-c2 latent
// (ties to the smallest row), distance / n, and the cosine between the other
// covariates of s1 and the match (columns z-scored over the pool).
TransitionResult transition_metrics(const ModelBundle& b, const Dataset& pool,
                                    const std::string& covariate, int c1, int c2);
double metric_min_distance(const ModelBundle& b, const Dataset& pool,
                           const std::string& covariate, int c1, int c2);
double metric_cosine_similarity(const ModelBundle& b, const Dataset& pool,
                                const std::string& covariate, int c1, int c2);

struct FoldMetrics {
  double acc = 0.0;
  double mmd_x100 = 0.0;
  double adv = 0.0;
  double chance = 0.0;
  std::map<std::string, double> d;   // "covariate:c1->c2"
  std::map<std::string, double> cs;
};

struct MetricsReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<FoldMetrics> folds;
  FoldMetrics mean;
  FoldMetrics std;  // sample standard deviation (n - 1); 0 for one fold

  void aggregate();
  nlohmann::json to_json() const;
  // Fixed-width table with two decimals.
  std::string table() const;
};

std::string transition_key(const std::string& covariate, int c1, int c2);

}  // namespace catharm::metrics

#endif  // CATHARM_METRICS_METRICS_HPP_
