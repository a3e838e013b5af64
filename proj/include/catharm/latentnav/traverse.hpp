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

#ifndef CATHARM_LATENTNAV_TRAVERSE_HPP_
#define CATHARM_LATENTNAV_TRAVERSE_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "catharm/functors/model.hpp"
#include "catharm/functors/morphism.hpp"

namespace catharm::latentnav {

using functors::ModelBundle;
using numcore::Tensor;

struct PlanStep {
  std::string covariate;
  double exponent = 0.0;

  bool integral() const;
  friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

// Steps are applied in order: the first step acts on F(s) first.
struct TraversalPlan {
  std::vector<PlanStep> steps;

  // Throws kUnknownCovariate, or kFractionalPowerOnNonOrthogonal for a real
  // exponent on a general morphism.
  void validate(const ModelBundle& b) const;
  // "digit:-4,rot:2.5"; empty text is the empty plan.
  static TraversalPlan parse(const std::string& text);
  std::string to_string() const;
  friend bool operator==(const TraversalPlan&, const TraversalPlan&) = default;
};

// Latents (rows of z) moved through every step of the plan.
Tensor traverse_latent(const ModelBundle& b, const Tensor& z, const TraversalPlan& plan,
                       int max_power = functors::kDefaultMaxPower);

// F^-1(plan(F(s))); s is one sample {p} or a batch {m,p}.
Tensor generate_hypothetical(const ModelBundle& b, const Tensor& s, const TraversalPlan& plan);
// C(plan(F(s))) as class probabilities.
Tensor answer_hypothetical(const ModelBundle& b, const Tensor& s, const TraversalPlan& plan);

// Frames F^-1(W^a F(s)) for a = a_from, a_from +- step, ... up to a_to
// inclusive: floor(|a_to - a_from| / step) + 1 frames.
std::vector<Tensor> interpolate(const ModelBundle& b, const Tensor& s, const std::string& covariate,
                                double a_from, double a_to, double step);

struct NearestClass {
  int label = -1;
  double mse = 0.0;
  std::size_t index = 0;  // pool row of the best match (smallest on ties)
};

// Class of the pool image with minimum mean squared error to `image`.
NearestClass nearest_class(const Tensor& image, const Tensor& pool, const std::vector<int>& labels);

}  // namespace catharm::latentnav

#endif  // CATHARM_LATENTNAV_TRAVERSE_HPP_
