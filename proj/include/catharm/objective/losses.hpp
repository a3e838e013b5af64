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

#ifndef CATHARM_OBJECTIVE_LOSSES_HPP_
#define CATHARM_OBJECTIVE_LOSSES_HPP_

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "catharm/functors/model.hpp"
#include "catharm/functors/morphism.hpp"
#include "catharm/numcore/graph.hpp"
#include "catharm/pairing/pairs.hpp"

namespace catharm::objective {

using functors::ModelBundle;
using functors::Morphism;
using numcore::Graph;
using numcore::Node;
using numcore::Tensor;
using pairing::Pair;

inline constexpr double kDefaultCovariateLambda = 0.01;

struct LossWeights {
  double lambda_r = 0.0;
  double lambda_p = 1.0;
  double lambda_s = 1.0;
  std::map<std::string, double> lambda_per_covariate;
  double mu_orth = 0.1;

  double covariate(const std::string& name) const;
  // Throws on negative or non-finite weights.
  void validate() const;
  bool any_positive() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossBreakdown {
  double total = 0.0;
  double reconstruction = 0.0;
  double prediction = 0.0;
  std::map<std::string, double> structure;  // invariance, mmd or structure value
  double orthogonality = 0.0;

  // lambda_r Lr + lambda_p Lp + lambda_s sum_c lambda_c Lc + mu Lorth
  double recompose(const LossWeights& w) const;
};

// Mean over rows of |s - F^-1(F(s))|^2.
Node reconstruction_loss(Graph& g, ModelBundle& b, Node batch);
// Mean cross-entropy of C(F(s)) against labels.
Node prediction_loss(Graph& g, ModelBundle& b, Node batch, std::vector<int> labels);

// Graph node for W^k (k may be negative: W^T when orthogonal, else inverse).
// Powers are cached per graph so repeated exponents share nodes.
class PowerCache {
 public:
  PowerCache(Graph& g, Morphism& m, int max_power = functors::kDefaultMaxPower);
  Node power(int k);

 private:
  Graph& g_;
  Morphism& m_;
  int max_power_;
  Node w_;
  std::map<int, Node> cache_;
};

// Mean over pairs of |W^{-d} z_i - z_j|^2 with d = c_i - c_j, so W maps a
// latent one bin up. Pair indices refer to rows of `latents`. Pairs with
// d = 0 reduce to the invariance term.
Node structure_loss(Graph& g, PowerCache& powers, Node latents, const std::vector<Pair>& pairs);
// Mean over pairs of |z_i - z_j|^2.
Node invariance_loss(Graph& g, Node latents, const std::vector<Pair>& pairs);
// Biased squared MMD between two latent groups, RBF kernel of width sigma.
Node mmd_loss(Node a, Node b, double sigma);
// Mean of mmd_loss over all unordered pairs of nonempty groups.
Node mmd_groups_loss(Graph& g, Node latents, const std::vector<std::vector<std::size_t>>& groups,
                     double sigma);
// |W^T W - I|_F^2
Node orthogonality_loss(Graph& g, Node w);

// Median pairwise Euclidean distance between rows (1 when degenerate).
double median_bandwidth(const Tensor& points);

enum class TermKind { kStructure, kInvariance, kMmd };

struct CovariateTerm {
  std::string covariate;
  TermKind kind = TermKind::kInvariance;
  std::vector<Pair> pairs;                       // rows of the batch
  std::vector<std::vector<std::size_t>> groups;  // for kMmd
  double sigma = 1.0;                            // for kMmd
};

struct BatchData {
  Tensor features;          // {m, p}
  std::vector<int> labels;  // m entries when lambda_p > 0
  std::vector<CovariateTerm> terms;
};

// The full objective of one batch as a graph over the bundle parameters.
struct LossGraph {
  Graph graph;
  Node total;
  Node reconstruction, prediction, orthogonality;
  std::map<std::string, Node> structure;

  LossBreakdown breakdown() const;  // after graph.forward()
};

std::unique_ptr<LossGraph> build_total_loss(ModelBundle& b, const BatchData& batch,
                                            const LossWeights& w,
                                            int max_power = functors::kDefaultMaxPower);

// Convenience: builds, evaluates and returns the breakdown.
LossBreakdown total_loss(ModelBundle& b, const BatchData& batch, const LossWeights& w);

}  // namespace catharm::objective

#endif  // CATHARM_OBJECTIVE_LOSSES_HPP_
