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

#include "catharm/objective/losses.hpp"

#include <algorithm>
#include <cmath>

#include "catharm/common/error.hpp"
#include "catharm/numcore/ops.hpp"

namespace catharm::objective {

namespace ops = numcore;

double LossWeights::covariate(const std::string& name) const {
  auto it = lambda_per_covariate.find(name);
  return it == lambda_per_covariate.end() ? kDefaultCovariateLambda : it->second;
}

void LossWeights::validate() const {
  auto check = [](double v, const std::string& what) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorKind::kInvalidArgument, what + " must be a finite non-negative weight");
    }
  };
  check(lambda_r, "lambda_r");
  check(lambda_p, "lambda_p");
  check(lambda_s, "lambda_s");
  check(mu_orth, "mu_orth");
  for (const auto& [name, v] : lambda_per_covariate) check(v, "lambda for " + name);
}

bool LossWeights::any_positive() const {
  if (lambda_r > 0 || lambda_p > 0 || mu_orth > 0) return true;
  if (lambda_s > 0) {
    if (lambda_per_covariate.empty()) return true;
    for (const auto& [name, v] : lambda_per_covariate) {
      if (v > 0) return true;
    }
  }
  return false;
}

double LossBreakdown::recompose(const LossWeights& w) const {
  double s = w.lambda_r * reconstruction + w.lambda_p * prediction;
  for (const auto& [name, v] : structure) s += w.lambda_s * w.covariate(name) * v;
  return s + w.mu_orth * orthogonality;
}

namespace {

Node decoder_residual(Graph& g, ModelBundle& b, Node x, Node z) {
  if (!b.decoder) fail(ErrorKind::kInvalidArgument, "reconstruction needs a decoder");
  const double m = static_cast<double>(x.shape()[0]);
  Node rec = b.decoder->build(g, "decoder", z);
  return ops::scale(ops::sum_squares(ops::sub(rec, x)), 1.0 / m);
}

Node classifier_ce(Graph& g, ModelBundle& b, Node z, std::vector<int> labels) {
  if (!b.classifier) fail(ErrorKind::kInvalidArgument, "prediction needs a classifier");
  return ops::softmax_cross_entropy(b.classifier->build_logits(g, "classifier", z),
                                    std::move(labels));
}

void split_pairs(const std::vector<Pair>& pairs, std::vector<std::size_t>& is,
                 std::vector<std::size_t>& js) {
  for (const Pair& p : pairs) {
    is.push_back(p.i);
    js.push_back(p.j);
  }
}

}  // namespace

Node reconstruction_loss(Graph& g, ModelBundle& b, Node batch) {
  return decoder_residual(g, b, batch, b.encoder.build(g, "encoder", batch));
}

Node prediction_loss(Graph& g, ModelBundle& b, Node batch, std::vector<int> labels) {
  return classifier_ce(g, b, b.encoder.build(g, "encoder", batch), std::move(labels));
}

PowerCache::PowerCache(Graph& g, Morphism& m, int max_power)
    : g_(g), m_(m), max_power_(max_power), w_(g.parameter("morphism." + m.covariate, m.w)) {}

Node PowerCache::power(int k) {
  if (std::abs(k) > max_power_) {
    fail(ErrorKind::kPowerLimitExceeded,
         "power " + std::to_string(k) + " exceeds limit " + std::to_string(max_power_));
  }
  if (k == 0) fail(ErrorKind::kInvalidArgument, "W^0 is not built as a node");
  if (auto it = cache_.find(k); it != cache_.end()) return it->second;
  Node node;
  if (k == 1) {
    node = w_;
  } else if (k == -1) {
    node = m_.orthogonal ? ops::transpose(w_) : ops::inverse(w_);
  } else {
    const int unit = k > 0 ? 1 : -1;
    node = ops::matmul(power(k - unit), power(unit));
  }
  cache_.emplace(k, node);
  return node;
}

Node structure_loss(Graph& g, PowerCache& powers, Node latents, const std::vector<Pair>& pairs) {
  if (pairs.empty()) fail(ErrorKind::kInvalidArgument, "structure loss over no pairs");
  std::map<int, std::vector<Pair>> by_d;
  for (const Pair& p : pairs) by_d[p.d].push_back(p);
  Node sum;
  for (const auto& [d, group] : by_d) {
    std::vector<std::size_t> is, js;
    split_pairs(group, is, js);
    Node zi = ops::gather_rows(latents, std::move(is));
    Node zj = ops::gather_rows(latents, std::move(js));
    // rows: (W^k z)^T = z^T (W^k)^T
    Node moved = d == 0 ? zi : ops::matmul(zi, ops::transpose(powers.power(-d)));
    Node term = ops::sum_squares(ops::sub(moved, zj));
    sum = sum.valid() ? ops::add(sum, term) : term;
  }
  (void)g;
  return ops::scale(sum, 1.0 / static_cast<double>(pairs.size()));
}

Node invariance_loss(Graph& g, Node latents, const std::vector<Pair>& pairs) {
  if (pairs.empty()) fail(ErrorKind::kInvalidArgument, "invariance loss over no pairs");
  (void)g;
  std::vector<std::size_t> is, js;
  split_pairs(pairs, is, js);
  Node diff = ops::sub(ops::gather_rows(latents, std::move(is)),
                       ops::gather_rows(latents, std::move(js)));
  return ops::scale(ops::sum_squares(diff), 1.0 / static_cast<double>(pairs.size()));
}

Node mmd_loss(Node a, Node b, double sigma) { return ops::mmd_rbf(a, b, sigma); }

Node mmd_groups_loss(Graph& g, Node latents, const std::vector<std::vector<std::size_t>>& groups,
                     double sigma) {
  (void)g;
  std::vector<Node> parts;
  for (const auto& grp : groups) {
    if (!grp.empty()) parts.push_back(ops::gather_rows(latents, grp));
  }
  if (parts.size() < 2) fail(ErrorKind::kInvalidArgument, "mmd needs two nonempty groups");
  Node sum;
  std::size_t count = 0;
  for (std::size_t a = 0; a < parts.size(); ++a) {
    for (std::size_t b = a + 1; b < parts.size(); ++b) {
      Node term = mmd_loss(parts[a], parts[b], sigma);
      sum = sum.valid() ? ops::add(sum, term) : term;
      ++count;
    }
  }
  return count == 1 ? sum : ops::scale(sum, 1.0 / static_cast<double>(count));
}

Node orthogonality_loss(Graph& g, Node w) {
  const std::size_t n = w.shape()[0];
  Tensor eye({n, n});
  for (std::size_t i = 0; i < n; ++i) eye.at(i, i) = 1.0;
  return ops::sum_squares(ops::sub(ops::matmul(ops::transpose(w), w), g.constant(eye)));
}

double median_bandwidth(const Tensor& points) {
  std::vector<double> d;
  const std::size_t m = points.rows();
  const std::size_t n = points.cols();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        const double t = points.at(i, c) - points.at(j, c);
        s += t * t;
      }
      d.push_back(std::sqrt(s));
    }
  }
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(d.begin(), mid));
  }
  return med > 1e-12 ? med : 1.0;
}

LossBreakdown LossGraph::breakdown() const {
  LossBreakdown out;
  auto val = [this](Node n) { return n.valid() ? graph.value(n).item() : 0.0; };
  out.total = val(total);
  out.reconstruction = val(reconstruction);
  out.prediction = val(prediction);
  out.orthogonality = val(orthogonality);
  for (const auto& [name, n] : structure) out.structure[name] = val(n);
  return out;
}

std::unique_ptr<LossGraph> build_total_loss(ModelBundle& b, const BatchData& batch,
                                            const LossWeights& w, int max_power) {
  w.validate();
  auto lg = std::make_unique<LossGraph>();
  Graph& g = lg->graph;
  const std::size_t m = batch.features.rows();
  if (batch.features.rank() != 2) {
    fail(ErrorKind::kDimensionMismatch, "batch features must be a matrix");
  }
  std::vector<Node> parts;
  auto push = [&parts](Node n, double weight) {
    parts.push_back(weight == 1.0 ? n : ops::scale(n, weight));
  };

  bool needs_latent = w.lambda_r > 0 || w.lambda_p > 0;
  for (const CovariateTerm& t : batch.terms) {
    if (w.lambda_s * w.covariate(t.covariate) > 0) needs_latent = true;
  }
  Node x, z;
  if (needs_latent) {
    x = g.constant(batch.features);
    z = b.encoder.build(g, "encoder", x);
  }
  if (w.lambda_r > 0) {
    lg->reconstruction = decoder_residual(g, b, x, z);
    push(lg->reconstruction, w.lambda_r);
  }
  if (w.lambda_p > 0) {
    if (batch.labels.size() != m) {
      fail(ErrorKind::kDimensionMismatch, "labels do not match the batch");
    }
    lg->prediction = classifier_ce(g, b, z, batch.labels);
    push(lg->prediction, w.lambda_p);
  }
  std::map<std::string, std::unique_ptr<PowerCache>> caches;
  for (const CovariateTerm& t : batch.terms) {
    const double weight = w.lambda_s * w.covariate(t.covariate);
    if (!(weight > 0)) continue;
    Node term;
    switch (t.kind) {
      case TermKind::kStructure: {
        if (t.pairs.empty()) continue;
        auto it = b.morphisms.find(t.covariate);
        if (it == b.morphisms.end()) {
          fail(ErrorKind::kUnknownCovariate, "no morphism for covariate '" + t.covariate + "'");
        }
        auto& cache = caches[t.covariate];
        if (!cache) cache = std::make_unique<PowerCache>(g, it->second, max_power);
        term = structure_loss(g, *cache, z, t.pairs);
        break;
      }
      case TermKind::kInvariance:
        if (t.pairs.empty()) continue;
        term = invariance_loss(g, z, t.pairs);
        break;
      case TermKind::kMmd: {
        std::size_t nonempty = 0;
        for (const auto& grp : t.groups) nonempty += grp.empty() ? 0 : 1;
        if (nonempty < 2) continue;
        term = mmd_groups_loss(g, z, t.groups, t.sigma);
        break;
      }
    }
    lg->structure[t.covariate] = term;
    push(term, weight);
  }
  if (w.mu_orth > 0) {
    Node sum;
    for (auto& [name, mor] : b.morphisms) {
      if (!mor.orthogonal) continue;
      Node wn = g.parameter("morphism." + name, mor.w);
      Node term = orthogonality_loss(g, wn);
      sum = sum.valid() ? ops::add(sum, term) : term;
    }
    if (sum.valid()) {
      lg->orthogonality = sum;
      push(sum, w.mu_orth);
    }
  }
  Node total;
  for (Node p : parts) total = total.valid() ? ops::add(total, p) : p;
  if (!total.valid()) total = g.constant(Tensor::scalar(0.0));
  lg->total = total;
  g.set_output(total);
  return lg;
}

LossBreakdown total_loss(ModelBundle& b, const BatchData& batch, const LossWeights& w) {
  auto lg = build_total_loss(b, batch, w);
  lg->graph.forward();
  return lg->breakdown();
}

}  // namespace catharm::objective
