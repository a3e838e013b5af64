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

#include "catharm/cli/render.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"
#include "catharm/numcore/grad_check.hpp"
#include "catharm/numcore/ops.hpp"
#include "catharm/objective/losses.hpp"

namespace catharm::cli {

using nlohmann::json;
using numcore::Graph;
using numcore::Node;
using numcore::Tensor;

std::string pgm_grid(const std::vector<std::vector<Tensor>>& tiles, std::size_t tile_rows,
                     std::size_t tile_cols) {
  std::size_t cols = 0;
  for (const auto& row : tiles) cols = std::max(cols, row.size());
  if (tiles.empty() || cols == 0) fail(ErrorKind::kInvalidArgument, "empty image grid");
  const std::size_t width = cols * tile_cols + (cols - 1);
  const std::size_t height = tiles.size() * tile_rows + (tiles.size() - 1);
  std::vector<unsigned char> px(width * height, kSeparatorValue);
  for (std::size_t r = 0; r < tiles.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const Tensor* t = c < tiles[r].size() ? &tiles[r][c] : nullptr;
      if (t && t->size() != tile_rows * tile_cols) {
        fail(ErrorKind::kShapeMismatch, "tile has " + std::to_string(t->size()) + " pixels, expected " +
                                            std::to_string(tile_rows * tile_cols));
      }
      for (std::size_t y = 0; y < tile_rows; ++y) {
        for (std::size_t x = 0; x < tile_cols; ++x) {
          const double v = t ? std::clamp((*t)[y * tile_cols + x], 0.0, 1.0) : 0.0;
          px[(r * (tile_rows + 1) + y) * width + c * (tile_cols + 1) + x] =
              static_cast<unsigned char>(std::lround(v * 255.0));
        }
      }
    }
  }
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(px.begin(), px.end());
  return out;
}

std::vector<TraversalTile> traversal_tiles(const functors::ModelBundle& b, const Tensor& s,
                                           const latentnav::TraversalPlan& plan) {
  plan.validate(b);
  std::vector<TraversalTile> tiles;
  latentnav::TraversalPlan prefix;
  tiles.push_back({prefix, latentnav::generate_hypothetical(b, s, prefix)});
  for (const latentnav::PlanStep& step : plan.steps) {
    double left = step.exponent;
    prefix.steps.push_back({step.covariate, 0.0});
    while (std::abs(left) > 1e-12) {
      const double move = std::abs(left) >= 1.0 ? std::copysign(1.0, left) : left;
      prefix.steps.back().exponent += move;
      left -= move;
      tiles.push_back({prefix, latentnav::generate_hypothetical(b, s, prefix)});
    }
  }
  return tiles;
}

json hypothetical_report(const functors::ModelBundle& b, const dataio::Dataset& data,
                         const std::string& covariate, double delta) {
  if (!b.classifier) fail(ErrorKind::kInvalidArgument, "the model has no classifier");
  if (!b.morphisms.count(covariate)) {
    fail(ErrorKind::kUnknownCovariate, "the model has no morphism for '" + covariate + "'");
  }
  const auto& col = data.covariates.at(covariate);
  const latentnav::TraversalPlan plan{{{covariate, delta}}};
  const Tensor before = functors::classify(b, functors::encode(b, data.features));
  const Tensor after = latentnav::answer_hypothetical(b, data.features, plan);
  const std::size_t k = before.cols();
  std::map<int, std::vector<std::size_t>> bins;
  for (std::size_t i = 0; i < data.size(); ++i) bins[col.codes[i]].push_back(i);
  json out;
  out["covariate"] = covariate;
  out["delta"] = delta;
  out["classes"] = data.class_names;
  out["bins"] = json::array();
  for (const auto& [code, rows] : bins) {
    std::vector<double> mb(k, 0.0), ma(k, 0.0), shift(k, 0.0);
    for (std::size_t r : rows) {
      for (std::size_t c = 0; c < k; ++c) {
        mb[c] += before.at(r, c);
        ma[c] += after.at(r, c);
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      mb[c] /= static_cast<double>(rows.size());
      ma[c] /= static_cast<double>(rows.size());
      shift[c] = ma[c] - mb[c];
    }
    json bin = {{"bin", code}, {"count", rows.size()}, {"before", mb}, {"after", ma}, {"shift", shift}};
    if (static_cast<std::size_t>(code) < col.levels.size()) bin["level"] = col.levels[static_cast<std::size_t>(code)];
    out["bins"].push_back(bin);
  }
  return out;
}

namespace {

Tensor random_tensor(numcore::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = standard_normal(rng) * scale;
  return t;
}

}  // namespace

std::vector<OpCheck> grad_check_suite(std::uint64_t seed, double tolerance) {
  using namespace numcore;
  Rng rng(derive_seed(seed, "gradcheck"));
  Tensor a = random_tensor({4, 3}, rng), b = random_tensor({3, 3}, rng, 0.3);
  Tensor c = random_tensor({3}, rng), d = random_tensor({2, 3}, rng), e = random_tensor({4, 3}, rng);
  for (std::size_t i = 0; i < 3; ++i) b.at(i, i) += 2.0;
  std::vector<OpCheck> out;
  auto check = [&](const std::string& op, Graph& g) {
    const GradCheckReport r = grad_check(g, seed, tolerance);
    double worst = 0.0;
    for (const auto& p : r.parameters) worst = std::max(worst, p.max_rel_error);
    out.push_back({op, worst, r.pass});
  };
  auto unary = [&](const std::string& op, Node (*f)(Node)) {
    Graph g;
    sum_squares(add(f(g.parameter("a", a)), g.parameter("e", e)));
    check(op, g);
  };
  {
    Graph g;
    sum_squares(matmul(g.parameter("a", a), g.parameter("b", b)));
    check("matmul", g);
  }
  {
    Graph g;
    sum_squares(add(g.parameter("a", a), g.parameter("c", c)));
    check("add", g);
  }
  {
    Graph g;
    sum_squares(sub(g.parameter("a", a), g.parameter("e", e)));
    check("sub", g);
  }
  {
    Graph g;
    sum_squares(scale(g.parameter("a", a), -1.7));
    check("scale", g);
  }
  unary("tanh", numcore::tanh);
  unary("relu", numcore::relu);
  unary("sigmoid", numcore::sigmoid);
  {
    Graph g;
    softmax_cross_entropy(scale(g.parameter("a", a), 3.0), {2, 0, 1, 1});
    check("softmax_cross_entropy", g);
  }
  {
    Graph g;
    sum_squares(g.parameter("a", a));
    check("sum_squares", g);
  }
  {
    Graph g;
    sum_squares(matmul(transpose(g.parameter("a", a)), g.parameter("e", e)));
    check("transpose", g);
  }
  {
    Graph g;
    Node rows = concat({g.parameter("a", a), g.parameter("d", d)}, 0);
    Node cols = concat({g.parameter("a", a), g.parameter("e", e)}, 1);
    add(sum_squares(tanh(rows)), sum_squares(sigmoid(cols)));
    check("concat", g);
  }
  {
    Graph g;
    sum_squares(tanh(gather_rows(g.parameter("a", a), {3, 0, 0, 2})));
    check("gather_rows", g);
  }
  {
    Graph g;
    sum_squares(matmul(g.parameter("a", a), inverse(g.parameter("b", b))));
    check("inverse", g);
  }
  {
    Graph g;
    mmd_rbf(g.parameter("a", a), g.parameter("d", d), 1.3);
    check("mmd_rbf", g);
  }
  {
    // Every loss term at once, through a real bundle.
    functors::BundleShape shape{5, 3, true, functors::Activation::kSigmoid, {4}, {{"g", true}, {"h", false}}};
    functors::ModelBundle bundle = functors::make_bundle(functors::LatentSpec{3, {4}, functors::Activation::kTanh},
                                                         shape, derive_seed(seed, "bundle"));
    objective::BatchData batch;
    batch.features = random_tensor({6, 5}, rng, 0.5);
    batch.labels = {0, 1, 2, 0, 1, 2};
    batch.terms.push_back({"g", objective::TermKind::kStructure, {{0, 1, -1}, {2, 3, 2}, {4, 5, 0}}, {}, 1.0});
    batch.terms.push_back({"h", objective::TermKind::kStructure, {{1, 4, 1}, {5, 0, -2}}, {}, 1.0});
    batch.terms.push_back({"site", objective::TermKind::kInvariance, {{0, 5, 1}, {3, 2, -1}}, {}, 1.0});
    batch.terms.push_back({"scanner", objective::TermKind::kMmd, {}, {{0, 2, 4}, {1, 3, 5}}, 0.8});
    objective::LossWeights w{0.7, 1.0, 1.0, {{"g", 0.5}, {"h", 0.3}, {"site", 0.2}, {"scanner", 0.4}}, 0.1};
    auto lg = objective::build_total_loss(bundle, batch, w);
    lg->graph.forward();
    check("total_loss", lg->graph);
  }
  return out;
}

}  // namespace catharm::cli
