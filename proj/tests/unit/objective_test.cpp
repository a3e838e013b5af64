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

#include <gtest/gtest.h>

#include <cmath>

#include "catharm/common/error.hpp"
#include "catharm/numcore/grad_check.hpp"
#include "catharm/numcore/ops.hpp"
#include "catharm/objective/losses.hpp"

namespace catharm::objective {
namespace {

using functors::Activation;
using functors::Mlp;
using functors::MlpSpec;

Tensor random_tensor(numcore::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = scale * standard_normal(rng);
  return t;
}

Mlp identity_mlp(std::size_t p) {
  Mlp mlp(MlpSpec{{p, p}, Activation::kLinear, Activation::kLinear});
  for (std::size_t i = 0; i < p; ++i) mlp.weights[0].at(i, i) = 1.0;
  return mlp;
}

ModelBundle random_bundle(std::uint64_t seed, bool orthogonal = true) {
  functors::BundleShape shape{5, 3, true, Activation::kLinear, {}, {{"age", orthogonal}}};
  ModelBundle b = functors::make_bundle(functors::LatentSpec{4, {6}, Activation::kTanh},
                                        shape, seed);
  Rng rng(seed + 100);
  for (auto& [name, t] : b.parameters()) {
    for (double& v : t->data()) v += 0.3 * standard_normal(rng);
  }
  return b;
}

double eval(Graph& g, Node n) {
  g.set_output(n);
  return g.forward().item();
}

TEST(Reconstruction, IdentityAutoencoderIsZero) {
  ModelBundle b{identity_mlp(3), identity_mlp(3), std::nullopt, {}};
  Graph g;
  Rng rng(1);
  Node x = g.constant(random_tensor({4, 3}, rng));
  EXPECT_EQ(eval(g, reconstruction_loss(g, b, x)), 0.0);
}

TEST(Reconstruction, ZeroDecoder) {
  ModelBundle b{identity_mlp(2), Mlp(MlpSpec{{2, 2}}), std::nullopt, {}};
  Graph g;
  Node x = g.constant(Tensor::matrix({{1, 0}, {0, 2}}));
  EXPECT_DOUBLE_EQ(eval(g, reconstruction_loss(g, b, x)), 2.5);
}

TEST(Reconstruction, MatchesBruteForce) {
  ModelBundle b = random_bundle(3);
  Rng rng(2);
  Tensor s = random_tensor({7, 5}, rng);
  Graph g;
  const double got = eval(g, reconstruction_loss(g, b, g.constant(s)));
  double brute = 0.0;
  Tensor r = functors::decode(b, functors::encode(b, s));
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t c = 0; c < s.cols(); ++c) {
      brute += (s.at(i, c) - r.at(i, c)) * (s.at(i, c) - r.at(i, c));
    }
  }
  EXPECT_NEAR(got, brute / 7.0, 1e-10);
}

TEST(Prediction, PerfectAndUniform) {
  Mlp cls(MlpSpec{{2, 2}, Activation::kLinear, Activation::kLinear});
  cls.weights[0] = Tensor::matrix({{1000, -1000}, {-1000, 1000}});
  ModelBundle b{identity_mlp(2), std::nullopt, cls, {}};
  Graph g;
  Node x = g.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  EXPECT_EQ(eval(g, prediction_loss(g, b, x, {0, 1})), 0.0);

  ModelBundle u{identity_mlp(2), std::nullopt, Mlp(MlpSpec{{2, 2}}), {}};
  Graph h;
  Node y = h.constant(Tensor::matrix({{1, 3}, {2, 5}, {0, 1}}));
  EXPECT_NEAR(eval(h, prediction_loss(h, u, y, {0, 1, 1})), std::log(2.0), 1e-15);
  EXPECT_THROW(prediction_loss(h, u, y, {0, 2, 1}), Error);
}

TEST(Prediction, MatchesBruteForce) {
  ModelBundle b = random_bundle(4);
  Rng rng(3);
  Tensor s = random_tensor({9, 5}, rng);
  std::vector<int> y = {0, 1, 2, 2, 1, 0, 0, 1, 2};
  Graph g;
  const double got = eval(g, prediction_loss(g, b, g.constant(s), y));
  Tensor p = functors::classify(b, functors::encode(b, s));
  double brute = 0.0;
  for (std::size_t i = 0; i < 9; ++i) brute -= std::log(p.at(i, static_cast<std::size_t>(y[i])));
  EXPECT_NEAR(got, brute / 9.0, 1e-10);
}

TEST(Structure, Fixtures) {
  Graph g;
  Morphism swap{"c", Tensor::matrix({{0, 1}, {1, 0}}), true};
  PowerCache powers(g, swap);
  Node z = g.constant(Tensor::matrix({{1, 0}, {0, 1}, {1, 0}}));
  EXPECT_EQ(eval(g, structure_loss(g, powers, z, {{0, 1, 1}})), 0.0);
  EXPECT_EQ(eval(g, structure_loss(g, powers, z, {{0, 2, 0}, {2, 0, 0}})), 0.0);
  EXPECT_GT(eval(g, structure_loss(g, powers, z, {{0, 2, 1}})), 0.0);
}

TEST(Structure, IdentityMorphismRecoversInvariance) {
  Rng rng(5);
  Tensor lat = random_tensor({6, 3}, rng);
  std::vector<Pair> pairs = {{0, 1, 2}, {1, 3, -1}, {4, 5, 3}, {5, 0, 0}};
  Graph g;
  Morphism eye{"c", Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), true};
  PowerCache powers(g, eye);
  Node z = g.constant(lat);
  const double s = eval(g, structure_loss(g, powers, z, pairs));
  const double inv = eval(g, invariance_loss(g, z, pairs));
  EXPECT_NEAR(s, inv, 1e-12);
}

TEST(Structure, ZeroDifferencesEqualInvarianceExactly) {
  Rng rng(6);
  Tensor lat = random_tensor({6, 3}, rng);
  std::vector<Pair> pairs = {{0, 1, 0}, {2, 3, 0}, {5, 4, 0}};
  Graph g;
  Morphism w{"c", random_tensor({3, 3}, rng), false};
  PowerCache powers(g, w);
  Node z = g.constant(lat);
  EXPECT_EQ(eval(g, structure_loss(g, powers, z, pairs)), eval(g, invariance_loss(g, z, pairs)));
}

TEST(Invariance, Values) {
  Graph g;
  Node z = g.constant(Tensor::matrix({{0, 0}, {3, 4}, {3, 4}}));
  EXPECT_EQ(eval(g, invariance_loss(g, z, {{1, 2, 0}})), 0.0);
  EXPECT_DOUBLE_EQ(eval(g, invariance_loss(g, z, {{0, 1, -1}})), 25.0);
}

TEST(Mmd, Values) {
  Graph g;
  Node a = g.constant(Tensor::matrix({{0.0}}));
  Node b = g.constant(Tensor::matrix({{1.0}}));
  EXPECT_NEAR(eval(g, mmd_loss(a, b, 1.0)), 2.0 - 2.0 * std::exp(-0.5), 1e-12);
  EXPECT_NEAR(2.0 - 2.0 * std::exp(-0.5), 0.7869, 1e-4);

  Rng rng(7);
  Tensor x = random_tensor({5, 3}, rng);
  Tensor y = random_tensor({8, 3}, rng);
  const std::size_t perm[] = {3, 0, 4, 1, 2};
  std::vector<double> vals;
  for (std::size_t r : perm) {
    for (std::size_t c = 0; c < 3; ++c) vals.push_back(x.at(r, c));
  }
  Tensor xp = Tensor::matrix(5, 3, vals);
  Graph h;
  Node nx = h.constant(x), ny = h.constant(y), nxp = h.constant(xp);
  EXPECT_NEAR(eval(h, mmd_loss(nx, nxp, 0.8)), 0.0, 1e-12);
  const double xy = eval(h, mmd_loss(nx, ny, 0.8));
  const double yx = eval(h, mmd_loss(ny, nx, 0.8));
  EXPECT_EQ(xy, yx);
  EXPECT_GE(xy, 0.0);

  Tensor xs = x, ys = y;
  for (std::size_t r = 0; r < 5; ++r) xs.at(r, 1) += 3.7;
  for (std::size_t r = 0; r < 8; ++r) ys.at(r, 1) += 3.7;
  Graph k;
  EXPECT_NEAR(eval(k, mmd_loss(k.constant(xs), k.constant(ys), 0.8)), xy, 1e-10);
}

TEST(Mmd, MedianBandwidth) {
  // distances 1, 2, 3 between points on a line at 0, 1, 3
  EXPECT_DOUBLE_EQ(median_bandwidth(Tensor::matrix({{0.0}, {1.0}, {3.0}})), 2.0);
  EXPECT_DOUBLE_EQ(median_bandwidth(Tensor::matrix({{1.0}, {1.0}})), 1.0);
}

TEST(Total, OnlyPredictionPerfectIsZero) {
  Mlp cls(MlpSpec{{2, 2}, Activation::kLinear, Activation::kLinear});
  cls.weights[0] = Tensor::matrix({{1000, -1000}, {-1000, 1000}});
  ModelBundle b{identity_mlp(2), std::nullopt, cls, {}};
  BatchData batch{Tensor::matrix({{1, 0}, {0, 1}}), {0, 1}, {}};
  LossWeights w;
  w.lambda_p = 1.0;
  w.lambda_s = 0.0;
  w.mu_orth = 0.0;
  EXPECT_EQ(total_loss(b, batch, w).total, 0.0);
}

TEST(Total, FixturesAdd) {
  // reconstruction 2.5 (zero decoder), prediction ln 2 (zero classifier),
  // invariance 25 on latents (0,0), (3,4) with the identity encoder.
  ModelBundle b{identity_mlp(2), Mlp(MlpSpec{{2, 2}}), Mlp(MlpSpec{{2, 2}}), {}};
  BatchData batch{Tensor::matrix({{0, 0}, {3, 4}}), {0, 1}, {}};
  batch.terms.push_back({"site", TermKind::kInvariance, {{0, 1, 1}}, {}, 1.0});
  LossWeights w;
  w.lambda_r = 1;
  w.lambda_p = 1;
  w.lambda_s = 1;
  w.lambda_per_covariate["site"] = 1.0;
  w.mu_orth = 0;
  LossBreakdown lb = total_loss(b, batch, w);
  EXPECT_DOUBLE_EQ(lb.reconstruction, 12.5);
  EXPECT_NEAR(lb.prediction, std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(lb.structure.at("site"), 25.0);
  EXPECT_NEAR(lb.total, 12.5 + std::log(2.0) + 25.0, 1e-12);
}

TEST(Total, RecomposesRandomCase) {
  ModelBundle b = random_bundle(8);
  Rng rng(9);
  BatchData batch{random_tensor({6, 5}, rng), {0, 1, 2, 0, 1, 2}, {}};
  batch.terms.push_back({"age", TermKind::kStructure, {{0, 1, 1}, {2, 4, -2}, {3, 5, 0}}, {}, 1});
  batch.terms.push_back({"site", TermKind::kMmd, {}, {{0, 2, 4}, {1, 3, 5}}, 1.5});
  LossWeights w{0.7, 1.3, 0.9, {{"age", 0.2}, {"site", 0.05}}, 0.4};
  LossBreakdown lb = total_loss(b, batch, w);
  EXPECT_GT(lb.orthogonality, 0.0);
  EXPECT_GT(lb.structure.at("site"), 0.0);
  EXPECT_NEAR(lb.total, lb.recompose(w), 1e-10);
}

TEST(Total, AllLossesPassGradCheck) {
  for (bool orthogonal : {true, false}) {
    ModelBundle b = random_bundle(10, orthogonal);
    Rng rng(11);
    BatchData batch{random_tensor({6, 5}, rng), {0, 1, 2, 0, 1, 2}, {}};
    batch.terms.push_back(
        {"age", TermKind::kStructure, {{0, 1, 1}, {2, 4, -2}, {3, 5, 0}, {1, 0, 3}}, {}, 1});
    batch.terms.push_back({"site", TermKind::kInvariance, {{0, 5, 1}, {2, 3, -1}}, {}, 1});
    batch.terms.push_back({"scan", TermKind::kMmd, {}, {{0, 1}, {2, 3}, {4, 5}}, 1.2});
    LossWeights w{1.0, 1.0, 1.0, {{"age", 0.5}, {"site", 0.5}, {"scan", 2.0}}, 0.3};
    auto lg = build_total_loss(b, batch, w);
    auto report = numcore::grad_check(lg->graph, 1, 1e-5);
    EXPECT_TRUE(report.pass);
    for (const auto& p : report.parameters) EXPECT_LE(p.max_rel_error, 1e-5) << p.name;
  }
}

TEST(Total, NonNegative) {
  ModelBundle b = random_bundle(12);
  Rng rng(13);
  BatchData batch{random_tensor({4, 5}, rng), {0, 1, 2, 0}, {}};
  batch.terms.push_back({"age", TermKind::kStructure, {{0, 1, 1}, {2, 3, -1}}, {}, 1});
  LossWeights w{1, 1, 1, {}, 1};
  LossBreakdown lb = total_loss(b, batch, w);
  EXPECT_GE(lb.reconstruction, 0);
  EXPECT_GE(lb.prediction, 0);
  EXPECT_GE(lb.structure.at("age"), 0);
  EXPECT_GE(lb.orthogonality, 0);
}

}  // namespace
}  // namespace catharm::objective
