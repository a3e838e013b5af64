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
#include <memory>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"
#include "catharm/numcore/grad_check.hpp"
#include "catharm/numcore/graph.hpp"
#include "catharm/numcore/ops.hpp"

namespace catharm::numcore {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = scale * standard_normal(rng);
  return t;
}

TEST(Forward, IdentityMatmul) {
  Graph g;
  Tensor a = Tensor::matrix({{1, 0}, {0, 1}});
  Node x = g.input("x", {2});
  matmul(g.parameter("A", a), x);
  const Tensor& y = g.forward({{"x", Tensor::vector({3, 4})}});
  EXPECT_EQ(y, Tensor::vector({3, 4}));
}

TEST(Forward, DotProduct) {
  Graph g;
  Tensor x = Tensor::vector({1, 2});
  Node n = g.parameter("x", x);
  matmul(n, n);
  EXPECT_DOUBLE_EQ(g.forward().item(), 5.0);
  auto grads = g.backward();
  EXPECT_EQ(grads.at("x"), Tensor::vector({2, 4}));
}

TEST(Forward, ZeroWeightMlp) {
  Graph g;
  Tensor w1({3, 4}), b1({4}), w2({4, 2}), b2({2});
  Node x = g.input("x", {5, 3});
  Node h = tanh(add(matmul(x, g.parameter("w1", w1)), g.parameter("b1", b1)));
  tanh(add(matmul(h, g.parameter("w2", w2)), g.parameter("b2", b2)));
  Rng rng(1);
  const Tensor& y = g.forward({{"x", random_tensor({5, 3}, rng)}});
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, LinearResidual) {
  Graph g;
  Tensor w = Tensor::matrix({{1, 0}, {0, 1}});
  Node x = g.constant(Tensor::vector({1, 0}));
  Node y = g.constant(Tensor::vector({0, 0}));
  sum_squares(sub(matmul(g.parameter("W", w), x), y));
  g.forward();
  EXPECT_EQ(g.backward().at("W"), Tensor::matrix({{2, 0}, {0, 0}}));
}

TEST(Backward, Errors) {
  Graph g;
  Tensor w = Tensor::vector({1, 2});
  Node p = g.parameter("w", w);
  scale(p, 2.0);
  try {
    g.backward();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kForwardNotRun);
  }
  g.forward();
  try {
    g.backward();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kOutputNotScalar);
  }
}

TEST(Forward, ShapeAndFiniteErrors) {
  Graph g;
  Node x = g.input("x", {2});
  Tensor a({3, 3});
  EXPECT_THROW(matmul(g.parameter("A", a), x), Error);
  Graph h;
  Node y = h.input("y", {2});
  scale(y, 1e308);
  try {
    h.forward({{"y", Tensor::vector({1e10, 1})}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonFinite);
  }
  try {
    h.forward({{"y", Tensor::vector({1, 2, 3})}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShapeMismatch);
  }
}

TEST(GradCheck, RandomMlp) {
  Rng rng(7);
  Tensor w1 = random_tensor({6, 8}, rng, 0.5), b1 = random_tensor({8}, rng);
  Tensor w2 = random_tensor({8, 3}, rng, 0.5), b2 = random_tensor({3}, rng);
  Graph g;
  Node x = g.input("x", {10, 6});
  Node h = tanh(add(matmul(x, g.parameter("w1", w1)), g.parameter("b1", b1)));
  Node z = add(matmul(h, g.parameter("w2", w2)), g.parameter("b2", b2));
  softmax_cross_entropy(z, {0, 1, 2, 0, 1, 2, 0, 1, 2, 0});
  auto report = grad_check(g, 3, 1e-5, {{"x", random_tensor({10, 6}, rng)}});
  EXPECT_TRUE(report.pass);
  ASSERT_EQ(report.parameters.size(), 4u);
  for (const auto& p : report.parameters) EXPECT_LE(p.max_rel_error, 1e-5) << p.name;
}

TEST(GradCheck, LinearRegression) {
  Rng rng(11);
  Tensor w = random_tensor({4, 1}, rng), b = random_tensor({1}, rng);
  Graph g;
  Node x = g.constant(random_tensor({20, 4}, rng));
  Node y = g.constant(random_tensor({20, 1}, rng));
  scale(sum_squares(sub(add(matmul(x, g.parameter("w", w)), g.parameter("b", b)), y)),
        1.0 / 20);
  EXPECT_TRUE(grad_check(g, 1, 1e-5).pass);
}

// Every op, composed into a scalar so the checker sees each rule.
TEST(GradCheck, EveryOp) {
  Rng rng(5);
  Tensor a = random_tensor({4, 3}, rng), b = random_tensor({3, 3}, rng, 0.3);
  Tensor c = random_tensor({3}, rng), d = random_tensor({2, 3}, rng);
  for (std::size_t i = 0; i < 3; ++i) b.at(i, i) += 2.0;
  auto check = [](Graph& g) {
    auto r = grad_check(g, 9, 1e-5);
    EXPECT_TRUE(r.pass);
    for (const auto& p : r.parameters) EXPECT_LE(p.max_rel_error, 1e-5) << p.name;
  };
  {
    Graph g;
    Node m = matmul(g.parameter("a", a), g.parameter("b", b));
    sum_squares(sub(relu(m), scale(g.parameter("c", c), 0.5)));
    check(g);
  }
  {
    Graph g;
    Node m = sigmoid(transpose(g.parameter("a", a)));
    Node s = sum_squares(concat({m, transpose(g.parameter("d", d))}, 1));
    add(s, matmul(g.parameter("c", c), g.parameter("c", c)));
    check(g);
  }
  {
    Graph g;
    Node gathered = gather_rows(g.parameter("a", a), {3, 0, 0});
    Node stacked = concat({gathered, g.parameter("d", d)}, 0);
    sum_squares(matmul(stacked, inverse(g.parameter("b", b))));
    check(g);
  }
  {
    Graph g;
    mmd_rbf(g.parameter("a", a), g.parameter("d", d), 1.3);
    check(g);
  }
  {
    Graph g;
    softmax_cross_entropy(scale(g.parameter("a", a), 10.0), {2, 0, 1, 1});
    check(g);
  }
}

class DoublingOp final : public Operation {
 public:
  std::string_view name() const override { return "bad_square"; }
  Shape output_shape(std::span<const Shape> in) const override { return in[0]; }
  Tensor forward(std::span<const Tensor* const> in) override {
    Tensor t = *in[0];
    for (double& v : t.data()) v = v * v;
    return t;
  }
  std::vector<Tensor> backward(std::span<const Tensor* const> in, const Tensor&,
                               const Tensor& g) override {
    Tensor t = g;
    for (std::size_t i = 0; i < t.size(); ++i) t[i] *= 3.0 * (*in[0])[i];
    return {t};
  }
};

TEST(GradCheck, WrongRuleFails) {
  Graph g;
  Tensor w = Tensor::vector({0.5, -1.0, 2.0});
  Node sq = g.apply(std::make_unique<DoublingOp>(), {g.parameter("w", w)});
  sum_squares(sq);
  auto report = grad_check(g, 1, 1e-5);
  EXPECT_FALSE(report.pass);
}

TEST(GradCheck, NoParameters) {
  Graph g;
  sum_squares(g.constant(Tensor::vector({1, 2})));
  auto report = grad_check(g, 1, 1e-5);
  EXPECT_TRUE(report.pass);
  EXPECT_TRUE(report.parameters.empty());
}

TEST(GradCheck, SubsamplesLargeParameters) {
  Rng rng(2);
  Tensor w = random_tensor({120, 100}, rng);
  Graph g;
  scale(sum_squares(g.parameter("w", w)), 1.0 / 12000);
  auto report = grad_check(g, 4, 1e-5);
  ASSERT_EQ(report.parameters.size(), 1u);
  EXPECT_EQ(report.parameters[0].entries_checked, 10000u);
  EXPECT_TRUE(report.pass);
}

TEST(Properties, ForwardIsBitDeterministic) {
  Rng rng(3);
  Tensor w = random_tensor({6, 6}, rng);
  Tensor x = random_tensor({4, 6}, rng);
  Graph g1, g2;
  tanh(matmul(g1.constant(x), g1.parameter("w", w)));
  tanh(matmul(g2.constant(x), g2.parameter("w", w)));
  EXPECT_TRUE(bit_equal(g1.forward(), g2.forward()));
  Tensor again = g1.forward();
  EXPECT_TRUE(bit_equal(again, g2.forward()));
}

TEST(Properties, MatmulAssociativity) {
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor a = random_tensor({8, 8}, rng), b = random_tensor({8, 8}, rng),
           c = random_tensor({8, 8}, rng);
    for (Tensor* t : {&a, &b, &c}) {
      for (std::size_t i = 0; i < 8; ++i) t->at(i, i) += 4.0;
    }
    Graph g;
    Node na = g.constant(a), nb = g.constant(b), nc = g.constant(c);
    Node left = matmul(matmul(na, nb), nc);
    Node right = matmul(na, matmul(nb, nc));
    g.forward();
    const Tensor& l = g.value(left);
    const Tensor& r = g.value(right);
    double scale_ref = 0.0;
    for (double v : l.data()) scale_ref = std::max(scale_ref, std::abs(v));
    EXPECT_LE(max_abs_diff(l, r) / scale_ref, 1e-10);
  }
}

TEST(Ops, SoftmaxCrossEntropyStable) {
  Graph g;
  Node z = g.constant(Tensor::matrix({{1000, 0}, {0, 0}}));
  softmax_cross_entropy(z, {0, 1});
  EXPECT_NEAR(g.forward().item(), 0.5 * std::log(2.0), 1e-12);
  EXPECT_THROW(softmax_cross_entropy(z, {0, 2}), Error);
}

TEST(Ops, MmdClosedForm) {
  Graph g;
  mmd_rbf(g.constant(Tensor::matrix({{0.0}})), g.constant(Tensor::matrix({{1.0}})), 1.0);
  EXPECT_NEAR(g.forward().item(), 2.0 - 2.0 * std::exp(-0.5), 1e-12);
}

}  // namespace
}  // namespace catharm::numcore
