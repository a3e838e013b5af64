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
#include <numbers>

#include "catharm/common/error.hpp"
#include "catharm/functors/model.hpp"
#include "catharm/functors/morphism.hpp"

namespace catharm::functors {
namespace {

using numcore::RowMatrix;

Tensor random_tensor(numcore::Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = standard_normal(rng);
  return t;
}

Morphism rotation(double angle) {
  return Morphism{"r", Tensor::matrix({{std::cos(angle), -std::sin(angle)},
                                       {std::sin(angle), std::cos(angle)}}),
                  true};
}

// Haar-ish random rotation (det +1) via QR of a Gaussian matrix.
Morphism random_orthogonal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Morphism m{"c", random_tensor({n, n}, rng), true};
  retract_orthogonal(m);
  if (m.w.matrix().determinant() < 0) {
    for (std::size_t r = 0; r < n; ++r) m.w.at(r, 0) *= -1.0;
  }
  return m;
}

Mlp identity_mlp(std::size_t p) {
  Mlp mlp(MlpSpec{{p, p}, Activation::kLinear, Activation::kLinear});
  for (std::size_t i = 0; i < p; ++i) mlp.weights[0].at(i, i) = 1.0;
  return mlp;
}

ModelBundle identity_bundle(std::size_t p) {
  return ModelBundle{identity_mlp(p), identity_mlp(p), std::nullopt, {}};
}

TEST(Encode, ZeroWeights) {
  ModelBundle b{Mlp(MlpSpec{{5, 4, 3}}), std::nullopt, std::nullopt, {}};
  Rng rng(1);
  Tensor z = encode(b, random_tensor({5}, rng));
  EXPECT_EQ(z, Tensor::vector({0, 0, 0}));
}

TEST(Encode, IdentityLinear) {
  ModelBundle b = identity_bundle(3);
  Tensor s = Tensor::vector({1.5, -2, 7});
  EXPECT_EQ(encode(b, s), s);
  Tensor batch = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(encode(b, batch), batch);
}

TEST(Encode, DeterministicAndDimensionChecked) {
  BundleShape shape{6, 2, true, Activation::kLinear, {}, {{"age", true}}};
  ModelBundle b = make_bundle(LatentSpec{4, {8}, Activation::kTanh}, shape, 42);
  Rng rng(3);
  Tensor s = random_tensor({6}, rng);
  EXPECT_TRUE(numcore::bit_equal(encode(b, s), encode(b, s)));
  ModelBundle again = make_bundle(LatentSpec{4, {8}, Activation::kTanh}, shape, 42);
  EXPECT_TRUE(numcore::bit_equal(encode(again, s), encode(b, s)));
  try {
    encode(b, Tensor::vector({1, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
  }
  EXPECT_THROW(classify(b, Tensor::vector({1, 2})), Error);
  EXPECT_NO_THROW(b.validate());
}

TEST(Decode, IdentityFixtureReconstructsExactly) {
  ModelBundle b = identity_bundle(2);
  const Tensor points = Tensor::matrix({{0, 1}, {1, 0}, {-1, 2}, {3, 3}});
  EXPECT_EQ(decode(b, encode(b, points)), points);
}

TEST(Decode, ZeroWeightsGiveBias) {
  Mlp dec(MlpSpec{{2, 3}});
  dec.biases[0] = Tensor::vector({0.5, -1, 2});
  ModelBundle b{Mlp(MlpSpec{{3, 2}}), dec, std::nullopt, {}};
  EXPECT_EQ(decode(b, Tensor::vector({9, -4})), Tensor::vector({0.5, -1, 2}));
  EXPECT_EQ(decode(b, Tensor::vector({0, 1})), Tensor::vector({0.5, -1, 2}));
}

TEST(Classify, ZeroLogitsAreUniform) {
  ModelBundle b{identity_mlp(2), std::nullopt, Mlp(MlpSpec{{2, 4}}), {}};
  Tensor p = classify(b, Tensor::vector({3, -1}));
  for (double v : p.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Classify, ProbabilitiesSumToOne) {
  BundleShape shape{5, 3, false, Activation::kLinear, {7}, {}};
  ModelBundle b = make_bundle(LatentSpec{4, {6}, Activation::kRelu}, shape, 9);
  Rng rng(4);
  Tensor p = classify(b, encode(b, random_tensor({20, 5}, rng)));
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < p.cols(); ++c) sum += p.at(r, c);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(ApplyMorphism, ZeroPowerIsIdentity) {
  Rng rng(2);
  Morphism m{"c", random_tensor({3, 3}, rng), false};
  Tensor z = random_tensor({3}, rng);
  EXPECT_TRUE(numcore::bit_equal(apply_morphism(m, 0, z), z));
  RowMatrix eye = morphism_power(m, 0).matrix();
  EXPECT_TRUE(eye == RowMatrix::Identity(3, 3));
}

TEST(ApplyMorphism, RotationPeriod) {
  Tensor out = apply_morphism(rotation(std::numbers::pi / 2), 4, Tensor::vector({1, 0}));
  EXPECT_NEAR(out[0], 1.0, 1e-12);
  EXPECT_NEAR(out[1], 0.0, 1e-12);
}

TEST(ApplyMorphism, OrthogonalInverseMatchesSolve) {
  Morphism m = random_orthogonal(6, 17);
  Rng rng(5);
  Tensor z = random_tensor({6}, rng);
  Tensor got = apply_morphism(m, -1, z);
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(z.data().data(), 6);
  Eigen::VectorXd solved = m.w.matrix().colPivHouseholderQr().solve(rhs);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(got[i], solved(i), 1e-10);
}

TEST(ApplyMorphism, Errors) {
  Morphism m = random_orthogonal(3, 1);
  Tensor z = Tensor::vector({1, 2, 3});
  try {
    apply_morphism(m, 65, z);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPowerLimitExceeded);
  }
  Morphism singular{"s", Tensor::matrix({{1, 2}, {2, 4}}), false};
  try {
    apply_morphism(singular, -1, Tensor::vector({1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonInvertibleMorphism);
  }
  set_log_quiet(true);
  Morphism linear{"l", Tensor::matrix({{2, 0}, {0, 4}}), false};
  Tensor inv = apply_morphism(linear, -1, Tensor::vector({1, 1}));
  set_log_quiet(false);
  EXPECT_NEAR(inv[0], 0.5, 1e-15);
  EXPECT_NEAR(inv[1], 0.25, 1e-15);
}

TEST(MorphismPower, BasicExponents) {
  Morphism m = random_orthogonal(4, 3);
  EXPECT_LE(numcore::max_abs_diff(morphism_power(m, 1.0), m.w), 0.0);
  Tensor half = morphism_power(rotation(std::numbers::pi / 2), 0.5);
  Morphism r45 = rotation(std::numbers::pi / 4);
  EXPECT_LE(numcore::max_abs_diff(half, r45.w), 1e-12);
}

TEST(MorphismPower, IntegerMatchesRepeatedProduct) {
  Morphism m = random_orthogonal(8, 21);
  RowMatrix w = m.w.matrix();
  RowMatrix cubed = w * w * w;
  EXPECT_LE((morphism_power(m, 3.0).matrix() - cubed).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(MorphismPower, Errors) {
  Morphism linear{"l", Tensor::matrix({{2, 0}, {0, 3}}), false};
  try {
    morphism_power(linear, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFractionalPowerOnNonOrthogonal);
  }
  EXPECT_NO_THROW(morphism_power(linear, 2.0));
  Morphism reflection{"f", Tensor::matrix({{1, 0}, {0, -1}}), true};
  try {
    morphism_power(reflection, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFractionalPowerUndefined);
  }
}

TEST(MorphismPower, FunctorialComposition) {
  Morphism m = random_orthogonal(8, 33);
  const std::vector<double> exps = {-3, -2, -1, 0, 1, 2, 3, 0.5, 1.5};
  for (double a : exps) {
    for (double b : exps) {
      RowMatrix lhs = morphism_power(m, a + b).matrix();
      RowMatrix rhs = morphism_power(m, a).matrix() * morphism_power(m, b).matrix();
      EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8) << a << " + " << b;
    }
  }
}

TEST(ApplyMorphism, InverseRoundTrip) {
  Morphism m = random_orthogonal(8, 7);
  Rng rng(8);
  Tensor z = random_tensor({3, 8}, rng);
  for (int d = -8; d <= 8; ++d) {
    Tensor back = apply_morphism(m, d, apply_morphism(m, -d, z));
    EXPECT_LE(numcore::max_abs_diff(back, z), 1e-8) << d;
  }
}

TEST(OrthogonalityResidual, Values) {
  Morphism eye{"i", Tensor::matrix({{1, 0}, {0, 1}}), true};
  EXPECT_EQ(orthogonality_residual(eye), 0.0);
  Morphism twice{"t", Tensor::matrix({{2, 0}, {0, 2}}), true};
  EXPECT_DOUBLE_EQ(orthogonality_residual(twice), 18.0);
  Rng rng(6);
  Morphism m{"r", random_tensor({5, 5}, rng), false};
  double brute = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < 5; ++k) dot += m.w.at(k, i) * m.w.at(k, j);
      const double e = dot - (i == j ? 1.0 : 0.0);
      brute += e * e;
    }
  }
  EXPECT_NEAR(orthogonality_residual(m), brute, 1e-12 * std::max(1.0, brute));
}

TEST(Bundle, ParameterOrderAndInit) {
  BundleShape shape{6, 2, true, Activation::kSigmoid, {}, {{"b", true}, {"a", false}}};
  ModelBundle b = make_bundle(LatentSpec{4, {8}, Activation::kTanh}, shape, 1);
  std::vector<std::string> names;
  for (auto& [name, t] : b.parameters()) names.push_back(name);
  const std::vector<std::string> expected = {
      "encoder.w0", "encoder.b0", "encoder.w1", "encoder.b1", "decoder.w0",
      "decoder.b0", "decoder.w1", "decoder.b1", "classifier.w0", "classifier.b0",
      "morphism.a", "morphism.b"};
  EXPECT_EQ(names, expected);
  const double bound = std::sqrt(6.0 / 6.0);
  for (double v : b.encoder.weights[0].data()) EXPECT_LE(std::abs(v), bound);
  for (double v : b.encoder.biases[0].data()) EXPECT_EQ(v, 0.0);
  EXPECT_LE(orthogonality_residual(b.morphisms.at("b")), 0.05);
}

}  // namespace
}  // namespace catharm::functors
