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
#include <filesystem>
#include <set>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"
#include "catharm/dataio/dataset.hpp"
#include "catharm/dataio/images.hpp"
#include "catharm/dataio/loaders.hpp"
#include "catharm/dataio/synthetic.hpp"

namespace catharm::dataio {
namespace {

const std::filesystem::path kData = std::filesystem::path(CATHARM_SOURCE_DIR) / "data";

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kIo;
}

TEST(Tabular, GermanFeatureCount) {
  Dataset d = load_tabular_csv(kData / "german.csv", kData / "german.schema");
  EXPECT_EQ(d.dim(), 58u);
  EXPECT_EQ(d.size(), 1000u);
  EXPECT_EQ(d.dropped_rows, 0u);
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"1", "2"}));
  EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 1), 300);
  EXPECT_EQ(d.numeric_columns.size(), 6u);
  EXPECT_EQ(d.raw_columns.at("foreign_worker").size(), 1000u);
}

TEST(Tabular, AdultFeatureCount) {
  Dataset d = load_tabular_csv(kData / "adult.csv", kData / "adult.schema");
  EXPECT_EQ(d.dim(), 100u);
  EXPECT_EQ(d.size(), 30162u);
  EXPECT_EQ(d.dropped_rows, 2399u);
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"<=50K", ">50K"}));
}

TEST(Tabular, ToyRoundTripIsDeterministic) {
  const std::string csv = "a,b,c,y\n1,x,5,no\n2,y,?,yes\n3,x,7,yes\n";
  const auto schema = parse_schema("a,numeric,feature\nb,categorical,feature\n"
                                   "c,numeric,covariate\ny,categorical,label\n");
  Dataset d1 = parse_tabular_csv(csv, schema);
  Dataset d2 = parse_tabular_csv(csv, schema);
  EXPECT_EQ(d1.size(), 2u);
  EXPECT_EQ(d1.dropped_rows, 1u);
  // Levels come from the kept rows, so "y" (only on the dropped row) is absent.
  EXPECT_EQ(d1.feature_names, (std::vector<std::string>{"a", "b=x"}));
  EXPECT_EQ(d1.features, Tensor::matrix({{1, 1}, {3, 1}}));
  EXPECT_EQ(d1.labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(d1.raw_columns.at("c"), (std::vector<std::string>{"5", "7"}));
  EXPECT_EQ(d1.fingerprint(), d2.fingerprint());
  EXPECT_EQ(d1.content_hash, d2.content_hash);
}

TEST(Tabular, Errors) {
  const auto schema = parse_schema("a,numeric,feature\nz,categorical,label\n");
  EXPECT_EQ(kind_of([&] { parse_tabular_csv("a,y\n1,0\n", schema); }), ErrorKind::kMissingColumn);
  EXPECT_THROW(parse_schema("a,numeric\n"), Error);
  EXPECT_THROW(parse_schema("a,weird,feature\n"), Error);
}

TEST(Tabular, BindCovariates) {
  Dataset d = load_tabular_csv(kData / "german.csv", kData / "german.schema");
  pairing::CovariateSpec age;
  age.name = "age";
  age.kind = pairing::CovariateKind::kOrdinal;
  age.bins.rule = pairing::BinRule::kWidth;
  age.constraint = pairing::Constraint::kEquivariance;
  age.morphism = pairing::MorphismKind::kOrthogonal;
  pairing::CovariateSpec foreign;
  foreign.name = "foreigner";
  foreign.column = "foreign_worker";
  bind_covariates(d, {age, foreign});
  EXPECT_EQ(d.covariates.at("age").codes[0], 6);  // 67 years
  const auto& f = d.covariates.at("foreigner");
  EXPECT_EQ(f.levels, (std::vector<std::string>{"A201", "A202"}));
  EXPECT_EQ(std::count(f.codes.begin(), f.codes.end(), 1), 37);
  pairing::CovariateSpec bad = foreign;
  bad.column = "nope";
  EXPECT_EQ(kind_of([&] { bind_covariates(d, {bad}); }), ErrorKind::kMissingColumn);
}

TEST(Mnist, LoadsSubset) {
  Dataset d = load_mnist_idx(kData / "mnist5k-images-idx3-ubyte", kData / "mnist5k-labels-idx1-ubyte");
  EXPECT_EQ(d.size(), 5000u);
  EXPECT_EQ(d.dim(), 784u);
  for (int c = 0; c < 10; ++c) EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), c), 500);
  double mn = 1, mx = 0;
  for (double v : d.features.data()) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  EXPECT_EQ(mn, 0.0);
  EXPECT_EQ(mx, 1.0);
  // Pinned on first ingest.
  EXPECT_EQ(hex64(fnv1a(d.features.data().subspan(0, 784))), "c03ad06dde444bb5");
  Dataset again = load_mnist_idx(kData / "mnist5k-images-idx3-ubyte",
                                 kData / "mnist5k-labels-idx1-ubyte");
  EXPECT_EQ(again.fingerprint(), d.fingerprint());
}

std::string idx_bytes(std::uint32_t magic, std::vector<std::uint32_t> dims, std::size_t payload) {
  std::string s;
  auto put = [&s](std::uint32_t v) {
    for (int sh = 24; sh >= 0; sh -= 8) s.push_back(static_cast<char>((v >> sh) & 0xff));
  };
  put(magic);
  for (auto d : dims) put(d);
  s.append(payload, '\x01');
  return s;
}

TEST(Mnist, BadMagicAndTruncation) {
  const std::string img = idx_bytes(kIdxImageMagic, {2, 28, 28}, 2 * 784);
  const std::string lab = idx_bytes(kIdxLabelMagic, {2}, 2);
  EXPECT_EQ(parse_mnist(img, lab).size(), 2u);
  EXPECT_EQ(kind_of([&] { parse_mnist(img, idx_bytes(0x00000802, {2}, 2)); }),
            ErrorKind::kBadMagic);
  EXPECT_EQ(kind_of([&] { parse_mnist(img.substr(0, img.size() - 1), lab); }),
            ErrorKind::kTruncated);
  EXPECT_EQ(kind_of([&] { parse_mnist(idx_bytes(kIdxImageMagic, {2, 27, 29}, 2 * 783), lab); }),
            ErrorKind::kDimensionMismatch);
  EXPECT_EQ(kind_of([&] { parse_mnist(img, idx_bytes(kIdxLabelMagic, {3}, 3)); }),
            ErrorKind::kDimensionMismatch);
}

TEST(Mnist, FuzzedHeadersAreRejected) {
  const std::string img = idx_bytes(kIdxImageMagic, {3, 28, 28}, 3 * 784);
  const std::string lab = idx_bytes(kIdxLabelMagic, {3}, 3);
  Rng rng(2024);
  int rejected = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::string a = img;
    std::string b = lab;
    const bool images = uniform_index(rng, 2) == 0;
    std::string& target = images ? a : b;
    const std::size_t header = images ? 16 : 8;
    const std::size_t pos = uniform_index(rng, header);
    const char old = target[pos];
    do {
      target[pos] = static_cast<char>(uniform_index(rng, 256));
    } while (target[pos] == old);
    try {
      parse_mnist(a, b);
    } catch (const Error& e) {
      ++rejected;
      EXPECT_TRUE(e.kind() == ErrorKind::kBadMagic || e.kind() == ErrorKind::kTruncated ||
                  e.kind() == ErrorKind::kDimensionMismatch)
          << e.what();
    }
  }
  EXPECT_EQ(rejected, 100);
}

Dataset small_images(std::uint64_t seed) {
  Dataset d = load_mnist_idx(kData / "mnist5k-images-idx3-ubyte", kData / "mnist5k-labels-idx1-ubyte");
  return d.subset(subsample_rows(d.size(), 20, seed));
}

TEST(Transforms, PairCount) {
  Dataset d = small_images(1);
  TransformPairs tp = make_transform_pairs(d, Transform::kRotate, 4);
  EXPECT_EQ(tp.pairs.size(), 20u * 4u);
  EXPECT_EQ(tp.data.size(), 20u * 5u);
  for (const auto& p : tp.pairs.entries) {
    const auto& codes = tp.data.covariates.at("rotate").codes;
    EXPECT_EQ(p.d, codes[p.i] - codes[p.j]);
    EXPECT_LT(p.d, 0);
  }
  Dataset tab = synth_monotone(10, 3, 1.0, 1);
  EXPECT_EQ(kind_of([&] { make_transform_pairs(tab, Transform::kScale, 2); }),
            ErrorKind::kNonImageDataset);
}

TEST(Transforms, RotationRoundTrip) {
  Dataset d = small_images(2);
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto img = d.features.data().subspan(i * 784, 784);
    for (int k : {1, 3, 6}) {
      auto there = transform_image(img, 28, 28, Transform::kRotate, k);
      auto back = transform_image(there, 28, 28, Transform::kRotate, -k);
      double mse = 0.0;
      for (std::size_t p = 0; p < 784; ++p) mse += (back[p] - img[p]) * (back[p] - img[p]);
      EXPECT_LT(mse / 784, 1e-2) << "image " << i << " k " << k;
    }
  }
}

TEST(Transforms, RotationDirectionAndScale) {
  // A single lit pixel right of centre moves up under counter-clockwise rotation.
  std::vector<double> img(28 * 28, 0.0);
  img[13 * 28 + 20] = 1.0;
  auto r = rotate_image(img, 28, 28, 90.0);
  std::size_t arg = 0;
  for (std::size_t p = 0; p < r.size(); ++p) {
    if (r[p] > r[arg]) arg = p;
  }
  EXPECT_LT(arg / 28, 13u);
  std::vector<double> zero(28 * 28, 0.0);
  for (double v : pad_and_resize(zero, 28, 28, 3)) EXPECT_EQ(v, 0.0);
  std::vector<double> ones(28 * 28, 1.0);
  auto shrunk = pad_and_resize(ones, 28, 28, 4);
  EXPECT_EQ(shrunk[0], 0.0);
  EXPECT_NEAR(shrunk[14 * 28 + 14], 1.0, 1e-12);
}

TEST(Successor, Pairs) {
  Dataset d;
  d.features = Tensor::matrix({{0.0}, {1.0}});
  d.labels = {3, 4};
  pairing::PairSet p = make_successor_pairs(d, 1);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.entries[0], (pairing::Pair{0, 1, -1}));
  d.labels = {3, 5};
  EXPECT_EQ(kind_of([&] { make_successor_pairs(d, 1); }), ErrorKind::kEmptyClass);
}

TEST(Successor, CountsAreMinClassSizes) {
  Dataset m = load_mnist_idx(kData / "mnist5k-images-idx3-ubyte", kData / "mnist5k-labels-idx1-ubyte");
  Dataset s = m.subset(subsample_rows(m.size(), 300, 9));
  pairing::PairSet p = make_successor_pairs(s, 4);
  std::map<int, std::size_t> cls, per;
  for (int y : s.labels) ++cls[y];
  for (const auto& e : p.entries) {
    EXPECT_EQ(e.d, -1);
    EXPECT_EQ(s.labels[e.j], s.labels[e.i] + 1);
    ++per[s.labels[e.i]];
  }
  for (int l = 0; l < 9; ++l) EXPECT_EQ(per[l], std::min(cls[l], cls[l + 1])) << l;
  std::set<std::size_t> used_from;
  for (const auto& e : p.entries) EXPECT_TRUE(used_from.insert(e.i).second);
}

TEST(Synthetic, NullEffectIsIndependent) {
  Dataset d = synth_monotone(10000, 5, 0.0, 11);
  double n[3][2] = {};
  const auto& g = d.raw_columns.at("g");
  for (std::size_t i = 0; i < d.size(); ++i) n[std::stoi(g[i])][d.labels[i]] += 1;
  double chi2 = 0.0;
  const double total = 10000;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double row = n[a][0] + n[a][1];
      const double col = n[0][b] + n[1][b] + n[2][b];
      const double e = row * col / total;
      chi2 += (n[a][b] - e) * (n[a][b] - e) / e;
    }
  }
  // chi-square with 2 degrees of freedom: survival exp(-x/2)
  EXPECT_GT(std::exp(-chi2 / 2.0), 0.01);
}

TEST(Synthetic, EffectIsMonotone) {
  Dataset d = synth_monotone(10000, 5, 2.0, 12);
  double pos[3] = {}, cnt[3] = {};
  const auto& g = d.raw_columns.at("g");
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int k = std::stoi(g[i]);
    pos[k] += d.labels[i];
    cnt[k] += 1;
  }
  EXPECT_LT(pos[0] / cnt[0], pos[1] / cnt[1]);
  EXPECT_LT(pos[1] / cnt[1], pos[2] / cnt[2]);
  EXPECT_EQ(synth_monotone(50, 3, 2.0, 5).fingerprint(), synth_monotone(50, 3, 2.0, 5).fingerprint());
  EXPECT_NE(synth_monotone(50, 3, 2.0, 5).fingerprint(), synth_monotone(50, 3, 2.0, 6).fingerprint());
}

TEST(Folds, SizesPartitionStratification) {
  std::vector<int> labels(100);
  for (int i = 0; i < 100; ++i) labels[i] = i % 10 < 3 ? 1 : 0;
  auto folds = kfold_split(labels, 5, 3);
  std::set<std::size_t> all;
  for (const auto& f : folds) {
    EXPECT_EQ(f.size(), 20u);
    double pos = 0;
    for (std::size_t r : f) {
      EXPECT_TRUE(all.insert(r).second);
      pos += labels[r];
    }
    EXPECT_LE(std::abs(pos / 20.0 - 0.3), 1.0 / 20.0);
  }
  EXPECT_EQ(all.size(), 100u);
  EXPECT_EQ(folds, kfold_split(labels, 5, 3));
  EXPECT_THROW(kfold_split(labels, 101, 3), Error);
  std::vector<int> odd(103, 0);
  for (int i = 0; i < 40; ++i) odd[i] = 1;
  for (const auto& f : kfold_split(odd, 5, 1)) EXPECT_TRUE(f.size() == 20 || f.size() == 21);
}

TEST(Standardize, TrainStatistics) {
  Dataset d = load_tabular_csv(kData / "german.csv", kData / "german.schema");
  auto folds = kfold_split(d.labels, 5, 1);
  std::vector<std::size_t> train;
  for (std::size_t k = 1; k < 5; ++k) train.insert(train.end(), folds[k].begin(), folds[k].end());
  Standardizer s = Standardizer::fit(d.features, d.numeric_columns, train);
  Tensor x = d.features;
  s.apply(x);
  for (std::size_t c : d.numeric_columns) {
    double mean = 0, var = 0;
    for (std::size_t r : train) mean += x.at(r, c);
    mean /= train.size();
    for (std::size_t r : train) var += (x.at(r, c) - mean) * (x.at(r, c) - mean);
    var /= train.size();
    EXPECT_LT(std::abs(mean), 1e-10);
    EXPECT_LT(std::abs(std::sqrt(var) - 1.0), 1e-10);
  }
}

}  // namespace
}  // namespace catharm::dataio
