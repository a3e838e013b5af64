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

#include "catharm/dataio/images.hpp"

#include <cmath>
#include <numbers>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"

namespace catharm::dataio {

namespace {

double sample(std::span<const double> img, std::size_t rows, std::size_t cols, double y,
              double x) {
  const double fy = std::floor(y);
  const double fx = std::floor(x);
  const double ty = y - fy;
  const double tx = x - fx;
  auto at = [&](double yy, double xx) {
    if (yy < 0 || xx < 0 || yy >= static_cast<double>(rows) || xx >= static_cast<double>(cols)) {
      return 0.0;
    }
    return img[static_cast<std::size_t>(yy) * cols + static_cast<std::size_t>(xx)];
  };
  return (1 - ty) * ((1 - tx) * at(fy, fx) + tx * at(fy, fx + 1)) +
         ty * ((1 - tx) * at(fy + 1, fx) + tx * at(fy + 1, fx + 1));
}

}  // namespace

Transform parse_transform(const std::string& name) {
  if (name == "rotate" || name == "rot") return Transform::kRotate;
  if (name == "scale") return Transform::kScale;
  fail(ErrorKind::kInvalidArgument, "unknown transform '" + name + "'");
}

std::string to_string(Transform t) { return t == Transform::kRotate ? "rotate" : "scale"; }

std::vector<double> rotate_image(std::span<const double> image, std::size_t rows,
                                 std::size_t cols, double degrees) {
  const double theta = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double cy = (static_cast<double>(rows) - 1) / 2;
  const double cx = (static_cast<double>(cols) - 1) / 2;
  std::vector<double> out(rows * cols);
  for (std::size_t y = 0; y < rows; ++y) {
    for (std::size_t x = 0; x < cols; ++x) {
      // Counter-clockwise as displayed (y grows downwards): inverse-map each
      // output pixel through the clockwise rotation.
      const double ox = static_cast<double>(x) - cx;
      const double oy = cy - static_cast<double>(y);
      const double sx = ox * c + oy * s;
      const double sy = -ox * s + oy * c;
      out[y * cols + x] = sample(image, rows, cols, cy - sy, cx + sx);
    }
  }
  return out;
}

std::vector<double> pad_and_resize(std::span<const double> image, std::size_t rows,
                                   std::size_t cols, int pad) {
  const double pr = static_cast<double>(rows) + 2.0 * pad;
  const double pc = static_cast<double>(cols) + 2.0 * pad;
  if (!(pr > 0 && pc > 0)) fail(ErrorKind::kInvalidArgument, "crop larger than the image");
  std::vector<double> out(rows * cols);
  for (std::size_t y = 0; y < rows; ++y) {
    for (std::size_t x = 0; x < cols; ++x) {
      const double sy = (static_cast<double>(y) + 0.5) * pr / static_cast<double>(rows) - 0.5;
      const double sx = (static_cast<double>(x) + 0.5) * pc / static_cast<double>(cols) - 0.5;
      out[y * cols + x] = sample(image, rows, cols, sy - pad, sx - pad);
    }
  }
  return out;
}

std::vector<double> transform_image(std::span<const double> image, std::size_t rows,
                                    std::size_t cols, Transform t, int k) {
  if (k == 0) return {image.begin(), image.end()};
  if (t == Transform::kRotate) return rotate_image(image, rows, cols, kRotationStepDegrees * k);
  return pad_and_resize(image, rows, cols, k);
}

TransformPairs make_transform_pairs(const Dataset& d, Transform t, int max_steps,
                                    const std::vector<std::size_t>& base_rows) {
  if (!d.is_image()) fail(ErrorKind::kNonImageDataset, "transform pairs need images");
  if (max_steps < 1) fail(ErrorKind::kInvalidArgument, "max steps must be >= 1");
  std::vector<std::size_t> base = base_rows;
  if (base.empty()) {
    for (std::size_t i = 0; i < d.size(); ++i) base.push_back(i);
  }
  const std::size_t p = d.dim();
  const std::size_t nb = base.size();
  const std::size_t total = nb * (1 + static_cast<std::size_t>(max_steps));
  const std::string name = to_string(t);

  TransformPairs out;
  Dataset& a = out.data;
  std::vector<double> values;
  values.reserve(total * p);
  std::vector<int> steps;
  for (std::size_t b : base) {
    auto img = d.features.data().subspan(b * p, p);
    values.insert(values.end(), img.begin(), img.end());
    a.labels.push_back(d.labels.at(b));
    steps.push_back(0);
  }
  out.pairs.covariate = name;
  for (std::size_t bi = 0; bi < nb; ++bi) {
    auto img = d.features.data().subspan(base[bi] * p, p);
    for (int k = 1; k <= max_steps; ++k) {
      std::vector<double> moved = transform_image(img, d.image_rows, d.image_cols, t, k);
      const std::size_t index = a.labels.size();
      values.insert(values.end(), moved.begin(), moved.end());
      a.labels.push_back(d.labels.at(base[bi]));
      steps.push_back(k);
      out.pairs.entries.push_back({bi, index, -k});
    }
  }
  a.features = Tensor({total, p}, std::move(values));
  a.class_names = d.class_names;
  a.feature_names = d.feature_names;
  a.image_rows = d.image_rows;
  a.image_cols = d.image_cols;
  a.content_hash = fnv1a(name + std::to_string(max_steps), d.content_hash);
  pairing::CovariateColumn col;
  col.spec.name = name;
  col.spec.column = name;
  col.spec.kind = pairing::CovariateKind::kOrdinal;
  col.spec.bins.rule = pairing::BinRule::kLevels;
  col.spec.constraint = pairing::Constraint::kEquivariance;
  col.spec.morphism = pairing::MorphismKind::kOrthogonal;
  col.codes = steps;
  for (int k = 0; k <= max_steps; ++k) {
    col.levels.push_back(std::to_string(k));
    col.edges.push_back(k);
  }
  auto& raw = a.raw_columns[name];
  for (int k : steps) {
    raw.push_back(std::to_string(k));
    col.raw.push_back(k);
  }
  a.covariates.columns.push_back(std::move(col));
  return out;
}

pairing::PairSet make_successor_pairs(const Dataset& d, std::uint64_t seed,
                                      const std::string& covariate) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < d.size(); ++i) by_class[d.labels[i]].push_back(i);
  if (by_class.size() < 2) fail(ErrorKind::kEmptyClass, "successor pairs need two classes");
  const int lo = by_class.begin()->first;
  const int hi = by_class.rbegin()->first;
  for (int l = lo; l <= hi; ++l) {
    if (!by_class.count(l)) {
      fail(ErrorKind::kEmptyClass, "no image of class " + std::to_string(l));
    }
  }
  pairing::PairSet out{covariate, {}};
  for (int l = lo; l < hi; ++l) {
    std::vector<std::size_t> from = by_class[l];
    std::vector<std::size_t> to = by_class[l + 1];
    Rng rng(derive_seed(seed, "successor", static_cast<std::uint64_t>(l)));
    shuffle_indices(from, rng);
    shuffle_indices(to, rng);
    const std::size_t n = std::min(from.size(), to.size());
    for (std::size_t k = 0; k < n; ++k) out.entries.push_back({from[k], to[k], -1});
  }
  return out;
}

}  // namespace catharm::dataio
