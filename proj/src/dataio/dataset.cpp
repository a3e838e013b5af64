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

#include "catharm/dataio/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"
#include "catharm/pairing/pairs.hpp"

namespace catharm::dataio {

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  const std::size_t p = dim();
  std::vector<double> values;
  values.reserve(rows.size() * p);
  for (std::size_t r : rows) {
    if (r >= size()) fail(ErrorKind::kInvalidArgument, "row index out of range");
    auto row = features.data().subspan(r * p, p);
    values.insert(values.end(), row.begin(), row.end());
    out.labels.push_back(labels[r]);
    if (!truth.empty()) out.truth.push_back(truth[r]);
  }
  if (!rows.empty()) out.features = Tensor({rows.size(), p}, std::move(values));
  out.class_names = class_names;
  out.feature_names = feature_names;
  out.numeric_columns = numeric_columns;
  for (const auto& [name, col] : raw_columns) {
    auto& dst = out.raw_columns[name];
    for (std::size_t r : rows) dst.push_back(col[r]);
  }
  out.covariates = covariates.subset(rows);
  out.image_rows = image_rows;
  out.image_cols = image_cols;
  out.content_hash = content_hash;
  return out;
}

std::uint64_t Dataset::fingerprint() const {
  std::uint64_t h = fnv1a(features.data());
  for (int y : labels) h = fnv1a(std::to_string(y) + ",", h);
  for (const auto& c : covariates.columns) {
    h = fnv1a(c.spec.name + ":", h);
    for (int v : c.codes) h = fnv1a(std::to_string(v) + ",", h);
  }
  return h;
}

void bind_covariates(Dataset& d, const std::vector<pairing::CovariateSpec>& specs) {
  pairing::CovariateTable table;
  for (const pairing::CovariateSpec& spec : specs) {
    const std::string column = spec.column.empty() ? spec.name : spec.column;
    std::vector<std::string> values;
    if (column == "label") {
      for (int y : d.labels) values.push_back(d.class_names.at(static_cast<std::size_t>(y)));
    } else {
      auto it = d.raw_columns.find(column);
      if (it == d.raw_columns.end()) {
        fail(ErrorKind::kMissingColumn,
             "covariate '" + spec.name + "' needs column '" + column + "'");
      }
      values = it->second;
    }
    pairing::BinResult bins = pairing::bin_covariate(values, spec);
    pairing::CovariateColumn col{spec, std::move(bins.codes), std::move(bins.levels),
                                 std::move(bins.edges), {}};
    col.raw.reserve(values.size());
    for (const std::string& v : values) {
      char* end = nullptr;
      const double x = std::strtod(v.c_str(), &end);
      col.raw.push_back(end != v.c_str() && *end == '\0' ? x
                                                         : std::numeric_limits<double>::quiet_NaN());
    }
    table.columns.push_back(std::move(col));
  }
  d.covariates = std::move(table);
}

Standardizer Standardizer::fit(const Tensor& x, const std::vector<std::size_t>& columns,
                               const std::vector<std::size_t>& rows) {
  Standardizer s;
  s.columns = columns;
  if (rows.empty()) fail(ErrorKind::kInvalidArgument, "standardizer fitted on no rows");
  for (std::size_t c : columns) {
    double mean = 0.0;
    for (std::size_t r : rows) mean += x.at(r, c);
    mean /= static_cast<double>(rows.size());
    double var = 0.0;
    for (std::size_t r : rows) var += (x.at(r, c) - mean) * (x.at(r, c) - mean);
    var /= static_cast<double>(rows.size());
    const double sd = std::sqrt(var);
    s.mean.push_back(mean);
    s.scale.push_back(sd > 1e-12 ? sd : 1.0);
  }
  return s;
}

void Standardizer::apply(Tensor& x) const {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      double& v = x.at(r, columns[k]);
      v = (v - mean[k]) / scale[k];
    }
  }
}

std::vector<std::vector<std::size_t>> kfold_split(const std::vector<int>& labels,
                                                  std::size_t k, std::uint64_t seed) {
  if (k < 1 || k > labels.size()) {
    fail(ErrorKind::kInvalidArgument, "cannot split " + std::to_string(labels.size()) +
                                          " rows into " + std::to_string(k) + " folds");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(derive_seed(seed, "kfold"));
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (auto& [label, rows] : by_class) {
    shuffle_indices(rows, rng);
    for (std::size_t r : rows) folds[next++ % k].push_back(r);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<std::size_t> subsample_rows(std::size_t m, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n >= m) return idx;
  Rng rng(derive_seed(seed, "subsample"));
  shuffle_indices(idx, rng);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace catharm::dataio
