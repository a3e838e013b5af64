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

#ifndef CATHARM_DATAIO_DATASET_HPP_
#define CATHARM_DATAIO_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "catharm/numcore/tensor.hpp"
#include "catharm/pairing/covariate.hpp"

namespace catharm::dataio {

using numcore::Tensor;

struct Dataset {
  Tensor features;  // {m, p}
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  // Columns eligible for standardization (the numeric tabular columns).
  std::vector<std::size_t> numeric_columns;
  // Raw values of covariate-role source columns, by column name.
  std::map<std::string, std::vector<std::string>> raw_columns;
  pairing::CovariateTable covariates;
  // Ground-truth class-1 probability when generated synthetically.
  std::vector<double> truth;
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
  std::uint64_t content_hash = 0;
  std::size_t dropped_rows = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  std::size_t num_classes() const { return class_names.size(); }
  bool is_image() const { return image_rows > 0; }

  // Rows in the given order; covariates, raw columns and truth follow.
  Dataset subset(const std::vector<std::size_t>& rows) const;
  // Hash of features, labels and covariate codes.
  std::uint64_t fingerprint() const;
};

// Bins every spec from its source column ("label" uses the class index)
// and replaces the covariate table. Throws kMissingColumn.
void bind_covariates(Dataset& d, const std::vector<pairing::CovariateSpec>& specs);

// Per-column z-scoring fitted on a subset of rows (population std; constant
// columns keep scale 1).
struct Standardizer {
  std::vector<std::size_t> columns;
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Tensor& x, const std::vector<std::size_t>& columns,
                          const std::vector<std::size_t>& rows);
  void apply(Tensor& x) const;
};

// Seeded stratified k-fold: fold sizes differ by at most one and each class
// is spread as evenly as possible. Each fold is sorted.
std::vector<std::vector<std::size_t>> kfold_split(const std::vector<int>& labels,
                                                  std::size_t k, std::uint64_t seed);

// Seeded subsample of n rows keeping the original order.
std::vector<std::size_t> subsample_rows(std::size_t m, std::size_t n, std::uint64_t seed);

}  // namespace catharm::dataio

#endif  // CATHARM_DATAIO_DATASET_HPP_
