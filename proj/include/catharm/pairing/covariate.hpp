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

#ifndef CATHARM_PAIRING_COVARIATE_HPP_
#define CATHARM_PAIRING_COVARIATE_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace catharm::pairing {

enum class CovariateKind { kCategorical, kOrdinal };
enum class Constraint { kInvariance, kEquivariance };
enum class MorphismKind { kNone, kLinear, kOrthogonal };
// How an invariance constraint is imposed: paired latent distances, or the
// MMD baseline between groups.
enum class Penalty { kPairs, kMmd };
enum class PairPolicy { kAll, kMatched };

enum class BinRule {
  kIdentity,  // categorical: first-appearance order of the raw values
  kWidth,     // floor((v - anchor) / width)
  kEdges,     // index i with edges[i] <= v < edges[i+1] (last edge inclusive)
  kLevels,    // rank among the sorted distinct values
};

struct Binning {
  BinRule rule = BinRule::kIdentity;
  double width = 10.0;
  double anchor = 0.0;
  std::vector<double> edges;

  friend bool operator==(const Binning&, const Binning&) = default;
};

struct CovariateSpec {
  std::string name;
  CovariateKind kind = CovariateKind::kCategorical;
  std::string column;  // source column; "label" derives from the labels
  Binning bins;
  Constraint constraint = Constraint::kInvariance;
  MorphismKind morphism = MorphismKind::kNone;
  std::size_t morphism_dim = 0;
  Penalty penalty = Penalty::kPairs;
  PairPolicy policy = PairPolicy::kAll;
  bool include_d0 = false;
  bool match_label = true;

  // Throws kInvalidArgument when the fields contradict each other.
  void validate() const;
  friend bool operator==(const CovariateSpec&, const CovariateSpec&) = default;
};

std::string to_string(CovariateKind v);
std::string to_string(Constraint v);
std::string to_string(MorphismKind v);
std::string to_string(Penalty v);
std::string to_string(PairPolicy v);

// Integer codes of one covariate for every row, together with its spec and
// the bin descriptions used in reports.
struct CovariateColumn {
  CovariateSpec spec;
  std::vector<int> codes;
  std::vector<std::string> levels;  // categorical/levels: raw value per code
  std::vector<double> edges;        // numeric bin boundaries when known
  std::vector<double> raw;          // numeric source values (NaN if none)
};

struct CovariateTable {
  std::vector<CovariateColumn> columns;

  std::size_t size() const { return columns.size(); }
  const CovariateColumn& at(const std::string& name) const;
  std::optional<std::size_t> find(const std::string& name) const;
  // Keeps the given rows, in order.
  CovariateTable subset(const std::vector<std::size_t>& rows) const;
};

}  // namespace catharm::pairing

#endif  // CATHARM_PAIRING_COVARIATE_HPP_
