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

#ifndef CATHARM_PAIRING_PAIRS_HPP_
#define CATHARM_PAIRING_PAIRS_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "catharm/pairing/covariate.hpp"

namespace catharm::pairing {

struct BinResult {
  std::vector<int> codes;
  std::vector<std::string> levels;
  std::vector<double> edges;
};

// Ordinal rules parse the values as numbers; categorical specs enumerate
// them. Throws kValueOutOfRange for values outside the declared bins.
BinResult bin_covariate(const std::vector<std::string>& values, const CovariateSpec& spec);
BinResult bin_covariate(const std::vector<double>& values, const CovariateSpec& spec);

struct Pair {
  std::size_t i = 0;
  std::size_t j = 0;
  int d = 0;  // bin(i) - bin(j)

  friend bool operator==(const Pair&, const Pair&) = default;
};

struct PairSet {
  std::string covariate;
  std::vector<Pair> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

struct PairOptions {
  PairPolicy policy = PairPolicy::kAll;
  bool include_d0 = false;
  bool match_label = true;
  std::size_t max_pairs = 4096;

  static PairOptions from_spec(const CovariateSpec& spec, std::size_t max_pairs = 4096);
};

// Pairs among the rows listed in `batch` (indices into the table/labels).
// "all": ordered pairs (both orientations) across bins. "matched": i < j
// agreeing on every other covariate (and the label if match_label).
// Above max_pairs a seeded, order-preserving subsample is kept.
PairSet enumerate_pairs(const CovariateTable& table, const std::vector<int>& labels,
                        const std::string& covariate, const PairOptions& options,
                        const std::vector<std::size_t>& batch, std::uint64_t seed);

std::map<int, std::size_t> pair_stats(const PairSet& pairs);

// CSV "covariate,i,j,d" with a header row and LF line endings.
std::string pairs_csv(const std::vector<PairSet>& sets);

}  // namespace catharm::pairing

#endif  // CATHARM_PAIRING_PAIRS_HPP_
