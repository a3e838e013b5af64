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

#ifndef CATHARM_TESTS_PAIRS_ORACLE_HPP_
#define CATHARM_TESTS_PAIRS_ORACLE_HPP_

#include <cstddef>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "catharm/common/util.hpp"
#include "catharm/pairing/pairs.hpp"

namespace catharm::oracles {

using pairing::CovariateTable;
using pairing::PairOptions;
using pairing::PairPolicy;
using Triple = std::tuple<std::size_t, std::size_t, int>;

// Columns c0, c1, ... holding the given codes.
inline CovariateTable table_of(std::vector<std::vector<int>> codes) {
  CovariateTable t;
  for (std::size_t c = 0; c < codes.size(); ++c) {
    pairing::CovariateColumn col;
    col.spec.name = "c" + std::to_string(c);
    col.codes = std::move(codes[c]);
    t.columns.push_back(std::move(col));
  }
  return t;
}

// Every pair the policy admits, by exhaustive search.
inline std::set<Triple> brute_force_pairs(const std::vector<std::vector<int>>& codes,
                                          const std::vector<int>& labels, std::size_t col,
                                          const PairOptions& o, const std::vector<std::size_t>& batch) {
  std::set<Triple> out;
  for (std::size_t i : batch) {
    for (std::size_t j : batch) {
      if (i == j) continue;
      const int d = codes[col][i] - codes[col][j];
      if (d == 0 && !o.include_d0) continue;
      if (o.policy == PairPolicy::kMatched) {
        if (!(i < j)) continue;
        if (o.match_label && labels[i] != labels[j]) continue;
        bool same = true;
        for (std::size_t c = 0; c < codes.size(); ++c) {
          if (c != col && codes[c][i] != codes[c][j]) same = false;
        }
        if (!same) continue;
      }
      out.insert({i, j, d});
    }
  }
  return out;
}

// Random tables of 1..12 rows with three covariates, under every policy and
// flag combination. Returns the number of cases that disagree with the
// oracle (or carry duplicates); `cases` receives the total.
inline std::size_t pair_oracle_mismatches(std::uint64_t seed, std::size_t trials, std::size_t& cases) {
  Rng rng(seed);
  std::size_t bad = 0;
  cases = 0;
  for (std::size_t m = 1; m <= 12; ++m) {
    for (std::size_t trial = 0; trial < trials; ++trial) {
      std::vector<std::vector<int>> codes(3, std::vector<int>(m));
      std::vector<int> labels(m);
      for (auto& c : codes) {
        for (int& v : c) v = static_cast<int>(uniform_index(rng, 3));
      }
      for (int& v : labels) v = static_cast<int>(uniform_index(rng, 2));
      const CovariateTable t = table_of(codes);
      std::vector<std::size_t> batch(m);
      for (std::size_t i = 0; i < m; ++i) batch[i] = i;
      shuffle_indices(batch, rng);
      for (PairPolicy policy : {PairPolicy::kAll, PairPolicy::kMatched}) {
        for (bool d0 : {false, true}) {
          for (bool ml : {false, true}) {
            const PairOptions o{policy, d0, ml, 4096};
            for (std::size_t col = 0; col < 3; ++col) {
              const auto p = pairing::enumerate_pairs(t, labels, "c" + std::to_string(col), o, batch, 5);
              std::set<Triple> got;
              for (const auto& e : p.entries) got.insert({e.i, e.j, e.d});
              ++cases;
              if (got.size() != p.size() || got != brute_force_pairs(codes, labels, col, o, batch)) ++bad;
            }
          }
        }
      }
    }
  }
  return bad;
}

}  // namespace catharm::oracles

#endif  // CATHARM_TESTS_PAIRS_ORACLE_HPP_
