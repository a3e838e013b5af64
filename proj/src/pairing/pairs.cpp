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

#include "catharm/pairing/pairs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"

namespace catharm::pairing {

namespace {

double parse_number(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(ErrorKind::kValueOutOfRange, "'" + s + "' is not a number");
  }
  return v;
}

}  // namespace

BinResult bin_covariate(const std::vector<double>& values, const CovariateSpec& spec) {
  BinResult out;
  out.codes.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::kValueOutOfRange, spec.name + ": non-finite value");
  }
  switch (spec.bins.rule) {
    case BinRule::kIdentity: {
      std::vector<std::string> text;
      for (double v : values) text.push_back(format_double(v));
      return bin_covariate(text, spec);
    }
    case BinRule::kWidth: {
      int hi = -1;
      for (double v : values) {
        const double q = std::floor((v - spec.bins.anchor) / spec.bins.width);
        if (q < 0.0 || q > 1e6) {
          fail(ErrorKind::kValueOutOfRange,
               spec.name + ": value " + format_double(v) + " below the bin anchor");
        }
        out.codes.push_back(static_cast<int>(q));
        hi = std::max(hi, out.codes.back());
      }
      for (int k = 0; k <= hi + 1; ++k) {
        out.edges.push_back(spec.bins.anchor + spec.bins.width * k);
      }
      return out;
    }
    case BinRule::kEdges: {
      const auto& e = spec.bins.edges;
      for (double v : values) {
        if (v < e.front() || v > e.back()) {
          fail(ErrorKind::kValueOutOfRange,
               spec.name + ": value " + format_double(v) + " outside [" +
                   format_double(e.front()) + ", " + format_double(e.back()) + "]");
        }
        auto it = std::upper_bound(e.begin(), e.end(), v);
        int code = static_cast<int>(it - e.begin()) - 1;
        code = std::min(code, static_cast<int>(e.size()) - 2);
        out.codes.push_back(code);
      }
      out.edges = e;
      return out;
    }
    case BinRule::kLevels: {
      std::vector<double> levels(values);
      std::sort(levels.begin(), levels.end());
      levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
      for (double v : values) {
        out.codes.push_back(static_cast<int>(
            std::lower_bound(levels.begin(), levels.end(), v) - levels.begin()));
      }
      for (double l : levels) out.levels.push_back(format_double(l));
      out.edges = levels;
      return out;
    }
  }
  return out;
}

BinResult bin_covariate(const std::vector<std::string>& values, const CovariateSpec& spec) {
  if (spec.bins.rule != BinRule::kIdentity) {
    std::vector<double> numbers;
    numbers.reserve(values.size());
    for (const std::string& s : values) numbers.push_back(parse_number(s));
    return bin_covariate(numbers, spec);
  }
  BinResult out;
  std::map<std::string, int> seen;
  for (const std::string& s : values) {
    auto [it, inserted] = seen.emplace(s, static_cast<int>(out.levels.size()));
    if (inserted) out.levels.push_back(s);
    out.codes.push_back(it->second);
  }
  return out;
}

PairOptions PairOptions::from_spec(const CovariateSpec& spec, std::size_t max_pairs) {
  return PairOptions{spec.policy, spec.include_d0, spec.match_label, max_pairs};
}

PairSet enumerate_pairs(const CovariateTable& table, const std::vector<int>& labels,
                        const std::string& covariate, const PairOptions& options,
                        const std::vector<std::size_t>& batch, std::uint64_t seed) {
  const std::size_t col = table.find(covariate).value_or(table.size());
  if (col == table.size()) {
    fail(ErrorKind::kUnknownCovariate, "unknown covariate '" + covariate + "'");
  }
  const std::vector<int>& codes = table.columns[col].codes;
  std::vector<std::size_t> rows;
  std::set<std::size_t> seen;
  for (std::size_t r : batch) {
    if (r >= codes.size()) {
      fail(ErrorKind::kInvalidArgument, "batch index " + std::to_string(r) + " out of range");
    }
    if (seen.insert(r).second) rows.push_back(r);
  }

  PairSet out{covariate, {}};
  auto agree = [&](std::size_t i, std::size_t j) {
    if (options.match_label && !labels.empty() && labels.at(i) != labels.at(j)) return false;
    for (std::size_t c = 0; c < table.size(); ++c) {
      if (c != col && table.columns[c].codes[i] != table.columns[c].codes[j]) return false;
    }
    return true;
  };
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < rows.size(); ++b) {
      if (a == b) continue;
      std::size_t i = rows[a];
      std::size_t j = rows[b];
      const int d = codes[i] - codes[j];
      if (d == 0 && !options.include_d0) continue;
      if (options.policy == PairPolicy::kMatched) {
        if (i > j || !agree(i, j)) continue;
      }
      out.entries.push_back({i, j, d});
    }
  }
  if (out.entries.size() > options.max_pairs) {
    std::vector<std::size_t> idx(out.entries.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "pairs:" + covariate));
    shuffle_indices(idx, rng);
    idx.resize(options.max_pairs);
    std::sort(idx.begin(), idx.end());
    std::vector<Pair> kept;
    kept.reserve(idx.size());
    for (std::size_t k : idx) kept.push_back(out.entries[k]);
    out.entries = std::move(kept);
  }
  return out;
}

std::map<int, std::size_t> pair_stats(const PairSet& pairs) {
  std::map<int, std::size_t> hist;
  for (const Pair& p : pairs.entries) ++hist[p.d];
  return hist;
}

std::string pairs_csv(const std::vector<PairSet>& sets) {
  std::ostringstream ss;
  ss << "covariate,i,j,d\n";
  for (const PairSet& s : sets) {
    for (const Pair& p : s.entries) {
      ss << s.covariate << ',' << p.i << ',' << p.j << ',' << p.d << '\n';
    }
  }
  return ss.str();
}

}  // namespace catharm::pairing
