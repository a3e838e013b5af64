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

#include "catharm/pairing/covariate.hpp"

#include "catharm/common/error.hpp"

namespace catharm::pairing {

namespace {
[[noreturn]] void invalid(const CovariateSpec& s, const std::string& msg) {
  fail(ErrorKind::kInvalidArgument, "covariate '" + s.name + "': " + msg);
}
}  // namespace

void CovariateSpec::validate() const {
  if (name.empty()) fail(ErrorKind::kInvalidArgument, "covariate without a name");
  if (kind == CovariateKind::kCategorical) {
    if (constraint != Constraint::kInvariance) {
      invalid(*this, "categorical covariates only support invariance");
    }
    if (bins.rule != BinRule::kIdentity) invalid(*this, "categorical covariates take no bins");
  } else if (bins.rule == BinRule::kIdentity) {
    invalid(*this, "ordinal covariates need a binning rule");
  }
  if (bins.rule == BinRule::kWidth && !(bins.width > 0.0)) {
    invalid(*this, "bin width must be positive");
  }
  if (bins.rule == BinRule::kEdges) {
    if (bins.edges.size() < 2) invalid(*this, "need at least two bin edges");
    for (std::size_t i = 1; i < bins.edges.size(); ++i) {
      if (!(bins.edges[i] > bins.edges[i - 1])) invalid(*this, "bin edges must increase");
    }
  }
  if (constraint == Constraint::kEquivariance && morphism == MorphismKind::kNone) {
    invalid(*this, "equivariance needs a morphism");
  }
  if (constraint == Constraint::kInvariance && morphism != MorphismKind::kNone) {
    invalid(*this, "invariance takes no morphism");
  }
  if (penalty == Penalty::kMmd && constraint != Constraint::kInvariance) {
    invalid(*this, "the mmd penalty is an invariance penalty");
  }
}

std::string to_string(CovariateKind v) {
  return v == CovariateKind::kCategorical ? "categorical" : "ordinal";
}
std::string to_string(Constraint v) {
  return v == Constraint::kInvariance ? "invariance" : "equivariance";
}
std::string to_string(MorphismKind v) {
  switch (v) {
    case MorphismKind::kNone: return "none";
    case MorphismKind::kLinear: return "linear";
    case MorphismKind::kOrthogonal: return "orthogonal";
  }
  return "none";
}
std::string to_string(Penalty v) { return v == Penalty::kPairs ? "pairs" : "mmd"; }
std::string to_string(PairPolicy v) { return v == PairPolicy::kAll ? "all" : "matched"; }

const CovariateColumn& CovariateTable::at(const std::string& name) const {
  if (auto i = find(name)) return columns[*i];
  fail(ErrorKind::kUnknownCovariate, "unknown covariate '" + name + "'");
}

std::optional<std::size_t> CovariateTable::find(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].spec.name == name) return i;
  }
  return std::nullopt;
}

CovariateTable CovariateTable::subset(const std::vector<std::size_t>& rows) const {
  CovariateTable out;
  for (const CovariateColumn& c : columns) {
    CovariateColumn s{c.spec, {}, c.levels, c.edges, {}};
    s.codes.reserve(rows.size());
    for (std::size_t r : rows) {
      s.codes.push_back(c.codes.at(r));
      if (!c.raw.empty()) s.raw.push_back(c.raw.at(r));
    }
    out.columns.push_back(std::move(s));
  }
  return out;
}

}  // namespace catharm::pairing
