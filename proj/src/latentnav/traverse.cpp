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

#include "catharm/latentnav/traverse.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"

namespace catharm::latentnav {

namespace {

const functors::Morphism& morphism_for(const ModelBundle& b, const std::string& covariate) {
  auto it = b.morphisms.find(covariate);
  if (it == b.morphisms.end()) {
    fail(ErrorKind::kUnknownCovariate, "bundle has no morphism for '" + covariate + "'");
  }
  return it->second;
}

Tensor as_batch(const Tensor& s) { return s.rank() == 1 ? s.reshaped({1, s.size()}) : s; }

Tensor like_input(const Tensor& out, const Tensor& s) {
  return s.rank() == 1 ? out.reshaped({out.size()}) : out;
}

Tensor move(const functors::Morphism& m, double a, const Tensor& z, int max_power) {
  if (a == std::round(a) && std::abs(a) <= static_cast<double>(std::numeric_limits<int>::max())) {
    return functors::apply_morphism(m, static_cast<int>(a), z, max_power);
  }
  return functors::apply_matrix(functors::morphism_power(m, a, max_power), z);
}

}  // namespace

bool PlanStep::integral() const { return exponent == std::round(exponent); }

void TraversalPlan::validate(const ModelBundle& b) const {
  for (const PlanStep& s : steps) {
    const functors::Morphism& m = morphism_for(b, s.covariate);
    if (!std::isfinite(s.exponent)) fail(ErrorKind::kInvalidArgument, "exponent must be finite");
    if (!s.integral() && !m.orthogonal) {
      fail(ErrorKind::kFractionalPowerOnNonOrthogonal,
           "real exponent " + format_double(s.exponent) + " on non-orthogonal morphism '" +
               s.covariate + "'");
    }
  }
}

TraversalPlan TraversalPlan::parse(const std::string& text) {
  TraversalPlan plan;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == item.size()) {
      fail(ErrorKind::kInvalidArgument, "plan step '" + item + "' is not covariate:exponent");
    }
    const std::string num = item.substr(colon + 1);
    std::size_t used = 0;
    double a = 0.0;
    try {
      a = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != num.size()) fail(ErrorKind::kInvalidArgument, "bad exponent '" + num + "'");
    plan.steps.push_back({item.substr(0, colon), a});
  }
  return plan;
}

std::string TraversalPlan::to_string() const {
  std::string out;
  for (const PlanStep& s : steps) {
    if (!out.empty()) out += ',';
    out += s.covariate + ":" + format_double(s.exponent);
  }
  return out;
}

Tensor traverse_latent(const ModelBundle& b, const Tensor& z, const TraversalPlan& plan, int max_power) {
  plan.validate(b);
  Tensor out = z;
  for (const PlanStep& s : plan.steps) out = move(morphism_for(b, s.covariate), s.exponent, out, max_power);
  return out;
}

Tensor generate_hypothetical(const ModelBundle& b, const Tensor& s, const TraversalPlan& plan) {
  if (!b.decoder) fail(ErrorKind::kInvalidArgument, "bundle has no decoder");
  const Tensor z = traverse_latent(b, functors::encode(b, as_batch(s)), plan);
  return like_input(functors::decode(b, z), s);
}

Tensor answer_hypothetical(const ModelBundle& b, const Tensor& s, const TraversalPlan& plan) {
  if (!b.classifier) fail(ErrorKind::kInvalidArgument, "bundle has no classifier");
  const Tensor z = traverse_latent(b, functors::encode(b, as_batch(s)), plan);
  return like_input(functors::classify(b, z), s);
}

std::vector<Tensor> interpolate(const ModelBundle& b, const Tensor& s, const std::string& covariate,
                                double a_from, double a_to, double step) {
  if (!(step > 0.0) || !std::isfinite(a_from) || !std::isfinite(a_to)) {
    fail(ErrorKind::kInvalidArgument, "interpolation needs a positive step and finite endpoints");
  }
  const functors::Morphism& m = morphism_for(b, covariate);
  if (!m.orthogonal) {
    fail(ErrorKind::kFractionalPowerOnNonOrthogonal,
         "interpolation needs an orthogonal morphism for '" + covariate + "'");
  }
  if (!b.decoder) fail(ErrorKind::kInvalidArgument, "bundle has no decoder");
  // A relative slack keeps grids such as 0 -> 9 by 0.2 inclusive.
  const double span = std::abs(a_to - a_from);
  const auto frames = static_cast<std::size_t>(std::floor(span / step + 1e-9)) + 1;
  const double dir = a_to >= a_from ? 1.0 : -1.0;
  const Tensor z = functors::encode(b, as_batch(s));
  std::vector<Tensor> out;
  for (std::size_t k = 0; k < frames; ++k) {
    const double a = a_from + dir * step * static_cast<double>(k);
    out.push_back(like_input(functors::decode(b, move(m, a, z, functors::kDefaultMaxPower)), s));
  }
  return out;
}

NearestClass nearest_class(const Tensor& image, const Tensor& pool, const std::vector<int>& labels) {
  const std::size_t p = image.size();
  if (pool.rank() != 2 || pool.cols() != p) {
    fail(ErrorKind::kDimensionMismatch, "pool rows must match the image size");
  }
  if (pool.rows() != labels.size() || labels.empty()) {
    fail(ErrorKind::kInvalidArgument, "one label per pool row expected");
  }
  NearestClass best;
  best.mse = std::numeric_limits<double>::infinity();
  const auto x = image.data();
  const auto all = pool.data();
  for (std::size_t r = 0; r < labels.size(); ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double d = all[r * p + j] - x[j];
      s += d * d;
    }
    s /= static_cast<double>(p);
    if (s < best.mse) best = NearestClass{labels[r], s, r};
  }
  return best;
}

}  // namespace catharm::latentnav
