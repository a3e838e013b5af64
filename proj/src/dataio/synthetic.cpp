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

#include "catharm/dataio/synthetic.hpp"

#include <cmath>

#include "catharm/common/error.hpp"
#include "catharm/common/util.hpp"

namespace catharm::dataio {

Dataset synth_monotone(std::size_t m, std::size_t p, double effect, std::uint64_t seed) {
  if (m < 1 || p < 1) fail(ErrorKind::kInvalidArgument, "synth_monotone needs m, p >= 1");
  Rng rng(derive_seed(seed, "synth_monotone"));
  std::vector<double> w(p);
  double norm = 0.0;
  for (double& v : w) {
    v = standard_normal(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : w) v /= norm;

  Dataset d;
  std::vector<double> values(m * p);
  auto& g_raw = d.raw_columns["g"];
  for (std::size_t i = 0; i < m; ++i) {
    const int g = static_cast<int>(uniform_index(rng, 3));
    double logit = 0.0;
    for (std::size_t c = 0; c < p; ++c) {
      const double x = standard_normal(rng) + effect * g * w[c];
      values[i * p + c] = x;
      logit += w[c] * x;
    }
    const double prob = 1.0 / (1.0 + std::exp(-logit));
    d.truth.push_back(prob);
    d.labels.push_back(uniform01(rng) < prob ? 1 : 0);
    g_raw.push_back(std::to_string(g));
  }
  d.features = Tensor({m, p}, std::move(values));
  d.class_names = {"0", "1"};
  for (std::size_t c = 0; c < p; ++c) {
    d.feature_names.push_back("x" + std::to_string(c));
    d.numeric_columns.push_back(c);
  }
  d.content_hash = fnv1a("synth_monotone:" + std::to_string(m) + ":" + std::to_string(p) + ":" +
                         format_double(effect) + ":" + std::to_string(seed));
  return d;
}

}  // namespace catharm::dataio
