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

#include "catharm/numcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "catharm/common/util.hpp"

namespace catharm::numcore {

GradCheckReport grad_check(Graph& graph, std::uint64_t seed, double tolerance,
                           const std::map<std::string, Tensor>& inputs,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  report.tolerance = tolerance;
  const std::vector<std::string> names = graph.parameter_names();
  if (names.empty()) return report;

  graph.forward(inputs);
  const std::map<std::string, Tensor> analytic = graph.backward();

  std::size_t pindex = 0;
  for (const std::string& name : names) {
    Tensor& param = graph.parameter_value(name);
    const Tensor& grad = analytic.at(name);
    std::vector<std::size_t> entries(param.size());
    std::iota(entries.begin(), entries.end(), std::size_t{0});
    if (entries.size() > options.max_entries) {
      Rng rng(derive_seed(seed, "grad_check", pindex));
      shuffle_indices(entries, rng);
      entries.resize(options.max_entries);
      std::sort(entries.begin(), entries.end());
    }
    ParameterCheck check;
    check.name = name;
    for (std::size_t e : entries) {
      const double original = param[e];
      param[e] = original + options.step;
      const double up = graph.forward().item();
      param[e] = original - options.step;
      const double down = graph.forward().item();
      param[e] = original;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = grad[e];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.floor});
      check.max_rel_error = std::max(check.max_rel_error, std::abs(a - numeric) / denom);
      ++check.entries_checked;
    }
    check.pass = check.max_rel_error <= tolerance;
    report.pass = report.pass && check.pass;
    report.parameters.push_back(std::move(check));
    ++pindex;
  }
  graph.forward();
  return report;
}

}  // namespace catharm::numcore
