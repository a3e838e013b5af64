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

#ifndef CATHARM_NUMCORE_GRAD_CHECK_HPP_
#define CATHARM_NUMCORE_GRAD_CHECK_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "catharm/numcore/graph.hpp"

namespace catharm::numcore {

struct ParameterCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t entries_checked = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<ParameterCheck> parameters;
  double tolerance = 0.0;
  bool pass = true;
};

struct GradCheckOptions {
  double step = 1e-5;
  // Denominator floor of the relative error, so entries whose gradient is
  // ~0 are compared absolutely.
  double floor = 1e-4;
  std::size_t max_entries = 10000;
};

// Compares backward() with central differences on every parameter entry
// (a seeded subsample when a parameter has more than max_entries). Inputs
// must already be bound by a previous forward(), or passed here.
GradCheckReport grad_check(Graph& graph, std::uint64_t seed, double tolerance,
                           const std::map<std::string, Tensor>& inputs = {},
                           const GradCheckOptions& options = {});

}  // namespace catharm::numcore

#endif  // CATHARM_NUMCORE_GRAD_CHECK_HPP_
