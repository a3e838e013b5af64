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

#ifndef CATHARM_DATAIO_SYNTHETIC_HPP_
#define CATHARM_DATAIO_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>

#include "catharm/dataio/dataset.hpp"

namespace catharm::dataio {

// Binary task with one ordinal covariate g in {0,1,2}. With a random unit
// direction w, x = z + effect * g * w (z standard normal) and
// P(y = 1 | x) = sigmoid(w . x), so g raises the class-1 log-odds by
// effect * g on average and is visible in the features. The raw covariate
// column is "g"; truth holds P(y = 1 | x).
Dataset synth_monotone(std::size_t m, std::size_t p, double effect, std::uint64_t seed);

}  // namespace catharm::dataio

#endif  // CATHARM_DATAIO_SYNTHETIC_HPP_
