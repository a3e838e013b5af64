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

#ifndef CATHARM_DATAIO_IMAGES_HPP_
#define CATHARM_DATAIO_IMAGES_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "catharm/dataio/dataset.hpp"
#include "catharm/pairing/pairs.hpp"

namespace catharm::dataio {

enum class Transform { kRotate, kScale };

inline constexpr double kRotationStepDegrees = 5.0;

Transform parse_transform(const std::string& name);
std::string to_string(Transform t);

// Bilinear sampling with zero outside the frame. Images are row-major
// rows x cols.
std::vector<double> rotate_image(std::span<const double> image, std::size_t rows,
                                 std::size_t cols, double degrees);
// Pads `pad` zero pixels on every side, then resizes back to rows x cols.
std::vector<double> pad_and_resize(std::span<const double> image, std::size_t rows,
                                   std::size_t cols, int pad);
// k steps of the transform (k may be negative for rotation).
std::vector<double> transform_image(std::span<const double> image, std::size_t rows,
                                    std::size_t cols, Transform t, int k);

struct TransformPairs {
  Dataset data;             // base rows first, then each base row's k = 1..max
  pairing::PairSet pairs;   // (base, transformed, d = -k)
};

// Augments the given base rows (all rows when empty) with k = 1..max_steps
// transformed copies. The new covariate (named after the transform) holds
// the step count. Throws kNonImageDataset.
TransformPairs make_transform_pairs(const Dataset& d, Transform t, int max_steps,
                                    const std::vector<std::size_t>& base_rows = {});

// Seeded one-to-one matching of digit-l images with digit-(l+1) images for
// every consecutive pair of classes; d = l - (l+1) = -1. Throws kEmptyClass
// when a class inside the label range is empty.
pairing::PairSet make_successor_pairs(const Dataset& d, std::uint64_t seed,
                                      const std::string& covariate = "digit");

}  // namespace catharm::dataio

#endif  // CATHARM_DATAIO_IMAGES_HPP_
