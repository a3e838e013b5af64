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

#ifndef CATHARM_CLI_RENDER_HPP_
#define CATHARM_CLI_RENDER_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "catharm/dataio/dataset.hpp"
#include "catharm/latentnav/traverse.hpp"

namespace catharm::cli {

inline constexpr unsigned char kSeparatorValue = 128;

// Binary PGM (P5, maxval 255) of a grid of tiles with 1px separators.
// Values in [0,1] are clamped and rounded to bytes; missing tiles of a short
// row are black.
std::string pgm_grid(const std::vector<std::vector<numcore::Tensor>>& tiles, std::size_t tile_rows,
                     std::size_t tile_cols);

struct TraversalTile {
  latentnav::TraversalPlan prefix;  // steps applied so far
  numcore::Tensor image;
};

// One tile per cumulative unit step of the plan (a fractional remainder is
// its own final step); the first tile is the plain reconstruction.
std::vector<TraversalTile> traversal_tiles(const functors::ModelBundle& b, const numcore::Tensor& s,
                                           const latentnav::TraversalPlan& plan);

// Per source bin of the covariate, mean class probabilities before and
// after moving every sample by W^delta.
nlohmann::json hypothetical_report(const functors::ModelBundle& b, const dataio::Dataset& data,
                                   const std::string& covariate, double delta);

struct OpCheck {
  std::string op;
  double max_rel_error = 0.0;
  bool pass = true;
};

// Finite-difference check of every differentiable op and of a full
// training loss.
std::vector<OpCheck> grad_check_suite(std::uint64_t seed, double tolerance = 1e-5);

}  // namespace catharm::cli

#endif  // CATHARM_CLI_RENDER_HPP_
