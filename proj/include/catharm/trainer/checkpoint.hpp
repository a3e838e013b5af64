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

#ifndef CATHARM_TRAINER_CHECKPOINT_HPP_
#define CATHARM_TRAINER_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "catharm/functors/model.hpp"
#include "catharm/pairing/covariate.hpp"

namespace catharm::trainer {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout: "CTHM" | version u32 | entry count u32 | entries | u32 length +
// UTF-8 JSON metadata. An entry is name (u16 length + bytes), ndim u8, dims
// u32 each, then float64 payload, row-major. All integers little-endian.
struct Checkpoint {
  functors::ModelBundle bundle;
  // Per-fold models of a cross-validated run, tensors named "fold<k>/...".
  std::vector<functors::ModelBundle> folds;
  std::vector<pairing::CovariateSpec> specs;
  std::string config_hash;
  std::uint64_t seed = 0;
  nlohmann::json extra = nlohmann::json::object();
};

std::string encode_checkpoint(const Checkpoint& c);
// Throws kBadMagic, kVersionMismatch or kTruncated.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

bool bundles_bit_equal(const functors::ModelBundle& a, const functors::ModelBundle& b);

nlohmann::json spec_to_json(const pairing::CovariateSpec& s);
pairing::CovariateSpec spec_from_json(const nlohmann::json& j);

}  // namespace catharm::trainer

#endif  // CATHARM_TRAINER_CHECKPOINT_HPP_
