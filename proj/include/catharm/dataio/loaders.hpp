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

#ifndef CATHARM_DATAIO_LOADERS_HPP_
#define CATHARM_DATAIO_LOADERS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "catharm/dataio/dataset.hpp"

namespace catharm::dataio {

enum class ColumnKind { kNumeric, kCategorical };
enum class ColumnRole { kFeature, kLabel, kCovariate, kIgnore };

struct SchemaColumn {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  ColumnRole role = ColumnRole::kFeature;
};

// Lines of "column,kind,role"; blank lines and '#' comments are skipped.
std::vector<SchemaColumn> parse_schema(std::string_view text);

// Categorical features are one-hot encoded (levels in sorted order, taken
// from all rows); the label classes are sorted lexicographically. Rows with
// an empty, "?" or unparseable cell in a used column are dropped.
Dataset parse_tabular_csv(std::string_view csv, const std::vector<SchemaColumn>& schema);
Dataset load_tabular_csv(const std::filesystem::path& csv,
                         const std::filesystem::path& schema);

struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

// Big-endian IDX with unsigned-byte payload. Throws kBadMagic, kTruncated,
// kDimensionMismatch (wrong rank or trailing bytes).
IdxArray parse_idx(std::string_view bytes, std::uint32_t magic);

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// 28x28 images scaled to [0,1]; classes "0".."9".
Dataset parse_mnist(std::string_view images, std::string_view labels);
Dataset load_mnist_idx(const std::filesystem::path& images,
                       const std::filesystem::path& labels);

}  // namespace catharm::dataio

#endif  // CATHARM_DATAIO_LOADERS_HPP_
