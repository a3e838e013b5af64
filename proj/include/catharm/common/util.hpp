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

#ifndef CATHARM_COMMON_UTIL_HPP_
#define CATHARM_COMMON_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace catharm {

// All randomness in the library flows through this engine so a seed fully
// determines a run on a given platform.
using Rng = std::mt19937_64;

// Derives an independent stream for a named sub-task (fold, probe, epoch).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index = 0);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::span<const double> values,
                    std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

// Fisher-Yates with the project engine. std::shuffle's algorithm is
// unspecified, this one is fixed.
void shuffle_indices(std::vector<std::size_t>& v, Rng& rng);
std::size_t uniform_index(Rng& rng, std::size_t n);
double uniform01(Rng& rng);
double standard_normal(Rng& rng);

// Writes to a temporary sibling and renames over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

void log_warning(std::string_view message);
void log_info(std::string_view message);
void set_log_quiet(bool quiet);

}  // namespace catharm

#endif  // CATHARM_COMMON_UTIL_HPP_
