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

#ifndef CATHARM_CLI_COMMANDS_HPP_
#define CATHARM_CLI_COMMANDS_HPP_

namespace catharm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad flags, spec parse errors, hash mismatch
inline constexpr int kExitData = 2;     // missing files, bad data or checkpoints
inline constexpr int kExitNumeric = 3;  // non-finite values during training

// Entry point of the catharm tool; returns the process exit code.
int run(int argc, char** argv);

}  // namespace catharm::cli

#endif  // CATHARM_CLI_COMMANDS_HPP_
