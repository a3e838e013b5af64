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

#ifndef CATHARM_COMMON_ERROR_HPP_
#define CATHARM_COMMON_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace catharm {

// Every failure raised by the library carries one of these kinds so callers
// (and the CLI exit-code mapping) can dispatch without parsing messages.
enum class ErrorKind {
  kInvalidArgument,
  kShapeMismatch,
  kDimensionMismatch,
  kNonFinite,
  kOutputNotScalar,
  kForwardNotRun,
  kNonInvertibleMorphism,
  kPowerLimitExceeded,
  kFractionalPowerOnNonOrthogonal,
  kFractionalPowerUndefined,
  kLabelOutOfRange,
  kValueOutOfRange,
  kEmptyTargetBin,
  kEmptyClass,
  kDegenerateInput,
  kUnknownCovariate,
  kNonImageDataset,
  kMissingColumn,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kHashMismatch,
  kIo,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  // what() without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace catharm

#endif  // CATHARM_COMMON_ERROR_HPP_
