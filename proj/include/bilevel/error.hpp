// Copyright 2026 The bilevel-svr Authors
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

#ifndef BILEVEL_ERROR_HPP_
#define BILEVEL_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace bilevel {

enum class ErrorCode {
  kInvertedBounds,
  kDuplicateName,
  kUnknownVariable,
  kNonAffineLowerConstraint,
  kMissingAssignment,
  kInvalidModel,
  kMissingExpansionParams,
  kNonpositiveBigM,
  kInvalidTau,
  kInvalidBits,
  kUnboundedPartner,
  kInvalidInstance,
  kDimensionMismatch,
  kPatternCapExceeded,
  kBilevelInfeasible,
  kQuadraticUnsupported,
  kIo,
  kParse,
  kNumerical,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bilevel

#endif  // BILEVEL_ERROR_HPP_
