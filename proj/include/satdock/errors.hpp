// Copyright 2026 The satdock Authors
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

#ifndef SATDOCK_ERRORS_HPP_
#define SATDOCK_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace satdock {

// Mirrors satdock_status in satdock.h; values must stay in sync.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kInvalidConfig = 2,
  kSingularMassMatrix = 3,
  kNonFiniteState = 4,
  kFunnelBreach = 5,
  kInfeasibleStart = 6,
  kNonFiniteGradient = 7,
  kIo = 8,
  kShapeMismatch = 9,
  kInternal = 99,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define SATDOCK_DEFINE_ERROR(Name, Code)          \
  class Name : public Error {                     \
   public:                                        \
    explicit Name(const std::string& what)        \
        : Error(ErrorCode::Code, what) {}         \
  };

SATDOCK_DEFINE_ERROR(InvalidArgument, kInvalidArgument)
SATDOCK_DEFINE_ERROR(InvalidConfig, kInvalidConfig)
SATDOCK_DEFINE_ERROR(SingularMassMatrix, kSingularMassMatrix)
SATDOCK_DEFINE_ERROR(NonFiniteState, kNonFiniteState)
SATDOCK_DEFINE_ERROR(FunnelBreach, kFunnelBreach)
SATDOCK_DEFINE_ERROR(InfeasibleStart, kInfeasibleStart)
SATDOCK_DEFINE_ERROR(NonFiniteGradient, kNonFiniteGradient)
SATDOCK_DEFINE_ERROR(IoError, kIo)
SATDOCK_DEFINE_ERROR(ShapeMismatch, kShapeMismatch)

#undef SATDOCK_DEFINE_ERROR

}  // namespace satdock

#endif  // SATDOCK_ERRORS_HPP_
