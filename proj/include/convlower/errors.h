// Copyright 2026 The convlower Authors. All Rights Reserved.
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

#ifndef CONVLOWER_ERRORS_H_
#define CONVLOWER_ERRORS_H_

#include <stdexcept>
#include <string>
#include <vector>

namespace convlower {

// Base of every error raised by the library. Subclasses name the failed
// precondition so callers (and the CLI) can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CONVLOWER_DEFINE_ERROR(Name)          \
  class Name : public Error {                 \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Error(#Name ": " + what) {}         \
  }

CONVLOWER_DEFINE_ERROR(ChannelMismatch);
CONVLOWER_DEFINE_ERROR(UnsupportedPadding);
CONVLOWER_DEFINE_ERROR(InvalidKernel);
CONVLOWER_DEFINE_ERROR(InvalidDimension);
CONVLOWER_DEFINE_ERROR(DimensionMismatch);
CONVLOWER_DEFINE_ERROR(ShapeMismatch);
CONVLOWER_DEFINE_ERROR(DomainTooSmall);
CONVLOWER_DEFINE_ERROR(SoundnessFailure);
CONVLOWER_DEFINE_ERROR(ParseError);

#undef CONVLOWER_DEFINE_ERROR

// Raised by audit_plan; carries every violated invariant, not just the first.
class AuditFailure : public Error {
 public:
  explicit AuditFailure(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace convlower

#endif  // CONVLOWER_ERRORS_H_
