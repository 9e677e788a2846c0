// Copyright 2026 The PTF Learning Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PTF_ERRORS_H_
#define PTF_ERRORS_H_

#include <stdexcept>
#include <string>

namespace ptf {

enum class ErrorCode {
  kDimensionMismatch,
  kNotHarmonic,
  kDeltaOutOfRange,
  kWeightedDegreeExceeded,
  kNotNormalized,
  kEmptyLevel,
  kRankDeficientSetup,
  kNotPureHarmonic,
  kNotSufficientlyNonSingular,
  kCoefficientBlowup,
  kDecompositionFailed,
  kAcceptanceTooLow,
  kNoCellsKept,
  kIllConditioned,
  kFilterDiverged,
  kNoProgress,
  kAllGuessesFailed,
  kConfigInvalid,
  kFileMissing,
  kInvalidArgument,
};

const char* ErrorCodeName(ErrorCode code);

// Every library failure is reported through this type; `code()` is stable and
// is what the CLI prints in its error JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ptf

#endif  // PTF_ERRORS_H_
