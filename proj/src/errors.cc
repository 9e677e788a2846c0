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

#include "ptf/errors.h"

namespace ptf {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotHarmonic: return "NotHarmonic";
    case ErrorCode::kDeltaOutOfRange: return "DeltaOutOfRange";
    case ErrorCode::kWeightedDegreeExceeded: return "WeightedDegreeExceeded";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kEmptyLevel: return "EmptyLevel";
    case ErrorCode::kRankDeficientSetup: return "RankDeficientSetup";
    case ErrorCode::kNotPureHarmonic: return "NotPureHarmonic";
    case ErrorCode::kNotSufficientlyNonSingular: return "NotSufficientlyNonSingular";
    case ErrorCode::kCoefficientBlowup: return "CoefficientBlowup";
    case ErrorCode::kDecompositionFailed: return "DecompositionFailed";
    case ErrorCode::kAcceptanceTooLow: return "AcceptanceTooLow";
    case ErrorCode::kNoCellsKept: return "NoCellsKept";
    case ErrorCode::kIllConditioned: return "IllConditioned";
    case ErrorCode::kFilterDiverged: return "FilterDiverged";
    case ErrorCode::kNoProgress: return "NoProgress";
    case ErrorCode::kAllGuessesFailed: return "AllGuessesFailed";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kFileMissing: return "FileMissing";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace ptf
