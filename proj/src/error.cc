// Copyright 2026 The m22 Authors. All Rights Reserved.
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
// =============================================================================

#include "m22/error.h"

namespace m22 {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidFamily: return "invalid-family";
    case ErrorCode::kSingularPoint: return "singular-point";
    case ErrorCode::kDegenerateSample: return "degenerate-sample";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kIndexOutOfRange: return "index-out-of-range";
    case ErrorCode::kEmptyCell: return "empty-cell";
    case ErrorCode::kNonConvergence: return "non-convergence";
    case ErrorCode::kDegenerateRange: return "degenerate-range";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kTableMismatch: return "table-mismatch";
    case ErrorCode::kMalformedPayload: return "malformed-payload";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kTruncatedStream: return "truncated-stream";
    case ErrorCode::kConfigError: return "config-error";
    case ErrorCode::kUnknownScheme: return "unknown-scheme";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown";
}

}  // namespace m22
