// Copyright 2026 The xcoref Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xcoref {

enum class ErrorCode {
  kMalformedRecord,
  kDanglingArgumentRef,
  kDuplicateDocId,
  kMissingDocument,
  kDimMismatch,
  kTruncatedFile,
  kManifestCorrupt,
  kShapeMismatch,
  kUnknownCluster,
  kDuplicateMention,
  kUnknownEntityMention,
  kMissingGold,
  kEmptyDocument,
  kNonFiniteGradient,
  kTooFewDocuments,
  kCoverageMismatch,
  kUniverseMismatch,
  kBoundViolation,
  kInfeasibleConfig,
  kMissingEntityClusters,
  kIoError,
  kInvalidArgument,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDanglingArgumentRef: return "DanglingArgumentRef";
    case ErrorCode::kDuplicateDocId: return "DuplicateDocId";
    case ErrorCode::kMissingDocument: return "MissingDocument";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kManifestCorrupt: return "ManifestCorrupt";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kUnknownCluster: return "UnknownCluster";
    case ErrorCode::kDuplicateMention: return "DuplicateMention";
    case ErrorCode::kUnknownEntityMention: return "UnknownEntityMention";
    case ErrorCode::kMissingGold: return "MissingGold";
    case ErrorCode::kEmptyDocument: return "EmptyDocument";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kTooFewDocuments: return "TooFewDocuments";
    case ErrorCode::kCoverageMismatch: return "CoverageMismatch";
    case ErrorCode::kUniverseMismatch: return "UniverseMismatch";
    case ErrorCode::kBoundViolation: return "BoundViolation";
    case ErrorCode::kInfeasibleConfig: return "InfeasibleConfig";
    case ErrorCode::kMissingEntityClusters: return "MissingEntityClusters";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// All library failures are reported as Error; the code identifies the
// failure class so callers (and the CLI) can react without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace xcoref
