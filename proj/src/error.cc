// Copyright 2026 The Bundle Negotiation Authors.
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

#include "negotiation/error.h"

namespace negotiation {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownItem: return "UnknownItem";
    case ErrorCode::kMainNotRemovable: return "MainNotRemovable";
    case ErrorCode::kRedundantOp: return "RedundantOp";
    case ErrorCode::kInvalidBundle: return "InvalidBundle";
    case ErrorCode::kInvalidState: return "InvalidState";
    case ErrorCode::kClosedDeal: return "ClosedDeal";
    case ErrorCode::kUnmappedIntent: return "UnmappedIntent";
    case ErrorCode::kUnknownIntent: return "UnknownIntent";
    case ErrorCode::kMissingTemplate: return "MissingTemplate";
    case ErrorCode::kUnresolvedSlot: return "UnresolvedSlot";
    case ErrorCode::kNoShotsForIntent: return "NoShotsForIntent";
    case ErrorCode::kTokenBudgetExceeded: return "TokenBudgetExceeded";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kUnknownClass: return "UnknownClass";
    case ErrorCode::kZeroInitialPrice: return "ZeroInitialPrice";
    case ErrorCode::kZeroMinPrice: return "ZeroMinPrice";
    case ErrorCode::kInvalidDialogue: return "InvalidDialogue";
    case ErrorCode::kNoLegalAction: return "NoLegalAction";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kDegenerateBatch: return "DegenerateBatch";
    case ErrorCode::kEmptyCatalog: return "EmptyCatalog";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kBadRatios: return "BadRatios";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kUnknownBundle: return "UnknownBundle";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kSessionClosed: return "SessionClosed";
    case ErrorCode::kIllegalIntent: return "IllegalIntent";
    case ErrorCode::kLowConfidence: return "LowConfidence";
    case ErrorCode::kTurnInProgress: return "TurnInProgress";
  }
  return "Unknown";
}

}  // namespace negotiation
