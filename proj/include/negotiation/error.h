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

#ifndef NEGOTIATION_ERROR_H_
#define NEGOTIATION_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace negotiation {

// Every failure raised by the library carries one of these codes. The service
// layer forwards the code name verbatim in its error bodies.
enum class ErrorCode {
  kUnknownItem,
  kMainNotRemovable,
  kRedundantOp,
  kInvalidBundle,
  kInvalidState,
  kClosedDeal,
  kUnmappedIntent,
  kUnknownIntent,
  kMissingTemplate,
  kUnresolvedSlot,
  kNoShotsForIntent,
  kTokenBudgetExceeded,
  kInsufficientData,
  kUnknownClass,
  kZeroInitialPrice,
  kZeroMinPrice,
  kInvalidDialogue,
  kNoLegalAction,
  kEmptyCorpus,
  kDegenerateBatch,
  kEmptyCatalog,
  kBadConfig,
  kBadRatios,
  kIoFailure,
  kSchemaViolation,
  kUnknownBundle,
  kUnknownSession,
  kSessionClosed,
  kIllegalIntent,
  kLowConfidence,
  kTurnInProgress,
};

std::string_view error_code_name(ErrorCode code);

class NegotiationError : public std::runtime_error {
 public:
  NegotiationError(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace negotiation

#endif  // NEGOTIATION_ERROR_H_
