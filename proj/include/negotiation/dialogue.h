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

#ifndef NEGOTIATION_DIALOGUE_H_
#define NEGOTIATION_DIALOGUE_H_

#include <optional>
#include <string>
#include <vector>

#include "negotiation/catalog.h"
#include "negotiation/intent.h"

namespace negotiation {

enum class Speaker { kCustomer, kAgent };

std::string_view speaker_name(Speaker speaker);

struct DialogueTurn {
  Speaker speaker = Speaker::kCustomer;
  CompositeIntent intent{Intent::kGreet};
  std::string text;
  std::optional<Money> price_offer;
  std::vector<BundleOp> bundle_ops;

  friend bool operator==(const DialogueTurn&, const DialogueTurn&) = default;
};

enum class OutcomeStatus { kAccepted, kRejected };

struct Outcome {
  OutcomeStatus status = OutcomeStatus::kRejected;
  std::optional<Money> final_price;

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

struct Dialogue {
  std::string id;
  Bundle bundle;  // as it stood before the first turn
  std::vector<DialogueTurn> turns;
  Outcome outcome;

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

struct Violation {
  int turn = -1;  // -1 for dialogue-level rules (outcome, emptiness)
  std::string rule;
};

// Rules that hold for any prefix of a live conversation: the customer opens
// with a greeting, speakers alternate, prices appear where the intent calls
// for them and bundle ops replay cleanly.
std::vector<Violation> validate_prefix(const Bundle& bundle,
                                       const std::vector<DialogueTurn>& turns);

// Prefix rules plus the closing rules (terminal intent, outcome record).
std::vector<Violation> validate_dialogue(const Dialogue& dialogue);

// The bundle after replaying every turn's ops.
Bundle final_bundle(const Dialogue& dialogue);

}  // namespace negotiation

#endif  // NEGOTIATION_DIALOGUE_H_
