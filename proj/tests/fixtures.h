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

#ifndef NEGOTIATION_TESTS_FIXTURES_H_
#define NEGOTIATION_TESTS_FIXTURES_H_

#include "negotiation/catalog.h"
#include "negotiation/dialogue.h"

namespace negotiation::testing {

// Tablet bundle priced so that the full deal is 92800 and the deal without
// the stylus is 91100.
inline Bundle tablet_bundle() { return builtin_catalog().bundle_for("tablet"); }

// Golden trace: opening at 92800, stylus removed (91100), customer offers
// 74700, seller counters at 83300 and the customer accepts.
inline Dialogue golden_tablet_dialogue() {
  Dialogue d;
  d.id = "golden-tablet";
  d.bundle = tablet_bundle();
  auto turn = [](Speaker s, const char* intent, const char* text,
                 std::optional<Money> price = std::nullopt,
                 std::vector<BundleOp> ops = {}) {
    DialogueTurn t;
    t.speaker = s;
    t.intent = CompositeIntent::parse(intent);
    t.text = text;
    t.price_offer = price;
    t.bundle_ops = std::move(ops);
    return t;
  };
  using S = Speaker;
  d.turns = {
      turn(S::kCustomer, "Greet-Ask",
           "Hi there, I would like to buy the Lenovo Tab P11 Pro. What is your price?"),
      turn(S::kAgent, "Greet-Inform",
           "Hello! The Lenovo Tab P11 Pro comes with a stylus pen and a memory card "
           "for $92800.",
           92800),
      turn(S::kCustomer, "Negotiate-Remove-X",
           "I have no use for the stylus pen. Could I get the tablet without it, "
           "and at what price?",
           std::nullopt, {BundleOp::remove("stylus")}),
      turn(S::kAgent, "Inform",
           "Sure, without the stylus pen the tablet and memory card come to $91100.", 91100),
      turn(S::kCustomer, "Negotiate-Price-Decrease",
           "That is more than I planned to spend. Would you take $74700?", 74700),
      turn(S::kAgent, "Negotiate-Price-Increase",
           "I see the budget concern, but the best I can offer is $83300. "
           "Shall we go ahead?",
           83300),
      turn(S::kCustomer, "Accept", "That works for me, I will take it."),
      turn(S::kAgent, "Acknowledge", "Wonderful, let us proceed with the payment."),
  };
  d.outcome = {OutcomeStatus::kAccepted, 83300};
  return d;
}

}  // namespace negotiation::testing

#endif  // NEGOTIATION_TESTS_FIXTURES_H_
