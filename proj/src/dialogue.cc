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

#include "negotiation/dialogue.h"

#include "negotiation/error.h"

namespace negotiation {

std::string_view speaker_name(Speaker speaker) {
  return speaker == Speaker::kCustomer ? "customer" : "agent";
}

namespace {

bool price_permitted(const DialogueTurn& turn) {
  const auto& ci = turn.intent;
  return ci.has_price_atom() || ci.contains(Intent::kInform) ||
         ci.contains(Intent::kAccept) || ci.contains(Intent::kReject) ||
         !turn.bundle_ops.empty();
}

bool closes_after(const std::vector<DialogueTurn>& turns, std::size_t i) {
  const auto& ci = turns[i].intent;
  if (ci.contains(Intent::kReject)) return true;
  return ci.contains(Intent::kAcknowledge) && i > 0 &&
         turns[i - 1].intent.contains(Intent::kAccept);
}

}  // namespace

std::vector<Violation> validate_prefix(const Bundle& bundle,
                                       const std::vector<DialogueTurn>& turns) {
  std::vector<Violation> out;
  auto flag = [&](std::size_t i, std::string rule) {
    out.push_back({static_cast<int>(i), std::move(rule)});
  };
  Bundle replay = bundle;
  bool closed = false;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const auto& turn = turns[i];
    if (closed) flag(i, "turn after the dialogue closed");
    if (i == 0) {
      if (turn.speaker != Speaker::kCustomer) flag(i, "customer must open");
      if (!turn.intent.contains(Intent::kGreet)) flag(i, "opening turn must greet");
    } else if (turn.speaker == turns[i - 1].speaker) {
      flag(i, "speakers must alternate");
    }
    if (turn.intent.has_price_atom() && !turn.price_offer) {
      flag(i, turn.intent.name() + " requires a price");
    }
    if (turn.price_offer) {
      if (!price_permitted(turn)) flag(i, turn.intent.name() + " cannot carry a price");
      if (*turn.price_offer <= 0) flag(i, "price must be positive");
    }
    if (turn.intent.contains(Intent::kAcknowledge) &&
        (i == 0 || !turns[i - 1].intent.contains(Intent::kAccept))) {
      flag(i, "acknowledge must follow accept");
    }
    for (const auto& op : turn.bundle_ops) {
      const Intent needed = op.kind == BundleOp::Kind::kAdd ? Intent::kNegotiateAddX
                                                            : Intent::kNegotiateRemoveX;
      if (!turn.intent.contains(needed)) {
        flag(i, "bundle op without matching " + std::string(intent_name(needed)));
      }
      try {
        replay = apply_bundle_op(replay, op);
      } catch (const NegotiationError& e) {
        flag(i, std::string("bundle op rejected: ") + e.what());
      }
    }
    closed = closed || closes_after(turns, i);
  }
  return out;
}

std::vector<Violation> validate_dialogue(const Dialogue& dialogue) {
  std::vector<Violation> out = validate_prefix(dialogue.bundle, dialogue.turns);
  if (dialogue.turns.empty()) {
    out.push_back({-1, "dialogue has no turns"});
    return out;
  }
  const std::size_t last = dialogue.turns.size() - 1;
  const auto& terminal = dialogue.turns[last].intent;
  const bool ends_acknowledged =
      terminal.contains(Intent::kAcknowledge) && closes_after(dialogue.turns, last);
  const bool ends_rejected = terminal.contains(Intent::kReject);
  if (!ends_acknowledged && !ends_rejected) {
    out.push_back({static_cast<int>(last), "terminal turn must be Acknowledge or Reject"});
  }
  const auto& outcome = dialogue.outcome;
  if (outcome.status == OutcomeStatus::kAccepted) {
    if (!outcome.final_price) out.push_back({-1, "outcome: accepted without final price"});
    if (!ends_acknowledged) out.push_back({-1, "outcome: accepted but not acknowledged"});
  } else {
    if (outcome.final_price) out.push_back({-1, "outcome: rejected with a final price"});
    if (!ends_rejected) out.push_back({-1, "outcome: rejected but no Reject turn"});
  }
  return out;
}

Bundle final_bundle(const Dialogue& dialogue) {
  Bundle b = dialogue.bundle;
  for (const auto& turn : dialogue.turns) {
    for (const auto& op : turn.bundle_ops) b = apply_bundle_op(b, op);
  }
  return b;
}

}  // namespace negotiation
