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

#ifndef NEGOTIATION_CONCESSION_H_
#define NEGOTIATION_CONCESSION_H_

#include <optional>
#include <vector>

#include "negotiation/deal_state.h"

namespace negotiation {

// Seller counter-offer for round state.t:
//   Pb + (Ps - Pb) * exp(-k_seller * t), rounded half-up, floored at
// seller_min and kept inside [Pb, Ps]. Ps and Pb are the previous round's
// prices held in `state`. Throws kInvalidState on closed deals, t < 1 or
// crossed prices.
Money seller_counter(const DealState& state);

// Customer counter-offer: Ps - (Ps - Pb) * exp(-k_buyer * t), inside [Pb, Ps].
Money buyer_counter(const DealState& state);

// What a budget-bound customer actually offers: buyer_counter capped at the
// ceiling and never below the previous offer.
Money buyer_offer(const DealState& state);

enum class SellerDecision { kAcceptDeal, kCounter };
enum class BuyerDecision { kAcceptDeal, kCounter, kRejectDeal };

// AcceptDeal iff offer >= seller_price * (1 - tol).
SellerDecision seller_decision(const DealState& state, Money offer);

// AcceptDeal iff asking <= ceiling; RejectDeal iff past the deadline
// (t > max_turns) and the asking has stopped falling.
BuyerDecision buyer_decision(const DealState& state, Money asking, Money budget_ceiling);

// Default budget ceiling: 15% above the opening bid.
Money default_ceiling(Money opening_bid);

struct PriceRound {
  int t = 0;
  Money seller = 0;
  Money buyer = 0;
  friend bool operator==(const PriceRound&, const PriceRound&) = default;
};

struct PriceTrace {
  enum class Terminal { kAccepted, kRejected, kExhausted };
  std::vector<PriceRound> rounds;
  Terminal terminal = Terminal::kExhausted;
  std::optional<Money> price;  // agreed price when accepted

  friend bool operator==(const PriceTrace&, const PriceTrace&) = default;
};

// Pure price bargaining: each round the seller judges the standing offer,
// counters, the customer judges the new asking and counters in turn.
// Throws kInvalidState unless ps0 > pb0 > 0 and seller_min <= ps0.
PriceTrace price_trace(const NegotiationConfig& config, Money ps0, Money pb0,
                       Money seller_min, std::optional<Money> ceiling = std::nullopt);

}  // namespace negotiation

#endif  // NEGOTIATION_CONCESSION_H_
