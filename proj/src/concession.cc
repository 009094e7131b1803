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

#include "negotiation/concession.h"

#include <algorithm>
#include <cmath>

#include "negotiation/error.h"

namespace negotiation {
namespace {

void require_bargainable(const DealState& state) {
  if (!state.is_open()) {
    throw NegotiationError(ErrorCode::kInvalidState, "deal is closed");
  }
  if (state.t < 1) {
    throw NegotiationError(ErrorCode::kInvalidState, "price round index must be >= 1");
  }
  if (state.seller_price < state.buyer_price) {
    throw NegotiationError(ErrorCode::kInvalidState, "crossed prices");
  }
}

void require_open(const DealState& state) {
  if (!state.is_open()) {
    throw NegotiationError(ErrorCode::kInvalidState, "deal is closed");
  }
}

}  // namespace

Money seller_counter(const DealState& state) {
  require_bargainable(state);
  const double ps = static_cast<double>(state.seller_price);
  const double pb = static_cast<double>(state.buyer_price);
  const double raw = pb + (ps - pb) * std::exp(-state.k_seller * state.t);
  const Money lo = std::min(std::max(state.buyer_price, state.seller_min), state.seller_price);
  return std::clamp(round_half_up(raw), lo, state.seller_price);
}

Money buyer_counter(const DealState& state) {
  require_bargainable(state);
  const double ps = static_cast<double>(state.seller_price);
  const double pb = static_cast<double>(state.buyer_price);
  const double raw = ps - (ps - pb) * std::exp(-state.k_buyer * state.t);
  return std::clamp(round_half_up(raw), state.buyer_price, state.seller_price);
}

Money buyer_offer(const DealState& state) {
  const Money counter = buyer_counter(state);
  return std::max(state.buyer_price, std::min(counter, state.buyer_ceiling));
}

SellerDecision seller_decision(const DealState& state, Money offer) {
  require_open(state);
  const double threshold = static_cast<double>(state.seller_price) * (1.0 - state.tol);
  // The epsilon absorbs representation error in (1 - tol), e.g. 100 * 0.95.
  return static_cast<double>(offer) + 1e-9 >= threshold ? SellerDecision::kAcceptDeal
                                                        : SellerDecision::kCounter;
}

BuyerDecision buyer_decision(const DealState& state, Money asking, Money budget_ceiling) {
  require_open(state);
  if (asking <= budget_ceiling) return BuyerDecision::kAcceptDeal;
  if (state.t > state.max_turns && asking >= state.previous_seller_price) {
    return BuyerDecision::kRejectDeal;
  }
  return BuyerDecision::kCounter;
}

Money default_ceiling(Money opening_bid) {
  return round_half_up(static_cast<double>(opening_bid) * 1.15);
}

PriceTrace price_trace(const NegotiationConfig& config, Money ps0, Money pb0,
                       Money seller_min, std::optional<Money> ceiling) {
  config.validate();
  if (!(ps0 > pb0 && pb0 > 0) || seller_min > ps0) {
    throw NegotiationError(ErrorCode::kInvalidState,
                           "price_trace needs ps0 > pb0 > 0 and seller_min <= ps0");
  }
  DealState s;
  s.seller_price = ps0;
  s.previous_seller_price = ps0;
  s.buyer_price = pb0;
  s.seller_min = seller_min;
  s.tol = config.tol;
  s.k_seller = config.k_seller;
  s.k_buyer = config.k_buyer;
  s.d = config.d;
  s.max_turns = config.max_turns;
  s.buyer_ceiling = ceiling.value_or(default_ceiling(pb0));

  PriceTrace trace;
  for (int t = 1; t <= config.max_turns + 1; ++t) {
    s.t = t;
    if (seller_decision(s, s.buyer_price) == SellerDecision::kAcceptDeal) {
      trace.rounds.push_back({t, s.seller_price, s.buyer_price});
      trace.terminal = PriceTrace::Terminal::kAccepted;
      trace.price = s.buyer_price;
      return trace;
    }
    const Money asking = seller_counter(s);
    s.previous_seller_price = s.seller_price;
    s.seller_price = asking;
    switch (buyer_decision(s, asking, s.buyer_ceiling)) {
      case BuyerDecision::kAcceptDeal:
        trace.rounds.push_back({t, s.seller_price, s.buyer_price});
        trace.terminal = PriceTrace::Terminal::kAccepted;
        trace.price = asking;
        return trace;
      case BuyerDecision::kRejectDeal:
        trace.rounds.push_back({t, s.seller_price, s.buyer_price});
        trace.terminal = PriceTrace::Terminal::kRejected;
        return trace;
      case BuyerDecision::kCounter:
        break;
    }
    s.buyer_price = buyer_offer(s);
    trace.rounds.push_back({t, s.seller_price, s.buyer_price});
  }
  trace.terminal = PriceTrace::Terminal::kExhausted;
  return trace;
}

}  // namespace negotiation
