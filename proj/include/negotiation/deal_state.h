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

#ifndef NEGOTIATION_DEAL_STATE_H_
#define NEGOTIATION_DEAL_STATE_H_

#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include "negotiation/catalog.h"

namespace negotiation {

struct NegotiationConfig {
  double k_seller = 0.6;
  double k_buyer = 0.4;
  double tol = 0.05;
  int d = 2;           // consecutive price-only rounds before bundle moves
  int max_turns = 20;  // price-round deadline
  std::uint64_t rng_seed = 0;

  // Throws NegotiationError(kBadConfig).
  void validate() const;
};

enum class DealStatus { kOpen, kAccepted, kRejected };

std::string_view deal_status_name(DealStatus status);

// The live negotiation. `t` counts price rounds (seller price responses),
// not utterances; bundle changes and questions leave it untouched.
struct DealState {
  Bundle bundle;
  Money seller_price = 0;   // current asking
  Money buyer_price = 0;    // last customer offer (opening target before one)
  Money seller_min = 0;     // reserve price, floor of every seller proposal
  double tol = 0.05;
  double k_seller = 0.6;
  double k_buyer = 0.4;
  int t = 0;
  int price_rounds_used = 0;  // consecutive price rounds since the last bundle change
  int d = 2;
  int max_turns = 20;
  DealStatus status = DealStatus::kOpen;

  Money previous_seller_price = 0;  // asking before the latest seller move
  Money buyer_ceiling = 0;          // customer's private budget limit
  Money opening_ask = 0;            // Ps0, shifted by bundle re-pricing
  Money opening_bid = 0;            // Pb0, shifted by bundle re-pricing
  bool buyer_has_offered = false;
  std::set<std::string> toggled;  // items already added or removed once
  std::optional<Money> final_price;

  bool is_open() const { return status == DealStatus::kOpen; }
  Money list_price() const { return bundle_price(bundle); }

  // Throws NegotiationError(kInvalidState) when a DealState invariant fails.
  void check_invariants() const;
};

// Fresh deal at list price. Throws kBadConfig on inconsistent prices.
DealState open_deal(Bundle bundle, const NegotiationConfig& config, Money opening_bid,
                    Money seller_min, Money buyer_ceiling);

// Re-prices the deal after a bundle change: the item's unit price is added to
// or subtracted from every price level so the bargaining gap is preserved.
// Resets the consecutive price-round counter but not t.
DealState apply_bundle_change(const DealState& state, const BundleOp& op);

// Bundle ops that may still be proposed (each item toggles at most once).
// Bundle moves on offer: accessories not yet touched, or every accessory once
// all have been moved.
std::vector<BundleOp> available_bundle_ops(const DealState& state);

}  // namespace negotiation

#endif  // NEGOTIATION_DEAL_STATE_H_
