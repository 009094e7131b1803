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

#include "negotiation/deal_state.h"

#include <algorithm>
#include <cmath>

#include "negotiation/error.h"

namespace negotiation {

void NegotiationConfig::validate() const {
  auto bad = [](const std::string& why) {
    throw NegotiationError(ErrorCode::kBadConfig, why);
  };
  if (!(k_seller > 0) || !(k_buyer > 0)) bad("concession rates must be positive");
  if (!(tol >= 0.0 && tol < 1.0)) bad("tol must lie in [0, 1)");
  if (d < 1) bad("d must be at least 1");
  if (max_turns <= d) bad("max_turns must exceed d");
}

std::string_view deal_status_name(DealStatus status) {
  switch (status) {
    case DealStatus::kOpen: return "open";
    case DealStatus::kAccepted: return "accepted";
    case DealStatus::kRejected: return "rejected";
  }
  return "open";
}

void DealState::check_invariants() const {
  auto bad = [](const std::string& why) {
    throw NegotiationError(ErrorCode::kInvalidState, why);
  };
  if (seller_min > seller_price) bad("seller price fell below the reserve");
  if (!(tol >= 0.0 && tol < 1.0)) bad("tol out of range");
  if (buyer_price <= 0) bad("buyer price must be positive");
  if (status == DealStatus::kAccepted && !final_price) bad("accepted deal without price");
}

DealState open_deal(Bundle bundle, const NegotiationConfig& config, Money opening_bid,
                    Money seller_min, Money buyer_ceiling) {
  config.validate();
  bundle.validate();
  DealState s;
  s.bundle = std::move(bundle);
  s.seller_price = bundle_price(s.bundle);
  if (opening_bid <= 0 || opening_bid > s.seller_price) {
    throw NegotiationError(ErrorCode::kBadConfig, "opening bid must lie in (0, list price]");
  }
  if (seller_min < 0 || seller_min > s.seller_price) {
    throw NegotiationError(ErrorCode::kBadConfig, "seller minimum must lie in [0, list price]");
  }
  if (buyer_ceiling <= 0) {
    throw NegotiationError(ErrorCode::kBadConfig, "budget ceiling must be positive");
  }
  s.buyer_price = opening_bid;
  s.seller_min = seller_min;
  s.tol = config.tol;
  s.k_seller = config.k_seller;
  s.k_buyer = config.k_buyer;
  s.d = config.d;
  s.max_turns = config.max_turns;
  s.previous_seller_price = s.seller_price;
  s.buyer_ceiling = buyer_ceiling;
  s.opening_ask = s.seller_price;
  s.opening_bid = opening_bid;
  return s;
}

DealState apply_bundle_change(const DealState& state, const BundleOp& op) {
  if (!state.is_open()) {
    throw NegotiationError(ErrorCode::kClosedDeal, "deal is closed");
  }
  const Money delta = op_price_delta(state.bundle, op);
  DealState s = state;
  s.bundle = apply_bundle_op(state.bundle, op);
  s.seller_price = std::max<Money>(1, s.seller_price + delta);
  s.previous_seller_price = std::max<Money>(1, s.previous_seller_price + delta);
  s.seller_min = std::clamp<Money>(s.seller_min + delta, 0, s.seller_price);
  s.buyer_price = std::clamp<Money>(s.buyer_price + delta, 1, s.seller_price);
  s.buyer_ceiling = std::max<Money>(1, s.buyer_ceiling + delta);
  s.opening_ask = std::max<Money>(1, s.opening_ask + delta);
  s.opening_bid = std::clamp<Money>(s.opening_bid + delta, 1, s.opening_ask);
  s.price_rounds_used = 0;
  s.toggled.insert(op.id);
  return s;
}

std::vector<BundleOp> available_bundle_ops(const DealState& state) {
  std::vector<BundleOp> fresh;
  std::vector<BundleOp> repeat;
  for (const auto& p : state.bundle.items) {
    if (p.kind == ProductKind::kMain) continue;
    BundleOp op = state.bundle.is_active(p.id) ? BundleOp::remove(p.id) : BundleOp::add(p.id);
    (state.toggled.count(p.id) ? repeat : fresh).push_back(std::move(op));
  }
  // Items are revisited only once every accessory has been moved.
  return fresh.empty() ? repeat : fresh;
}

}  // namespace negotiation
