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

#include "negotiation/flow.h"

#include <algorithm>
#include <cstdio>

#include "negotiation/concession.h"
#include "negotiation/error.h"
#include "negotiation/hashing.h"
#include "negotiation/kernels.h"

namespace negotiation {
namespace {

using I = Intent;

// Utterance cap; a dialogue that reaches it ends with a customer Reject.
int utterance_cap(const DealState& s) { return 3 * s.max_turns + 8; }

bool has_op_kind(const std::vector<BundleOp>& ops, BundleOp::Kind kind) {
  return std::any_of(ops.begin(), ops.end(), [&](const BundleOp& op) { return op.kind == kind; });
}

template <class T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
  return items[dist(rng)];
}

std::vector<BundleOp> ops_of_kind(const DealState& s, BundleOp::Kind kind) {
  std::vector<BundleOp> out;
  for (auto& op : available_bundle_ops(s)) {
    if (op.kind == kind) out.push_back(op);
  }
  return out;
}

// Coarse class of a customer move that decides which replies are legal.
enum class Ask { kAccept, kClosing, kPrice, kBundle, kAskPrice, kClarify, kInfo };

Ask classify(const CompositeIntent& intent) {
  if (intent.contains(I::kAccept)) return Ask::kAccept;
  if (intent.contains(I::kReject) || intent.contains(I::kAcknowledge)) return Ask::kClosing;
  if (intent.contains(I::kNegotiatePriceDecrease)) return Ask::kPrice;
  if (intent.contains(I::kNegotiateAddX) || intent.contains(I::kNegotiateRemoveX)) {
    return Ask::kBundle;
  }
  if (intent.contains(I::kAskPrice)) return Ask::kAskPrice;
  if (intent.contains(I::kAskClarification)) return Ask::kClarify;
  return Ask::kInfo;
}

CompositeIntent action_intent(AgentAction action) {
  switch (action) {
    case AgentAction::kInform: return {I::kInform};
    case AgentAction::kTellPrice: return {I::kTellPrice};
    case AgentAction::kProvideClarification: return {I::kProvideClarification};
    case AgentAction::kHold: return {I::kNegotiatePriceNoChange};
    case AgentAction::kConcedeSmall:
    case AgentAction::kConcedeEq1: return {I::kNegotiatePriceIncrease};
    case AgentAction::kAccept: return {I::kAccept};
    case AgentAction::kReject: return {I::kReject};
    case AgentAction::kAddItem: return {I::kNegotiateAddX};
    case AgentAction::kRemoveItem: return {I::kNegotiateRemoveX};
    case AgentAction::kAcknowledge: return {I::kAcknowledge};
    case AgentAction::kAvoidRejection: return {I::kAvoidRejection};
  }
  return {I::kInform};
}

// Agent reply to a greeting opens with Greet, and with Inform when it quotes.
CompositeIntent greet_reply(AgentAction action, const CompositeIntent& base) {
  switch (action) {
    case AgentAction::kInform:
    case AgentAction::kTellPrice:
    case AgentAction::kProvideClarification: return {I::kGreet, I::kInform};
    case AgentAction::kAccept:
    case AgentAction::kReject:
    case AgentAction::kAcknowledge: return base.with_prefix(I::kGreet);
    default: return base.with_prefix(I::kInform).with_prefix(I::kGreet);
  }
}

const Product* item_for(const Bundle& before, const Bundle& after, const std::string& id) {
  if (const Product* p = after.find(id)) return p;
  return before.find(id);
}

SlotMap make_slots(const DealState& before, const DealState& after, const SkeletonTurn& turn,
                   const CustomerMove& customer) {
  SlotMap slots;
  slots["product"] = after.bundle.main_product().name;
  slots["deal"] = describe_deal(after.bundle);
  if (turn.price_offer) slots["price"] = format_price(*turn.price_offer);
  std::string item_id = customer.topic_item;
  if (!turn.bundle_ops.empty()) {
    item_id = turn.bundle_ops.front().id;
  } else if (!customer.ops.empty()) {
    item_id = customer.ops.front().id;
  }
  if (const Product* p = item_for(before.bundle, after.bundle, item_id)) {
    slots["item"] = p->name;
  }
  if (!customer.topic_feature.empty()) slots["feature"] = customer.topic_feature;
  if (before.seller_price != after.seller_price) {
    slots["old_price"] = format_price(before.seller_price);
  }
  if (after.buyer_has_offered) slots["offer"] = format_price(after.buyer_price);
  return slots;
}

CustomerMove build_customer_move(const DealState& s, CompositeIntent intent, Rng& rng) {
  CustomerMove m;
  m.intent = std::move(intent);
  if (m.intent.contains(I::kNegotiatePriceDecrease)) {
    m.offer = (s.buyer_has_offered && s.t >= 1) ? buyer_offer(s) : s.buyer_price;
  }
  if (m.intent.contains(I::kNegotiateAddX)) {
    m.ops.push_back(pick(ops_of_kind(s, BundleOp::Kind::kAdd), rng));
  }
  if (m.intent.contains(I::kNegotiateRemoveX)) {
    m.ops.push_back(pick(ops_of_kind(s, BundleOp::Kind::kRemove), rng));
  }
  if (m.intent.contains(I::kAccept)) m.offer = s.seller_price;
  if (m.intent.contains(I::kAskClarification) || m.intent.contains(I::kAsk)) {
    const Product* topic = &s.bundle.main_product();
    if (m.intent.contains(I::kAskClarification)) {
      std::vector<const Product*> active;
      for (const auto& p : s.bundle.items) {
        if (s.bundle.is_active(p.id)) active.push_back(&p);
      }
      topic = pick(active, rng);
    }
    m.topic_item = topic->id;
    m.topic_feature = topic->features.empty() ? "details" : pick(topic->features, rng);
  }
  return m;
}

bool customer_used(const std::vector<SkeletonTurn>& history, Intent atom) {
  return std::any_of(history.begin(), history.end(), [&](const SkeletonTurn& t) {
    return t.speaker == Speaker::kCustomer && t.intent.contains(atom);
  });
}

bool customer_intent_legal(const DealState& s, const std::vector<SkeletonTurn>& history,
                           const CompositeIntent& intent) {
  const auto ops = available_bundle_ops(s);
  for (Intent atom : intent.atoms()) {
    switch (atom) {
      case I::kGreet: if (!history.empty()) return false; break;
      case I::kAsk:
      case I::kAskPrice: if (customer_used(history, atom)) return false; break;
      case I::kNegotiatePriceDecrease:
        if (s.price_rounds_used >= s.d && !ops.empty()) return false;
        break;
      case I::kNegotiateAddX: if (!has_op_kind(ops, BundleOp::Kind::kAdd)) return false; break;
      case I::kNegotiateRemoveX:
        if (!has_op_kind(ops, BundleOp::Kind::kRemove)) return false;
        break;
      case I::kAskClarification: break;
      default: return false;
    }
  }
  return true;
}

const std::vector<WeightedIntent>& lookup(
    const std::map<std::string, std::vector<WeightedIntent>>& table, const std::string& key) {
  auto it = table.find(key);
  if (it == table.end()) it = table.find("*");
  if (it == table.end()) throw NegotiationError(ErrorCode::kBadConfig, "no fallback row");
  return it->second;
}

}  // namespace

DealSnapshot snapshot(const DealState& s) {
  DealSnapshot out;
  out.seller_price = s.seller_price;
  out.buyer_price = s.buyer_price;
  out.seller_min = s.seller_min;
  out.list_price = s.list_price();
  out.tol = s.tol;
  out.t = s.t;
  out.price_rounds_used = s.price_rounds_used;
  out.d = s.d;
  out.max_turns = s.max_turns;
  out.active_items = static_cast<int>(s.bundle.active.size());
  out.total_items = static_cast<int>(s.bundle.items.size());
  out.bundle_ops_available = s.is_open() && !available_bundle_ops(s).empty();
  return out;
}

Dialogue to_dialogue(const Skeleton& skeleton) {
  Dialogue d;
  d.id = skeleton.id;
  d.bundle = skeleton.bundle;
  d.outcome = skeleton.outcome;
  for (const auto& t : skeleton.turns) {
    DialogueTurn turn;
    turn.speaker = t.speaker;
    turn.intent = t.intent;
    turn.price_offer = t.price_offer;
    turn.bundle_ops = t.bundle_ops;
    d.turns.push_back(std::move(turn));
  }
  return d;
}

void ScenarioConfig::validate() const {
  auto range_ok = [](double lo, double hi) { return lo > 0.0 && lo <= hi && hi <= 1.0; };
  if (!range_ok(opening_bid_low, opening_bid_high)) {
    throw NegotiationError(ErrorCode::kBadConfig, "opening bid range must lie in (0, 1]");
  }
  if (!range_ok(seller_floor_low, seller_floor_high)) {
    throw NegotiationError(ErrorCode::kBadConfig, "seller floor range must lie in (0, 1]");
  }
  if (!(ceiling_factor >= 1.0)) {
    throw NegotiationError(ErrorCode::kBadConfig, "ceiling factor must be >= 1");
  }
}

FlowPolicyTable FlowPolicyTable::uniform() {
  FlowPolicyTable t;
  t.customer_transitions["opening"] = {
      {{I::kAsk}, 1.0},
      {{I::kAskClarification}, 1.0},
      {{I::kNegotiatePriceDecrease}, 1.0},
      {{I::kNegotiateAddX}, 1.0},
      {{I::kNegotiateRemoveX}, 1.0},
  };
  t.customer_transitions["*"] = {
      {{I::kAsk}, 1.0},
      {{I::kAskPrice}, 1.0},
      {{I::kNegotiatePriceDecrease}, 1.0},
      {{I::kNegotiateAddX}, 1.0},
      {{I::kNegotiateRemoveX}, 1.0},
  };
  t.agent_transitions["Negotiate-Price-Decrease"] = {
      {{I::kNegotiatePriceIncrease}, 3.0},
      {{I::kNegotiatePriceNoChange}, 1.0},
  };
  return t;
}

double FlowPolicyTable::no_change_prob() const {
  auto it = agent_transitions.find("Negotiate-Price-Decrease");
  if (it == agent_transitions.end()) return 0.0;
  double hold = 0.0;
  double total = 0.0;
  for (const auto& w : it->second) {
    total += w.weight;
    if (w.intent.contains(I::kNegotiatePriceNoChange)) hold += w.weight;
  }
  return total > 0.0 ? hold / total : 0.0;
}

void FlowPolicyTable::validate() const {
  if (!customer_transitions.count("*") || !customer_transitions.count("opening")) {
    throw NegotiationError(ErrorCode::kBadConfig, "transition table needs '*' and 'opening'");
  }
  if (!(clarification_prob >= 0.0 && clarification_prob < 1.0)) {
    throw NegotiationError(ErrorCode::kBadConfig, "clarification_prob must lie in [0, 1)");
  }
  bool can_bargain = false;
  for (const auto* table : {&customer_transitions, &agent_transitions}) {
    for (const auto& [key, row] : *table) {
      for (const auto& w : row) {
        if (!(w.weight > 0.0)) {
          throw NegotiationError(ErrorCode::kBadConfig, "non-positive weight in row " + key);
        }
        if (table == &customer_transitions && w.intent.contains(I::kNegotiatePriceDecrease)) {
          can_bargain = true;
        }
      }
    }
  }
  if (!can_bargain) {
    throw NegotiationError(ErrorCode::kBadConfig, "customer can never bargain on price");
  }
}

std::string_view agent_action_name(AgentAction action) {
  switch (action) {
    case AgentAction::kInform: return "inform";
    case AgentAction::kTellPrice: return "tell_price";
    case AgentAction::kProvideClarification: return "provide_clarification";
    case AgentAction::kHold: return "hold";
    case AgentAction::kConcedeSmall: return "concede_small";
    case AgentAction::kConcedeEq1: return "concede";
    case AgentAction::kAccept: return "accept";
    case AgentAction::kReject: return "reject";
    case AgentAction::kAddItem: return "add_item";
    case AgentAction::kRemoveItem: return "remove_item";
    case AgentAction::kAcknowledge: return "acknowledge";
    case AgentAction::kAvoidRejection: return "avoid_rejection";
  }
  return "inform";
}

bool is_price_only_action(AgentAction action) {
  return action == AgentAction::kHold || action == AgentAction::kConcedeSmall ||
         action == AgentAction::kConcedeEq1 || action == AgentAction::kAvoidRejection;
}

ActionMask legal_agent_actions(const DealState& s, const CustomerMove& customer) {
  ActionMask mask{};
  auto allow = [&](AgentAction a) { mask[static_cast<std::size_t>(a)] = true; };
  const Ask kind = classify(customer.intent);
  if (kind == Ask::kAccept) {
    allow(AgentAction::kAcknowledge);
    return mask;
  }
  if (kind == Ask::kClosing || !s.is_open()) return mask;
  switch (kind) {
    case Ask::kPrice: {
      const auto ops = available_bundle_ops(s);
      allow(AgentAction::kAccept);
      allow(AgentAction::kReject);
      if (has_op_kind(ops, BundleOp::Kind::kAdd)) allow(AgentAction::kAddItem);
      if (has_op_kind(ops, BundleOp::Kind::kRemove)) allow(AgentAction::kRemoveItem);
      if (s.price_rounds_used < s.d || ops.empty()) {
        if (s.seller_price <= s.seller_min) {
          allow(AgentAction::kAvoidRejection);
        } else {
          allow(AgentAction::kHold);
          allow(AgentAction::kConcedeSmall);
          allow(AgentAction::kConcedeEq1);
        }
      }
      break;
    }
    case Ask::kBundle: allow(AgentAction::kInform); break;
    case Ask::kAskPrice: allow(AgentAction::kTellPrice); break;
    case Ask::kClarify: allow(AgentAction::kProvideClarification); break;
    default: allow(AgentAction::kInform); break;
  }
  return mask;
}

AgentMove make_agent_move(const DealState& s, const CustomerMove& customer, AgentAction action,
                          Rng& rng) {
  if (!legal_agent_actions(s, customer)[static_cast<std::size_t>(action)]) {
    throw NegotiationError(ErrorCode::kNoLegalAction,
                           std::string(agent_action_name(action)) + " is not legal here");
  }
  AgentMove m;
  m.action = action;
  CompositeIntent base = action_intent(action);
  switch (action) {
    case AgentAction::kInform:
    case AgentAction::kTellPrice:
    case AgentAction::kHold:
    case AgentAction::kAvoidRejection: m.price = s.seller_price; break;
    case AgentAction::kConcedeSmall:
    case AgentAction::kConcedeEq1: {
      DealState probe = s;
      probe.t = s.t + 1;
      const Money full = seller_counter(probe);
      Money price = full;
      if (action == AgentAction::kConcedeSmall) {
        price = std::max(full, round_half_up(s.seller_price - (s.seller_price - full) / 2.0));
      }
      m.price = price;
      if (price == s.seller_price) base = {I::kNegotiatePriceNoChange};
      break;
    }
    case AgentAction::kAccept: m.price = s.buyer_price; break;
    case AgentAction::kAddItem:
    case AgentAction::kRemoveItem: {
      const auto kind =
          action == AgentAction::kAddItem ? BundleOp::Kind::kAdd : BundleOp::Kind::kRemove;
      m.ops.push_back(pick(ops_of_kind(s, kind), rng));
      m.price = apply_bundle_change(s, m.ops.front()).seller_price;
      break;
    }
    default: break;
  }
  m.intent = customer.intent.contains(I::kGreet) ? greet_reply(action, base) : base;
  if (m.intent.contains(I::kInform) && !m.price) m.price = s.seller_price;
  return m;
}

AgentAction RuleAgent::decide(const DealState& s, const CustomerMove& customer,
                              Rng& rng) const {
  const ActionMask mask = legal_agent_actions(s, customer);
  auto legal = [&](AgentAction a) { return mask[static_cast<std::size_t>(a)]; };
  switch (classify(customer.intent)) {
    case Ask::kAccept: return AgentAction::kAcknowledge;
    case Ask::kClosing:
      throw NegotiationError(ErrorCode::kUnmappedIntent,
                             customer.intent.name() + " takes no reply");
    case Ask::kPrice: {
      if (!s.is_open()) break;
      if (seller_decision(s, s.buyer_price) == SellerDecision::kAcceptDeal) {
        return AgentAction::kAccept;
      }
      if (legal(AgentAction::kAvoidRejection)) return AgentAction::kAvoidRejection;
      if (!legal(AgentAction::kConcedeEq1)) {
        // Past the price-round budget: move the bundle instead.
        if (legal(AgentAction::kRemoveItem)) return AgentAction::kRemoveItem;
        if (legal(AgentAction::kAddItem)) return AgentAction::kAddItem;
        break;
      }
      DealState probe = s;
      probe.t = s.t + 1;
      if (seller_counter(probe) == s.seller_price) return AgentAction::kHold;
      std::bernoulli_distribution hold(table_.no_change_prob());
      return hold(rng) ? AgentAction::kHold : AgentAction::kConcedeEq1;
    }
    case Ask::kBundle:
    case Ask::kInfo: return AgentAction::kInform;
    case Ask::kAskPrice: return AgentAction::kTellPrice;
    case Ask::kClarify: return AgentAction::kProvideClarification;
  }
  throw NegotiationError(ErrorCode::kClosedDeal, "deal is closed");
}

AgentMove RuleAgent::respond(const DealState& s, const CustomerMove& customer, Rng& rng) {
  return make_agent_move(s, customer, decide(s, customer, rng), rng);
}

CompositeIntent next_customer_intent(const DealState& s,
                                     const std::vector<SkeletonTurn>& history,
                                     const FlowPolicyTable& table, Rng& rng) {
  if (!s.is_open()) throw NegotiationError(ErrorCode::kClosedDeal, "deal is closed");
  const bool opening = history.empty();
  if (!opening) {
    switch (buyer_decision(s, s.seller_price, s.buyer_ceiling)) {
      case BuyerDecision::kAcceptDeal: return {I::kAccept};
      case BuyerDecision::kRejectDeal: return {I::kReject};
      case BuyerDecision::kCounter: break;
    }
    std::bernoulli_distribution clarify(table.clarification_prob);
    if (clarify(rng)) return {I::kAskClarification};
  }
  const std::string key = opening ? "opening" : history.back().intent.name();
  std::vector<CompositeIntent> options;
  std::vector<double> weights;
  for (const auto& w : lookup(table.customer_transitions, key)) {
    if (customer_intent_legal(s, history, w.intent)) {
      options.push_back(w.intent);
      weights.push_back(w.weight);
    }
  }
  if (options.empty()) {
    // Nothing left to explore: keep bargaining.
    if (opening) return {I::kGreet, I::kNegotiatePriceDecrease};
    return {I::kNegotiatePriceDecrease};
  }
  std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
  CompositeIntent chosen = options[dist(rng)];
  return opening ? chosen.with_prefix(I::kGreet) : chosen;
}

CompositeIntent next_agent_intent(const DealState& s, const CustomerMove& customer,
                                  const FlowPolicyTable& table, Rng& rng) {
  RuleAgent agent(table);
  return agent.respond(s, customer, rng).intent;
}

DealState apply_customer_move(const DealState& state, const CustomerMove& move) {
  if (!state.is_open()) throw NegotiationError(ErrorCode::kClosedDeal, "deal is closed");
  DealState s = state;
  for (const auto& op : move.ops) s = apply_bundle_change(s, op);
  if (move.intent.contains(I::kNegotiatePriceDecrease) && move.offer) {
    if (*move.offer <= 0) {
      throw NegotiationError(ErrorCode::kInvalidState, "offer must be positive");
    }
    s.buyer_price = std::min(*move.offer, s.seller_price);
    s.buyer_has_offered = true;
  }
  if (move.intent.contains(I::kAccept)) {
    s.status = DealStatus::kAccepted;
    s.final_price = s.seller_price;
  } else if (move.intent.contains(I::kReject)) {
    s.status = DealStatus::kRejected;
  }
  return s;
}

DealState apply_agent_move(const DealState& state, const CustomerMove& customer,
                           const AgentMove& move) {
  (void)customer;
  DealState s = state;
  if (is_price_only_action(move.action)) {
    s.previous_seller_price = s.seller_price;
    s.seller_price = move.price.value_or(s.seller_price);
    s.t += 1;
    s.price_rounds_used += 1;
    return s;
  }
  switch (move.action) {
    case AgentAction::kAccept:
      s.status = DealStatus::kAccepted;
      s.final_price = move.price.value_or(s.buyer_price);
      break;
    case AgentAction::kReject: s.status = DealStatus::kRejected; break;
    case AgentAction::kAddItem:
    case AgentAction::kRemoveItem:
      for (const auto& op : move.ops) s = apply_bundle_change(s, op);
      break;
    default: break;
  }
  return s;
}

DealState open_scenario(const Bundle& bundle, const NegotiationConfig& config,
                        const ScenarioConfig& scenario, Rng& rng) {
  scenario.validate();
  const double list = static_cast<double>(bundle_price(bundle));
  std::uniform_real_distribution<double> bid(scenario.opening_bid_low, scenario.opening_bid_high);
  std::uniform_real_distribution<double> floor(scenario.seller_floor_low,
                                               scenario.seller_floor_high);
  const Money pb0 = std::max<Money>(1, round_half_up(bid(rng) * list));
  const Money pmin = round_half_up(floor(rng) * list);
  const Money ceiling = round_half_up(static_cast<double>(pb0) * scenario.ceiling_factor);
  return open_deal(bundle, config, pb0, pmin, ceiling);
}

RecordedTurn record_customer_turn(const DealState& s, const CustomerMove& cm) {
  RecordedTurn r;
  SkeletonTurn& ct = r.turn;
  ct.speaker = Speaker::kCustomer;
  ct.intent = cm.intent;
  ct.bundle_ops = cm.ops;
  ct.before = snapshot(s);
  if (cm.intent.contains(I::kNegotiatePriceDecrease) || cm.intent.contains(I::kAccept)) {
    ct.price_offer = cm.offer;
  }
  // After the agent accepts, the customer only acknowledges.
  r.after = cm.intent.contains(I::kAcknowledge) && !s.is_open() ? s : apply_customer_move(s, cm);
  ct.info_slots = make_slots(s, r.after, ct, cm);
  return r;
}

RecordedTurn record_agent_turn(const DealState& s, const CustomerMove& cm, const AgentMove& am) {
  RecordedTurn r;
  SkeletonTurn& at = r.turn;
  at.speaker = Speaker::kAgent;
  at.intent = am.intent;
  at.price_offer = am.price;
  at.bundle_ops = am.ops;
  at.before = snapshot(s);
  at.answering = cm.intent;
  at.agent_action = static_cast<int>(am.action);
  r.after = apply_agent_move(s, cm, am);
  at.info_slots = make_slots(s, r.after, at, cm);
  return r;
}

bool customer_may_say(const DealState& s, const std::vector<SkeletonTurn>& history,
                      const CompositeIntent& intent) {
  const CompositeIntent accept{I::kAccept}, reject{I::kReject}, ack{I::kAcknowledge};
  if (!s.is_open()) {
    return intent == ack && s.status == DealStatus::kAccepted && !history.empty() &&
           history.back().speaker == Speaker::kAgent && history.back().intent.contains(I::kAccept);
  }
  if (intent == reject) return !history.empty();
  if (intent == accept) {
    return std::any_of(history.begin(), history.end(), [](const SkeletonTurn& t) {
      return t.speaker == Speaker::kAgent && t.price_offer.has_value();
    });
  }
  return customer_intent_legal(s, history, intent);
}

Skeleton run_negotiation(const DealState& opening, const NegotiationConfig& config,
                         const FlowPolicyTable& table, AgentStrategy& agent, Rng& rng) {
  config.validate();
  Skeleton sk;
  sk.bundle = opening.bundle;
  DealState s = opening;
  const int cap = utterance_cap(s);
  while (true) {
    CompositeIntent intent{I::kReject};
    if (!sk.turns.empty() && sk.turns.back().intent.contains(I::kAccept)) {
      intent = {I::kAcknowledge};
    } else if (static_cast<int>(sk.turns.size()) + 2 > cap) {
      intent = {I::kReject};
    } else {
      intent = next_customer_intent(s, sk.turns, table, rng);
    }
    const CustomerMove cm = build_customer_move(s, intent, rng);
    RecordedTurn ct = record_customer_turn(s, cm);
    sk.turns.push_back(std::move(ct.turn));
    s = std::move(ct.after);
    if (cm.intent.contains(I::kReject) || cm.intent.contains(I::kAcknowledge)) break;

    const AgentMove am = agent.respond(s, cm, rng);
    RecordedTurn at = record_agent_turn(s, cm, am);
    sk.turns.push_back(std::move(at.turn));
    s = std::move(at.after);
    if (am.action == AgentAction::kReject || am.action == AgentAction::kAcknowledge) break;
  }
  sk.final_state = s;
  if (s.status == DealStatus::kAccepted) {
    sk.outcome = {OutcomeStatus::kAccepted, s.final_price};
  } else {
    sk.outcome = {OutcomeStatus::kRejected, std::nullopt};
  }
  return sk;
}

Skeleton generate_skeleton(const Bundle& bundle, const NegotiationConfig& config, Rng& rng,
                           const ScenarioConfig& scenario, const FlowPolicyTable& table) {
  table.validate();
  const DealState opening = open_scenario(bundle, config, scenario, rng);
  RuleAgent agent(table);
  Skeleton sk = run_negotiation(opening, config, table, agent, rng);
  sk.id = bundle.id;
  return sk;
}

std::vector<Skeleton> generate_corpus(const Catalog& catalog, std::size_t n,
                                      const NegotiationConfig& config, std::uint64_t seed,
                                      const ScenarioConfig& scenario) {
  const std::vector<Bundle> bundles = catalog.bundles();
  if (bundles.empty()) throw NegotiationError(ErrorCode::kEmptyCatalog, "no bundles");
  config.validate();
  scenario.validate();
  const FlowPolicyTable table = FlowPolicyTable::uniform();
  return kernels::map_indexed_parallel(n, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    std::uniform_int_distribution<std::size_t> which(0, bundles.size() - 1);
    const Bundle& bundle = bundles[which(rng)];
    Skeleton sk = generate_skeleton(bundle, config, rng, scenario, table);
    char id[32];
    std::snprintf(id, sizeof id, "dlg-%06zu", i);
    sk.id = id;
    return sk;
  });
}

std::string format_price(Money price) { return "$" + std::to_string(price); }

std::string describe_deal(const Bundle& bundle) {
  std::string main = bundle.main_product().name;
  std::vector<std::string> extras;
  for (const auto& p : bundle.items) {
    if (p.kind != ProductKind::kMain && bundle.is_active(p.id)) extras.push_back(p.name);
  }
  if (extras.empty()) return main;
  std::string out = main + " with ";
  for (std::size_t i = 0; i < extras.size(); ++i) {
    if (i > 0) out += i + 1 == extras.size() ? " and " : ", ";
    out += extras[i];
  }
  return out;
}


}  // namespace negotiation
