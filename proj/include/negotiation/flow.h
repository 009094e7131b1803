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

#ifndef NEGOTIATION_FLOW_H_
#define NEGOTIATION_FLOW_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "negotiation/catalog.h"
#include "negotiation/deal_state.h"
#include "negotiation/dialogue.h"
#include "negotiation/intent.h"

namespace negotiation {

using Rng = std::mt19937_64;

// What a turn's speaker saw before speaking; enough to rebuild policy features.
struct DealSnapshot {
  Money seller_price = 0;
  Money buyer_price = 0;
  Money seller_min = 0;
  Money list_price = 0;
  double tol = 0.0;
  int t = 0;
  int price_rounds_used = 0;
  int d = 2;
  int max_turns = 20;
  int active_items = 0;
  int total_items = 0;
  bool bundle_ops_available = false;

  friend bool operator==(const DealSnapshot&, const DealSnapshot&) = default;
};

DealSnapshot snapshot(const DealState& state);

using SlotMap = std::map<std::string, std::string>;

struct SkeletonTurn {
  Speaker speaker = Speaker::kCustomer;
  CompositeIntent intent{Intent::kGreet};
  std::optional<Money> price_offer;
  std::vector<BundleOp> bundle_ops;
  SlotMap info_slots;
  DealSnapshot before;
  std::optional<CompositeIntent> answering;  // customer intent an agent turn replies to
  int agent_action = -1;                      // AgentAction index on agent turns

  friend bool operator==(const SkeletonTurn&, const SkeletonTurn&) = default;
};

struct Skeleton {
  std::string id;
  Bundle bundle;  // before the first turn
  std::vector<SkeletonTurn> turns;
  Outcome outcome;
  DealState final_state;
};

// Turns a skeleton into a dialogue with empty texts; realization fills them.
Dialogue to_dialogue(const Skeleton& skeleton);

// How a scenario draws its private prices from the list price.
struct ScenarioConfig {
  double opening_bid_low = 0.75;   // Pb0 / list price
  double opening_bid_high = 0.90;
  double seller_floor_low = 0.80;  // seller_min / list price
  double seller_floor_high = 0.95;
  double ceiling_factor = 1.15;    // budget ceiling / Pb0

  void validate() const;
};

struct WeightedIntent {
  CompositeIntent intent;
  double weight = 1.0;
};

// Successor weights for sampling customer intents and breaking agent ties.
// Legality masks are applied on top; weights only rank legal moves.
struct FlowPolicyTable {
  // Keyed by the agent's last composite name; "*" is the fallback and
  // "opening" covers the customer's first turn (the Greet is implicit).
  std::map<std::string, std::vector<WeightedIntent>> customer_transitions;
  // Keyed by the customer's composite name; used when the rule agent counters.
  std::map<std::string, std::vector<WeightedIntent>> agent_transitions;
  double clarification_prob = 0.2;

  static FlowPolicyTable uniform();

  // Probability that the rule agent holds its price instead of conceding.
  double no_change_prob() const;

  // Throws kBadConfig on non-positive weights or unreachable core intents.
  void validate() const;
};

struct CustomerMove {
  CompositeIntent intent{Intent::kGreet};
  std::optional<Money> offer;
  std::vector<BundleOp> ops;
  std::string topic_item;  // item id asked about (clarifications)
  std::string topic_feature;
};

// Agent decisions shared by the rule agent and the learned policy.
enum class AgentAction {
  kInform,
  kTellPrice,
  kProvideClarification,
  kHold,
  kConcedeSmall,
  kConcedeEq1,
  kAccept,
  kReject,
  kAddItem,
  kRemoveItem,
  kAcknowledge,
  kAvoidRejection,
};
inline constexpr std::size_t kNumAgentActions = 12;

std::string_view agent_action_name(AgentAction action);
bool is_price_only_action(AgentAction action);

using ActionMask = std::array<bool, kNumAgentActions>;

// Which agent actions may answer `customer` in `state`. Price-only actions are
// masked once d consecutive price rounds have been used, unless no bundle
// change is left to propose.
ActionMask legal_agent_actions(const DealState& state, const CustomerMove& customer);

struct AgentMove {
  CompositeIntent intent{Intent::kInform};
  std::optional<Money> price;
  std::vector<BundleOp> ops;
  AgentAction action = AgentAction::kInform;
};

// Materializes an action: computes the quoted price (seller_counter for the
// full concession), picks the bundle item and prefixes greetings.
AgentMove make_agent_move(const DealState& state, const CustomerMove& customer,
                          AgentAction action, Rng& rng);

class AgentStrategy {
 public:
  virtual ~AgentStrategy() = default;
  virtual AgentMove respond(const DealState& state, const CustomerMove& customer,
                            Rng& rng) = 0;
};

// The scripted seller used for corpus generation.
class RuleAgent : public AgentStrategy {
 public:
  explicit RuleAgent(FlowPolicyTable table = FlowPolicyTable::uniform())
      : table_(std::move(table)) {}

  AgentAction decide(const DealState& state, const CustomerMove& customer, Rng& rng) const;
  AgentMove respond(const DealState& state, const CustomerMove& customer, Rng& rng) override;

 private:
  FlowPolicyTable table_;
};

// Samples the simulated customer's next intent. Throws kClosedDeal.
CompositeIntent next_customer_intent(const DealState& state,
                                     const std::vector<SkeletonTurn>& history,
                                     const FlowPolicyTable& table, Rng& rng);

// Rule agent's reply intent to a customer intent. Throws kClosedDeal or
// kUnmappedIntent.
CompositeIntent next_agent_intent(const DealState& state, const CustomerMove& customer,
                                  const FlowPolicyTable& table, Rng& rng);

// State transitions for each side's move.
DealState apply_customer_move(const DealState& state, const CustomerMove& move);
DealState apply_agent_move(const DealState& state, const CustomerMove& customer,
                           const AgentMove& move);

// A recorded turn (with its realization slots) and the state after it.
struct RecordedTurn {
  SkeletonTurn turn;
  DealState after;
};

RecordedTurn record_customer_turn(const DealState& state, const CustomerMove& move);
RecordedTurn record_agent_turn(const DealState& state, const CustomerMove& customer,
                               const AgentMove& move);

// Legality of a customer intent chosen from outside the generator, closing
// acts included: Accept needs a quoted price, Acknowledge only follows the
// agent's Accept.
bool customer_may_say(const DealState& state, const std::vector<SkeletonTurn>& history,
                      const CompositeIntent& intent);

// Draws Pb0, seller_min and the ceiling for `bundle` and opens the deal.
DealState open_scenario(const Bundle& bundle, const NegotiationConfig& config,
                        const ScenarioConfig& scenario, Rng& rng);

// Full simulated negotiation between the scripted customer and `agent`.
Skeleton run_negotiation(const DealState& opening, const NegotiationConfig& config,
                         const FlowPolicyTable& table, AgentStrategy& agent, Rng& rng);

Skeleton generate_skeleton(const Bundle& bundle, const NegotiationConfig& config, Rng& rng,
                           const ScenarioConfig& scenario = {},
                           const FlowPolicyTable& table = FlowPolicyTable::uniform());

// n independent skeletons over uniformly drawn catalog bundles. Skeleton i
// uses its own generator derived from (seed, i), so the result does not
// depend on thread count. Throws kEmptyCatalog.
std::vector<Skeleton> generate_corpus(const Catalog& catalog, std::size_t n,
                                      const NegotiationConfig& config, std::uint64_t seed,
                                      const ScenarioConfig& scenario = {});

std::string format_price(Money price);

// "Tablet with Stylus and Memory Card" style listing of the active items.
std::string describe_deal(const Bundle& bundle);

}  // namespace negotiation

#endif  // NEGOTIATION_FLOW_H_
