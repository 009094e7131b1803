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

#ifndef NEGOTIATION_POLICY_H_
#define NEGOTIATION_POLICY_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "negotiation/flow.h"
#include "negotiation/sim.h"

namespace negotiation {

inline constexpr std::size_t kPolicyFeatureDim = 17;

using Features = std::array<double, kPolicyFeatureDim>;

// Fixed-length view of the deal as the agent sees it when answering
// `customer`: bias, price gap, time, price rounds, bundle fraction, buyer
// position against the floor and the tolerance band, option flags, a one-hot
// over the customer's intent category and a greeting flag.
Features featurize(const DealSnapshot& before, const CompositeIntent& customer);

// Throws kClosedDeal.
Features featurize_state(const DealState& state, const CompositeIntent& customer);

struct PolicyParams {
  std::size_t feature_dim = kPolicyFeatureDim;
  std::vector<double> weights;  // [action][feature]
  int version = 0;

  static PolicyParams zeros();

  double logit(std::size_t action, const Features& x) const;

  // Softmax over legal actions; illegal entries are exactly 0.
  // Throws kNoLegalAction.
  std::array<double, kNumAgentActions> probabilities(const Features& x,
                                                     const ActionMask& mask) const;
  double log_prob(const Features& x, const ActionMask& mask, AgentAction action) const;

  nlohmann::json to_json() const;
  static PolicyParams from_json(const nlohmann::json& j);  // throws kBadConfig
};

struct SampledAction {
  AgentAction action = AgentAction::kInform;
  double log_prob = 0.0;
};

// Throws kNoLegalAction.
SampledAction sample_action(const PolicyParams& policy, const Features& x, const ActionMask& mask,
                            Rng& rng);

struct PolicyStep {
  Features features{};
  ActionMask mask{};
  AgentAction action = AgentAction::kInform;
  double log_prob = 0.0;  // behaviour policy
  double reward = 0.0;    // per-turn reward of the matching agent turn
};

struct Trajectory {
  std::vector<PolicyStep> steps;
  double episode_return = 0.0;
};

// Seller driven by a policy. Turns with a single legal action are forced and
// not recorded.
class PolicyAgent : public AgentStrategy {
 public:
  explicit PolicyAgent(PolicyParams params) : params_(std::move(params)) {}

  AgentMove respond(const DealState& state, const CustomerMove& customer, Rng& rng) override;

  const std::vector<PolicyStep>& steps() const { return steps_; }
  const std::vector<int>& step_turns() const { return step_turns_; }
  void clear() {
    steps_.clear();
    step_turns_.clear();
    turn_ = 0;
  }

 private:
  PolicyParams params_;
  std::vector<PolicyStep> steps_;
  std::vector<int> step_turns_;  // agent turn ordinal of each recorded step
  int turn_ = 0;
};

struct ImitationOptions {
  double holdout = 0.2;
  int iterations = 200;
  double learning_rate = 0.05;
  double l2 = 1e-4;
  std::uint64_t seed = 10;
};

struct ImitationResult {
  PolicyParams params;
  double heldout_accuracy = 0.0;
  std::size_t examples = 0;
};

// Maximum likelihood fit of the agent's recorded actions. Throws kEmptyCorpus.
ImitationResult imitation_init(const std::vector<Skeleton>& corpus,
                               const ImitationOptions& options = {});

struct PpoConfig {
  double clip = 0.2;
  double learning_rate = 0.01;
  int epochs = 17;
  std::size_t batch_episodes = 64;
  std::size_t minibatch_episodes = 8;
  std::uint64_t seed = 10;
  bool parallel = true;

  void validate() const;  // throws kBadConfig
};

// Clipped surrogate for one step.
double clipped_objective(double ratio, double advantage, double clip);

struct PpoDiagnostics {
  double mean_ratio = 1.0;
  double clip_fraction = 0.0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  std::size_t steps = 0;
};

struct PpoUpdate {
  PolicyParams params;
  PpoDiagnostics diagnostics;
};

// Mean clipped surrogate over every step and its gradient with respect to
// the weights. `advantages` holds one entry per trajectory.
double ppo_objective(const PolicyParams& policy, const std::vector<Trajectory>& batch,
                     const std::vector<double>& advantages, double clip,
                     std::vector<double>* grad = nullptr);

// One pass over the batch in episode minibatches of gradient ascent; each
// step is halved until every ratio stays inside the clip range. Throws
// kDegenerateBatch.
PpoUpdate ppo_update(const PolicyParams& policy, const std::vector<Trajectory>& batch,
                     const PpoConfig& config);

struct EpochLog {
  int epoch = 0;
  double mean_reward = 0.0;
  double clip_fraction = 0.0;
  double mean_ratio = 1.0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<EpochLog> curve;
};

// Plays `episodes` seeded episodes with the policy and returns trajectories.
std::vector<Trajectory> collect(const PolicyParams& policy, const SimEnvironment& env,
                                std::size_t episodes, std::uint64_t seed, bool parallel = true);

TrainResult train(const PolicyParams& init, const SimEnvironment& env, const PpoConfig& config);

std::string training_csv(const std::vector<EpochLog>& curve);

struct PairedComparison {
  std::size_t episodes = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double mean_diff = 0.0;  // a - b
  double t_stat = 0.0;
  double p_value = 1.0;    // one-sided, H1: a > b
  double price_ratio_a = 0.0;  // final price over first quote, mean over accepted deals
  double price_ratio_b = 0.0;
};

// Both policies play the same seeds.
PairedComparison compare_policies(const PolicyParams& a, const PolicyParams& b,
                                  const SimEnvironment& env, std::size_t episodes,
                                  std::uint64_t seed, bool parallel = true);

}  // namespace negotiation

#endif  // NEGOTIATION_POLICY_H_
