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

#ifndef NEGOTIATION_SIM_H_
#define NEGOTIATION_SIM_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "negotiation/flow.h"
#include "negotiation/realization.h"
#include "negotiation/rewards.h"

namespace negotiation {

// Everything an episode needs besides the agent: bundles to draw from, the
// simulated buyer's scenario, and the scoring stack.
struct SimEnvironment {
  std::vector<Bundle> bundles;
  NegotiationConfig config;
  ScenarioConfig scenario;
  FlowPolicyTable table = FlowPolicyTable::uniform();
  std::shared_ptr<const IntentClassifier> classifier;  // required when scoring
  RewardWeights weights;
  bool score = true;  // realize text and compute rewards

  // Built-in catalog plus a classifier trained on a generated corpus.
  static SimEnvironment standard(std::uint64_t seed = 10, const NegotiationConfig& config = {});

  // Throws kBadConfig.
  void validate() const;
};

// Classifier trained on `examples` turns realized from a generated corpus.
IntentClassifier train_corpus_classifier(const Catalog& catalog, const NegotiationConfig& config,
                                         std::uint64_t seed, std::size_t examples = 5000);

struct EpisodeMetrics {
  bool accepted = false;
  std::optional<Money> final_price;
  int turns = 0;
  double buyer_utility = 0.0;   // share of the opening gap kept by the buyer
  double seller_utility = 0.0;  // share kept by the seller
  double episode_reward = 0.0;
};

struct Episode {
  Skeleton skeleton;
  std::optional<Dialogue> dialogue;  // present when the environment scores
  std::optional<DialogueScore> score;
  EpisodeMetrics metrics;
};

// Surplus split measured against the opening ask and bid (both shifted by any
// bundle change); zero utilities for a rejected deal.
EpisodeMetrics skeleton_metrics(const Skeleton& skeleton);

Episode run_episode(AgentStrategy& agent, const SimEnvironment& env, const Bundle& bundle,
                    Rng& rng);

// Draws the bundle and all randomness from `seed`.
Episode run_seeded_episode(AgentStrategy& agent, const SimEnvironment& env, std::uint64_t seed);

struct SweepCell {
  double k_buyer = 0.0;
  double k_seller = 0.0;
  std::size_t episodes = 0;
  double buyer_utility = 0.0;
  double seller_utility = 0.0;
  double accept_rate = 0.0;
  double stderr_buyer = 0.0;  // standard error of buyer_utility
  double stderr_seller = 0.0;
};

// Rule-agent self-play for each (k_buyer, k_seller). Episode i of every cell
// reuses the same seed, so cells differ only in the concession rates.
// Throws kBadConfig when n < 30.
std::vector<SweepCell> k_sweep(const std::vector<std::pair<double, double>>& grid, std::size_t n,
                               const SimEnvironment& env, std::uint64_t seed,
                               bool parallel = true);

// k_buyer,k_seller,buyer_utility,seller_utility,accept_rate,stderr
std::string sweep_csv(const std::vector<SweepCell>& cells);

struct CorpusStats {
  std::size_t dialogues = 0;
  std::size_t utterances = 0;
  double mean_turns = 0.0;
  double mean_words_customer = 0.0;
  double mean_words_agent = 0.0;
  std::size_t unique_words = 0;  // digit-only tokens excluded
  double self_bleu1 = 0.0;       // over sampled utterance pairs

  nlohmann::json to_json() const;
};

// Throws kEmptyCorpus.
CorpusStats corpus_stats(const std::vector<Dialogue>& corpus, std::uint64_t seed = 10,
                         std::size_t pairs = 1000, bool parallel = true);

}  // namespace negotiation

#endif  // NEGOTIATION_SIM_H_
