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

#ifndef NEGOTIATION_REWARDS_H_
#define NEGOTIATION_REWARDS_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "negotiation/dialogue.h"

namespace negotiation {

// Lowercases and splits on anything that is not a letter or digit.
std::vector<std::string> tokenize(std::string_view text);

struct LabeledText {
  std::string text;
  CompositeIntent intent{Intent::kGreet};
};

// One example per turn of every dialogue.
std::vector<LabeledText> labeled_texts(const std::vector<Dialogue>& dialogues);

struct ClassifierOptions {
  std::uint64_t seed = 10;
  double holdout = 0.2;            // fraction scored for heldout_accuracy
  std::size_t min_examples = 10;   // rarer classes are dropped
  int iterations = 100;
  double learning_rate = 0.1;      // Adam step
  double l2 = 1e-4;
  bool parallel = true;
};

// Bag-of-words linear softmax over composite intent names. Features are
// unigram and bigram counts with digit runs folded into one token. There is
// no bias term, so text without known words gets the uniform distribution.
class IntentClassifier {
 public:
  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t feature_dim() const { return vocabulary_.size(); }
  double heldout_accuracy() const { return heldout_accuracy_; }

  std::optional<std::size_t> class_index(const CompositeIntent& intent) const;
  std::vector<double> predict_proba(std::string_view text) const;

  struct Prediction {
    std::string label;
    double confidence = 0.0;
  };
  Prediction classify(std::string_view text) const;

  // Throws kUnknownClass.
  double probability(std::string_view text, const CompositeIntent& intent) const;

  nlohmann::json to_json() const;
  static IntentClassifier from_json(const nlohmann::json& j);

 private:
  friend IntentClassifier train_classifier(const std::vector<LabeledText>&,
                                           const ClassifierOptions&);
  std::vector<std::size_t> features(std::string_view text) const;

  std::map<std::string, std::size_t> vocabulary_;
  std::vector<std::string> classes_;
  std::vector<double> weights_;  // [class][feature]
  double heldout_accuracy_ = 0.0;
};

// Fits on all but the held-out fraction and reports accuracy on the rest.
// Throws kInsufficientData when fewer than two classes have min_examples.
IntentClassifier train_classifier(const std::vector<LabeledText>& corpus,
                                  const ClassifierOptions& options = {});

// ---- Reward terms ----

double r1_intent_consistency(const IntentClassifier& clf, std::string_view text,
                             const CompositeIntent& target);

// Final over initial agent price. Throws kZeroInitialPrice.
double r2_price_gap(Money initial_agent_price, Money final_price);

// e^x with x = (Pb - P_min) / P_min, zero below the reserve, negated on
// Reject. Throws kZeroMinPrice, or kInvalidDialogue for other intents.
double r3_negotiation_strategy(Money buyer_price, Money seller_min, Intent final_intent);

// 1 - mean cosine similarity of bag-of-words counts against earlier
// utterances of the same intent; 1 with no earlier utterances.
double r4_interactiveness(std::string_view current, const std::vector<std::string>& prior);

struct RewardWeights {
  std::array<double, 4> gamma{0.2, 0.2, 0.3, 0.2};
  bool renormalize = false;  // scale gamma to sum to 1 before use

  std::array<double, 4> effective() const;
  void validate() const;  // kBadConfig on negative or all-zero weights

  nlohmann::json to_json() const;
  static RewardWeights from_json(const nlohmann::json& j);
  // "0.2,0.2,0.3,0.2"
  static RewardWeights parse_csv(std::string_view csv);
};

struct RewardBreakdown {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  double r4 = 0.0;
  double total = 0.0;
};

double combined(const RewardBreakdown& b, const RewardWeights& w);

// (x - mean) / population std; all zeros when the std is zero.
std::vector<double> normalize_batch(const std::vector<double>& values);

struct DialogueScore {
  std::vector<RewardBreakdown> turns;   // one per agent turn
  std::vector<std::size_t> turn_index;  // position of that turn in the dialogue
  double total = 0.0;                   // mean of per-turn totals
};

// R1 and R4 on every agent turn; R2 and R3 once, on the last agent turn.
// R2 compares the first agent quote with the agreed price (or, for a
// rejected deal, the agent's last quote). R3 uses the agreed price, or the
// customer's last offer on rejection. Intents the classifier does not know
// score r1 = 0. Throws kInvalidDialogue.
DialogueScore score_dialogue(const Dialogue& d, const IntentClassifier& clf,
                             const RewardWeights& w, Money seller_min);

}  // namespace negotiation

#endif  // NEGOTIATION_REWARDS_H_
