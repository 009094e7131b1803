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

#ifndef NEGOTIATION_REALIZATION_H_
#define NEGOTIATION_REALIZATION_H_

#include <chrono>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "negotiation/flow.h"

namespace negotiation {

// Surface templates keyed by speaker and composite intent name. Slots are
// written {name}; known slots are product, deal, price, item, feature, offer
// and old_price. Composites without their own entry are realized by joining
// one template per atom.
class TemplateLibrary {
 public:
  TemplateLibrary() = default;

  static const TemplateLibrary& builtin();
  static TemplateLibrary from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  void add(Speaker speaker, const CompositeIntent& intent, std::string text);
  const std::vector<std::string>* find(Speaker speaker, const CompositeIntent& intent) const;

  // True when the composite has its own entry or every atom has one.
  bool covers(Speaker speaker, const CompositeIntent& intent) const;

 private:
  std::map<std::string, std::vector<std::string>> customer_;
  std::map<std::string, std::vector<std::string>> agent_;
};

// Slot names referenced by a template, in order of appearance.
std::vector<std::string> template_slots(const std::string& text);

// Renders the turn with a template whose slots are all available and which
// mentions the turn's price and moved item. Slots missing from info_slots
// fall back to `bundle` (product, deal) and `state` (offer).
// Throws kMissingTemplate or kUnresolvedSlot.
std::string realize(const SkeletonTurn& turn, const DealState& state, const Bundle& bundle,
                    Rng& rng, const TemplateLibrary& library = TemplateLibrary::builtin());

// Realizes every turn; the bundle and state are replayed from the skeleton.
Dialogue realize_skeleton(const Skeleton& skeleton, Rng& rng,
                          const TemplateLibrary& library = TemplateLibrary::builtin());

// Dollar amounts quoted in a text ("$91100" -> 91100).
std::vector<Money> price_mentions(const std::string& text);

// ---- Few-shot prompts ----

inline constexpr const char* kGenerationCue = "<start>";

struct Shot {
  std::string task_description;
  std::string info_summary;
  std::string example_utterance;

  friend bool operator==(const Shot&, const Shot&) = default;
};

// Example shots keyed by speaker-qualified intent ("agent:Inform").
class ShotBank {
 public:
  void add(Speaker speaker, const CompositeIntent& intent, Shot shot);
  const std::vector<Shot>* find(Speaker speaker, const CompositeIntent& intent) const;
  std::size_t size() const;

  nlohmann::json to_json() const;
  static ShotBank from_json(const nlohmann::json& j);

 private:
  std::map<std::string, std::vector<Shot>> shots_;
};

// Builds up to `per_intent` shots per intent from realized skeleton turns.
ShotBank build_shot_bank(const std::vector<Skeleton>& skeletons, std::uint64_t seed,
                         std::size_t per_intent = 4,
                         const TemplateLibrary& library = TemplateLibrary::builtin());

struct PromptSpec {
  Speaker speaker = Speaker::kAgent;
  CompositeIntent intent{Intent::kInform};
  std::vector<Shot> shots;  // at most four
  std::string task_description;
  std::string live_summary;
  int token_budget = 2048;

  // Shots, then the live task and summary, ending in the generation cue.
  std::string render() const;
};

// Whitespace token count times 1.3, rounded up.
int estimate_tokens(const std::string& text);

// Task line and information summary for a turn, in the style of the shots.
Shot describe_turn(const SkeletonTurn& turn, const DealState& state, const Bundle& bundle);

// Assembles a prompt of up to four shots, dropping trailing shots until the
// rendered prompt fits the budget. Throws kNoShotsForIntent or
// kTokenBudgetExceeded (when even one shot does not fit).
PromptSpec build_prompt(const SkeletonTurn& turn, const DealState& state, const Bundle& bundle,
                        const ShotBank& bank, int token_budget = 2048);

// ---- External generator ----

struct ExternalEndpoint {
  std::string url;  // e.g. http://127.0.0.1:8080/generate
  std::chrono::milliseconds timeout{30000};
  int max_tokens = 50;
};

struct GeneratedText {
  std::string text;
  bool fallback = false;  // realized from templates
  std::string tag() const { return fallback ? "fallback" : "external"; }
};

// Completion text cut at the first newline after the cue.
std::string trim_completion(const std::string& raw);

// POSTs {"prompt", "max_tokens"} and expects {"text"}. Any transport, status
// or format failure is logged and answered with the template realization.
GeneratedText generate_external(const PromptSpec& prompt, const ExternalEndpoint& endpoint,
                                const SkeletonTurn& turn, const DealState& state,
                                const Bundle& bundle, Rng& rng,
                                const TemplateLibrary& library = TemplateLibrary::builtin());

struct ExternalRealization {
  Dialogue dialogue;
  std::size_t external_turns = 0;
  std::size_t fallback_turns = 0;
};

// Realizes every turn through the endpoint with prompts drawn from `bank`.
// Turns without shots, and completions that drop the turn's price, use
// templates instead.
ExternalRealization realize_skeleton_external(
    const Skeleton& skeleton, const ShotBank& bank, const ExternalEndpoint& endpoint, Rng& rng,
    const TemplateLibrary& library = TemplateLibrary::builtin());

}  // namespace negotiation

#endif  // NEGOTIATION_REALIZATION_H_
