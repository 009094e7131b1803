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

#ifndef NEGOTIATION_INTENT_H_
#define NEGOTIATION_INTENT_H_

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace negotiation {

// Atomic dialogue acts. Eleven form the core negotiation taxonomy; the
// remaining five are auxiliary acts seen in real transcripts
// (see is_auxiliary()).
enum class Intent {
  kGreet,
  kAsk,
  kInform,
  kAskClarification,
  kProvideClarification,
  kNegotiatePriceIncrease,
  kNegotiatePriceDecrease,
  kNegotiatePriceNoChange,
  kNegotiateAddX,
  kNegotiateRemoveX,
  kAccept,
  kReject,
  kAcknowledge,
  kAskPrice,
  kTellPrice,
  kAvoidRejection,
};

inline constexpr std::size_t kNumIntents = 16;

const std::array<Intent, kNumIntents>& all_intents();

// Canonical hyphenated name, e.g. "Negotiate-Price-Decrease".
std::string_view intent_name(Intent intent);

// Accepts the canonical name, the enumerator spelling ("NegotiatePriceDecrease")
// and underscore variants ("Ask_Clarification"). Case-insensitive.
std::optional<Intent> parse_intent(std::string_view text);

bool is_auxiliary(Intent intent);

// Acts whose utterance must quote a price.
bool is_price_bearing(Intent intent);

// An ordered combination of up to three distinct atoms ("Greet-Ask").
class CompositeIntent {
 public:
  static constexpr std::size_t kMaxAtoms = 3;

  // Throws NegotiationError(kUnknownIntent) on empty, duplicate or oversized
  // atom lists.
  CompositeIntent(std::initializer_list<Intent> atoms);
  explicit CompositeIntent(std::vector<Intent> atoms);

  const std::vector<Intent>& atoms() const { return atoms_; }
  bool contains(Intent intent) const;
  bool has_price_atom() const;
  std::string name() const;

  // New composite with `intent` prepended, unless already present or full.
  CompositeIntent with_prefix(Intent intent) const;

  // Inverse of name(). Throws NegotiationError(kUnknownIntent).
  static CompositeIntent parse(std::string_view text);

  friend bool operator==(const CompositeIntent&, const CompositeIntent&) = default;
  friend auto operator<=>(const CompositeIntent& a, const CompositeIntent& b) {
    return a.atoms_ <=> b.atoms_;
  }

 private:
  std::vector<Intent> atoms_;
};

}  // namespace negotiation

#endif  // NEGOTIATION_INTENT_H_
