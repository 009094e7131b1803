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

#include "negotiation/intent.h"

#include <algorithm>
#include <cctype>

#include "negotiation/error.h"

namespace negotiation {
namespace {

constexpr std::array<std::string_view, kNumIntents> kNames = {
    "Greet",
    "Ask",
    "Inform",
    "Ask-Clarification",
    "Provide-Clarification",
    "Negotiate-Price-Increase",
    "Negotiate-Price-Decrease",
    "Negotiate-Price-NoChange",
    "Negotiate-Add-X",
    "Negotiate-Remove-X",
    "Accept",
    "Reject",
    "Acknowledge",
    "Ask-Price",
    "Tell-Price",
    "Avoid-Rejection",
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string> split_dash(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == '-') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string join(const std::vector<std::string>& parts, std::size_t from,
                 std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) out += parts[i];
  return out;
}

// Backtracking match of hyphen-separated tokens against atom names; an atom
// may be spelled with its hyphens (3 tokens) or compactly (1 token).
bool match_from(const std::vector<std::string>& tokens, std::size_t pos,
                std::vector<Intent>& out) {
  if (pos == tokens.size()) return !out.empty();
  for (std::size_t i = 0; i < kNumIntents; ++i) {
    auto atom_tokens = split_dash(lower(kNames[i]));
    std::string compact = join(atom_tokens, 0, atom_tokens.size());
    const auto intent = static_cast<Intent>(i);
    auto try_width = [&](std::size_t width, bool compact_form) {
      if (pos + width > tokens.size()) return false;
      bool ok = compact_form
                    ? tokens[pos] == compact
                    : std::equal(atom_tokens.begin(), atom_tokens.end(),
                                 tokens.begin() + static_cast<long>(pos));
      if (!ok) return false;
      out.push_back(intent);
      if (match_from(tokens, pos + width, out)) return true;
      out.pop_back();
      return false;
    };
    if (try_width(atom_tokens.size(), false)) return true;
    if (atom_tokens.size() > 1 && try_width(1, true)) return true;
  }
  return false;
}

void check_atoms(const std::vector<Intent>& atoms) {
  if (atoms.empty() || atoms.size() > CompositeIntent::kMaxAtoms) {
    throw NegotiationError(ErrorCode::kUnknownIntent,
                           "composite intent needs 1 to 3 atoms");
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    for (std::size_t j = i + 1; j < atoms.size(); ++j) {
      if (atoms[i] == atoms[j]) {
        throw NegotiationError(ErrorCode::kUnknownIntent,
                               "duplicate atom " +
                                   std::string(intent_name(atoms[i])));
      }
    }
  }
}

}  // namespace

const std::array<Intent, kNumIntents>& all_intents() {
  static const auto kAll = [] {
    std::array<Intent, kNumIntents> a{};
    for (std::size_t i = 0; i < kNumIntents; ++i) a[i] = static_cast<Intent>(i);
    return a;
  }();
  return kAll;
}

std::string_view intent_name(Intent intent) {
  return kNames[static_cast<std::size_t>(intent)];
}

std::optional<Intent> parse_intent(std::string_view text) {
  std::string norm = lower(text);
  std::replace(norm.begin(), norm.end(), '_', '-');
  std::vector<Intent> atoms;
  if (match_from(split_dash(norm), 0, atoms) && atoms.size() == 1) {
    return atoms.front();
  }
  return std::nullopt;
}

bool is_auxiliary(Intent intent) {
  switch (intent) {
    case Intent::kProvideClarification:
    case Intent::kAcknowledge:
    case Intent::kAskPrice:
    case Intent::kTellPrice:
    case Intent::kAvoidRejection:
      return true;
    default:
      return false;
  }
}

bool is_price_bearing(Intent intent) {
  switch (intent) {
    case Intent::kNegotiatePriceIncrease:
    case Intent::kNegotiatePriceDecrease:
    case Intent::kNegotiatePriceNoChange:
    case Intent::kTellPrice:
    case Intent::kAvoidRejection:
      return true;
    default:
      return false;
  }
}

CompositeIntent::CompositeIntent(std::initializer_list<Intent> atoms)
    : CompositeIntent(std::vector<Intent>(atoms)) {}

CompositeIntent::CompositeIntent(std::vector<Intent> atoms)
    : atoms_(std::move(atoms)) {
  check_atoms(atoms_);
}

bool CompositeIntent::contains(Intent intent) const {
  return std::find(atoms_.begin(), atoms_.end(), intent) != atoms_.end();
}

bool CompositeIntent::has_price_atom() const {
  return std::any_of(atoms_.begin(), atoms_.end(), is_price_bearing);
}

std::string CompositeIntent::name() const {
  std::string out;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (i) out += '-';
    out += intent_name(atoms_[i]);
  }
  return out;
}

CompositeIntent CompositeIntent::with_prefix(Intent intent) const {
  if (contains(intent) || atoms_.size() >= kMaxAtoms) return *this;
  std::vector<Intent> atoms{intent};
  atoms.insert(atoms.end(), atoms_.begin(), atoms_.end());
  return CompositeIntent(std::move(atoms));
}

CompositeIntent CompositeIntent::parse(std::string_view text) {
  std::string norm = lower(text);
  std::replace(norm.begin(), norm.end(), '_', '-');
  std::vector<Intent> atoms;
  if (norm.empty() || !match_from(split_dash(norm), 0, atoms)) {
    throw NegotiationError(ErrorCode::kUnknownIntent,
                           "cannot parse intent '" + std::string(text) + "'");
  }
  return CompositeIntent(std::move(atoms));
}

}  // namespace negotiation
