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

#include "negotiation/realization.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <sstream>

#include "httplib.h"
#include "negotiation/error.h"
#include "negotiation/log.h"

namespace negotiation {

extern const char kBuiltinTemplatesJson[];

namespace {

using I = Intent;

std::string role_name(Speaker s) { return s == Speaker::kAgent ? "seller" : "customer"; }

std::string render_template(const std::string& text, const SlotMap& slots) {
  std::string out;
  out.reserve(text.size() + 32);
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t open = text.find('{', i);
    if (open == std::string::npos) {
      out.append(text, i, std::string::npos);
      break;
    }
    const std::size_t close = text.find('}', open);
    if (close == std::string::npos) {
      out.append(text, i, std::string::npos);
      break;
    }
    out.append(text, i, open - i);
    const std::string name = text.substr(open + 1, close - open - 1);
    auto it = slots.find(name);
    if (it == slots.end()) throw NegotiationError(ErrorCode::kUnresolvedSlot, name);
    out += it->second;
    i = close + 1;
  }
  return out;
}

bool slots_available(const std::string& text, const SlotMap& slots) {
  for (const auto& name : template_slots(text)) {
    if (!slots.count(name)) return false;
  }
  return true;
}

bool mentions(const std::vector<const std::string*>& pieces, const std::string& slot) {
  const std::string needle = "{" + slot + "}";
  return std::any_of(pieces.begin(), pieces.end(),
                     [&](const std::string* p) { return p->find(needle) != std::string::npos; });
}

SlotMap complete_slots(const SkeletonTurn& turn, const DealState& state, const Bundle& bundle) {
  SlotMap slots = turn.info_slots;
  slots.try_emplace("product", bundle.main_product().name);
  Bundle after = bundle;
  for (const auto& op : turn.bundle_ops) {
    if (after.find(op.id)) after = apply_bundle_op(after, op);
  }
  slots.try_emplace("deal", describe_deal(after));
  if (turn.price_offer) slots.try_emplace("price", format_price(*turn.price_offer));
  if (!turn.bundle_ops.empty()) {
    if (const Product* p = bundle.find(turn.bundle_ops.front().id)) {
      slots.try_emplace("item", p->name);
    }
  }
  if (state.buyer_has_offered) slots.try_emplace("offer", format_price(state.buyer_price));
  return slots;
}

DealState state_from_snapshot(const Bundle& bundle, const DealSnapshot& snap) {
  DealState s;
  s.bundle = bundle;
  s.seller_price = snap.seller_price;
  s.buyer_price = snap.buyer_price;
  s.seller_min = snap.seller_min;
  s.tol = snap.tol;
  s.t = snap.t;
  s.price_rounds_used = snap.price_rounds_used;
  s.d = snap.d;
  s.max_turns = snap.max_turns;
  s.previous_seller_price = snap.seller_price;
  return s;
}

std::string key_for(Speaker speaker, const CompositeIntent& intent) {
  return std::string(speaker_name(speaker)) + ":" + intent.name();
}

std::string join_features(const Product& p) {
  std::string out;
  for (std::size_t i = 0; i < p.features.size(); ++i) {
    if (i > 0) out += i + 1 == p.features.size() ? " and " : ", ";
    out += p.features[i];
  }
  return out;
}

std::string slot_or(const SlotMap& slots, const std::string& name, const std::string& fallback) {
  auto it = slots.find(name);
  return it == slots.end() ? fallback : it->second;
}

}  // namespace

// ---- Templates ----

const TemplateLibrary& TemplateLibrary::builtin() {
  static const TemplateLibrary lib = from_json(nlohmann::json::parse(kBuiltinTemplatesJson));
  return lib;
}

TemplateLibrary TemplateLibrary::from_json(const nlohmann::json& j) {
  TemplateLibrary lib;
  try {
    for (const auto& [role, speaker] :
         {std::pair{"customer", Speaker::kCustomer}, std::pair{"agent", Speaker::kAgent}}) {
      if (!j.contains(role)) continue;
      for (const auto& [name, texts] : j.at(role).items()) {
        const CompositeIntent intent = CompositeIntent::parse(name);
        for (const auto& text : texts) lib.add(speaker, intent, text.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw NegotiationError(ErrorCode::kSchemaViolation, std::string("templates: ") + e.what());
  }
  return lib;
}

nlohmann::json TemplateLibrary::to_json() const {
  return {{"customer", customer_}, {"agent", agent_}};
}

void TemplateLibrary::add(Speaker speaker, const CompositeIntent& intent, std::string text) {
  auto& table = speaker == Speaker::kAgent ? agent_ : customer_;
  table[intent.name()].push_back(std::move(text));
}

const std::vector<std::string>* TemplateLibrary::find(Speaker speaker,
                                                      const CompositeIntent& intent) const {
  const auto& table = speaker == Speaker::kAgent ? agent_ : customer_;
  auto it = table.find(intent.name());
  return it == table.end() ? nullptr : &it->second;
}

bool TemplateLibrary::covers(Speaker speaker, const CompositeIntent& intent) const {
  if (find(speaker, intent)) return true;
  return std::all_of(intent.atoms().begin(), intent.atoms().end(),
                     [&](Intent a) { return find(speaker, CompositeIntent{a}) != nullptr; });
}

std::vector<std::string> template_slots(const std::string& text) {
  static const std::regex slot(R"(\{([a-z_]+)\})");
  std::vector<std::string> out;
  for (std::sregex_iterator it(text.begin(), text.end(), slot), end; it != end; ++it) {
    out.push_back((*it)[1].str());
  }
  return out;
}

std::string realize(const SkeletonTurn& turn, const DealState& state, const Bundle& bundle,
                    Rng& rng, const TemplateLibrary& library) {
  const SlotMap slots = complete_slots(turn, state, bundle);
  auto usable = [&](const std::vector<std::string>& texts) {
    std::vector<const std::string*> out;
    for (const auto& t : texts) {
      if (slots_available(t, slots)) out.push_back(&t);
    }
    return out;
  };

  std::vector<std::vector<const std::string*>> options;
  if (const auto* direct = library.find(turn.speaker, turn.intent)) {
    auto filtered = usable(*direct);
    if (!filtered.empty()) options.push_back(std::move(filtered));
  }
  if (options.empty()) {
    for (Intent atom : turn.intent.atoms()) {
      const auto* texts = library.find(turn.speaker, CompositeIntent{atom});
      if (!texts) {
        throw NegotiationError(ErrorCode::kMissingTemplate,
                               std::string(speaker_name(turn.speaker)) + " " +
                                   std::string(intent_name(atom)));
      }
      auto filtered = usable(*texts);
      if (filtered.empty()) {
        throw NegotiationError(ErrorCode::kUnresolvedSlot,
                               "no template for " + std::string(intent_name(atom)) +
                                   " fits the available slots");
      }
      options.push_back(std::move(filtered));
    }
  }

  const bool need_price = turn.price_offer.has_value();
  const bool need_item = !turn.bundle_ops.empty();
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<const std::string*> pieces;
    for (const auto& opts : options) {
      std::uniform_int_distribution<std::size_t> pick(0, opts.size() - 1);
      pieces.push_back(opts[pick(rng)]);
    }
    if ((need_price && !mentions(pieces, "price")) || (need_item && !mentions(pieces, "item"))) {
      continue;
    }
    std::string out;
    for (const auto* p : pieces) {
      if (!out.empty()) out += ' ';
      out += render_template(*p, slots);
    }
    return out;
  }
  throw NegotiationError(ErrorCode::kUnresolvedSlot,
                         "no template for " + turn.intent.name() + " mentions its price or item");
}

Dialogue realize_skeleton(const Skeleton& skeleton, Rng& rng, const TemplateLibrary& library) {
  Dialogue d = to_dialogue(skeleton);
  Bundle bundle = skeleton.bundle;
  for (std::size_t i = 0; i < skeleton.turns.size(); ++i) {
    const SkeletonTurn& turn = skeleton.turns[i];
    d.turns[i].text = realize(turn, state_from_snapshot(bundle, turn.before), bundle, rng, library);
    for (const auto& op : turn.bundle_ops) bundle = apply_bundle_op(bundle, op);
  }
  return d;
}

std::vector<Money> price_mentions(const std::string& text) {
  static const std::regex money(R"(\$(\d+))");
  std::vector<Money> out;
  for (std::sregex_iterator it(text.begin(), text.end(), money), end; it != end; ++it) {
    out.push_back(std::stoll((*it)[1].str()));
  }
  return out;
}

// ---- Prompts ----

void ShotBank::add(Speaker speaker, const CompositeIntent& intent, Shot shot) {
  shots_[key_for(speaker, intent)].push_back(std::move(shot));
}

const std::vector<Shot>* ShotBank::find(Speaker speaker, const CompositeIntent& intent) const {
  auto it = shots_.find(key_for(speaker, intent));
  return it == shots_.end() ? nullptr : &it->second;
}

std::size_t ShotBank::size() const {
  std::size_t n = 0;
  for (const auto& [key, shots] : shots_) n += shots.size();
  return n;
}

nlohmann::json ShotBank::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, shots] : shots_) {
    auto& arr = j[key] = nlohmann::json::array();
    for (const auto& s : shots) {
      arr.push_back({{"task_description", s.task_description},
                     {"info_summary", s.info_summary},
                     {"example_utterance", s.example_utterance}});
    }
  }
  return j;
}

ShotBank ShotBank::from_json(const nlohmann::json& j) {
  ShotBank bank;
  try {
    for (const auto& [key, shots] : j.items()) {
      for (const auto& s : shots) {
        bank.shots_[key].push_back({s.at("task_description").get<std::string>(),
                                    s.at("info_summary").get<std::string>(),
                                    s.at("example_utterance").get<std::string>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw NegotiationError(ErrorCode::kSchemaViolation, std::string("shot bank: ") + e.what());
  }
  return bank;
}

ShotBank build_shot_bank(const std::vector<Skeleton>& skeletons, std::uint64_t seed,
                         std::size_t per_intent, const TemplateLibrary& library) {
  ShotBank bank;
  Rng rng(seed);
  for (const auto& sk : skeletons) {
    Bundle bundle = sk.bundle;
    for (const auto& turn : sk.turns) {
      const auto* have = bank.find(turn.speaker, turn.intent);
      if (!have || have->size() < per_intent) {
        const DealState state = state_from_snapshot(bundle, turn.before);
        Shot shot = describe_turn(turn, state, bundle);
        shot.example_utterance = realize(turn, state, bundle, rng, library);
        bank.add(turn.speaker, turn.intent, std::move(shot));
      }
      for (const auto& op : turn.bundle_ops) bundle = apply_bundle_op(bundle, op);
    }
  }
  return bank;
}

int estimate_tokens(const std::string& text) {
  std::istringstream in(text);
  std::size_t words = 0;
  for (std::string w; in >> w;) ++words;
  return static_cast<int>(std::ceil(static_cast<double>(words) * 1.3 - 1e-9));
}

Shot describe_turn(const SkeletonTurn& turn, const DealState& state, const Bundle& bundle) {
  const SlotMap slots = complete_slots(turn, state, bundle);
  const std::string role = role_name(turn.speaker);
  const std::string other = role_name(turn.speaker == Speaker::kAgent ? Speaker::kCustomer
                                                                      : Speaker::kAgent);
  const Product& main = bundle.main_product();
  const std::string price = slot_or(slots, "price", format_price(state.seller_price));
  const std::string item = slot_or(slots, "item", "an item");
  const std::string feature = slot_or(slots, "feature", "features");
  const std::string deal = slot_or(slots, "deal", describe_deal(bundle));

  std::string task = "A " + role + " is negotiating with a " + other + " about a " + main.name +
                     ".";
  auto act = [&](const std::string& sentence) { task += " The " + role + " " + sentence; };
  for (Intent atom : turn.intent.atoms()) {
    switch (atom) {
      case I::kGreet: act("opens with a greeting."); break;
      case I::kAsk: act("asks what the offer includes."); break;
      case I::kInform: act("states the deal, the " + deal + " at " + price + "."); break;
      case I::kAskClarification: act("asks about the " + feature + " of the " + item + "."); break;
      case I::kProvideClarification:
        act("explains the " + feature + " of the " + item + ".");
        break;
      case I::kNegotiatePriceIncrease: act("counters at " + price + " and no lower."); break;
      case I::kNegotiatePriceDecrease: act("asks for a lower price of " + price + "."); break;
      case I::kNegotiatePriceNoChange: act("keeps the price at " + price + "."); break;
      case I::kNegotiateAddX: act("wants to add the " + item + " to the deal."); break;
      case I::kNegotiateRemoveX: act("wants to remove the " + item + " from the deal."); break;
      case I::kAccept: act("accepts the deal" + (turn.price_offer ? " at " + price : "") + ".");
        break;
      case I::kReject: act("turns the deal down."); break;
      case I::kAcknowledge: act("confirms the purchase and thanks the " + other + "."); break;
      case I::kAskPrice: act("asks for the current price."); break;
      case I::kTellPrice: act("gives the current price of " + price + "."); break;
      case I::kAvoidRejection:
        act("holds the final price of " + price + " and encourages the " + other +
            " to close.");
        break;
    }
  }

  std::string info = "The " + main.name + " offers " + join_features(main) + ".";
  Bundle before = bundle;
  if (!turn.bundle_ops.empty()) {
    info += " The initial deal was the " + describe_deal(before) + " priced at " +
            format_price(bundle_price(before)) + ".";
  } else {
    info += " The current deal is the " + deal + " at " + format_price(state.seller_price) + ".";
  }
  if (slots.count("offer")) info += " The customer's latest offer is " + slots.at("offer") + ".";
  if (turn.speaker == Speaker::kAgent && turn.price_offer) {
    info += " (The seller must quote exactly " + price + ".)";
  }
  return {task, info, ""};
}

std::string PromptSpec::render() const {
  const std::string cue = "The " + role_name(speaker) + " responds by saying.";
  std::string out;
  for (const auto& s : shots) {
    out += s.task_description + "\n" + s.info_summary + "\n" + cue + "\n" + kGenerationCue + " " +
           s.example_utterance + "\n\n";
  }
  out += task_description + "\n" + live_summary + "\n" + cue + "\n" + kGenerationCue;
  return out;
}

PromptSpec build_prompt(const SkeletonTurn& turn, const DealState& state, const Bundle& bundle,
                        const ShotBank& bank, int token_budget) {
  const auto* shots = bank.find(turn.speaker, turn.intent);
  if (!shots || shots->empty()) {
    throw NegotiationError(ErrorCode::kNoShotsForIntent,
                           std::string(speaker_name(turn.speaker)) + " " + turn.intent.name());
  }
  PromptSpec p;
  p.speaker = turn.speaker;
  p.intent = turn.intent;
  p.token_budget = token_budget;
  const Shot live = describe_turn(turn, state, bundle);
  p.task_description = live.task_description;
  p.live_summary = live.info_summary;
  p.shots.assign(shots->begin(), shots->begin() + std::min<std::size_t>(4, shots->size()));
  while (estimate_tokens(p.render()) > token_budget && p.shots.size() > 1) p.shots.pop_back();
  if (estimate_tokens(p.render()) > token_budget) {
    throw NegotiationError(ErrorCode::kTokenBudgetExceeded,
                           "prompt needs " + std::to_string(estimate_tokens(p.render())) +
                               " tokens, budget " + std::to_string(token_budget));
  }
  return p;
}

// ---- External generator ----

std::string trim_completion(const std::string& raw) {
  std::size_t begin = raw.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const std::string cue = kGenerationCue;
  if (raw.compare(begin, cue.size(), cue) == 0) {
    begin = raw.find_first_not_of(" \t", begin + cue.size());
    if (begin == std::string::npos) return "";
  }
  std::size_t end = raw.find('\n', begin);
  std::string out = raw.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
  while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
  return out;
}

GeneratedText generate_external(const PromptSpec& prompt, const ExternalEndpoint& endpoint,
                                const SkeletonTurn& turn, const DealState& state,
                                const Bundle& bundle, Rng& rng, const TemplateLibrary& library) {
  auto fallback = [&](const std::string& why) {
    log_message(LogLevel::kWarn, "external generator failed (" + why + "); using templates");
    return GeneratedText{realize(turn, state, bundle, rng, library), true};
  };
  static const std::regex url_re(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint.url, m, url_re)) return fallback("unsupported url");
  const std::string path = m[2].matched ? m[2].str() : "/";
  httplib::Client client(m[1].str());
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  const nlohmann::json body = {{"prompt", prompt.render()}, {"max_tokens", endpoint.max_tokens}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) return fallback(httplib::to_string(res.error()));
  if (res->status != 200) return fallback("status " + std::to_string(res->status));
  std::string text;
  try {
    text = nlohmann::json::parse(res->body).at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    return fallback(std::string("bad response: ") + e.what());
  }
  text = trim_completion(text);
  if (text.empty()) return fallback("empty completion");
  return {text, false};
}

ExternalRealization realize_skeleton_external(const Skeleton& skeleton, const ShotBank& bank,
                                              const ExternalEndpoint& endpoint, Rng& rng,
                                              const TemplateLibrary& library) {
  ExternalRealization out{to_dialogue(skeleton)};
  Bundle bundle = skeleton.bundle;
  for (std::size_t i = 0; i < skeleton.turns.size(); ++i) {
    const SkeletonTurn& turn = skeleton.turns[i];
    const DealState state = state_from_snapshot(bundle, turn.before);
    std::string text;
    if (bank.find(turn.speaker, turn.intent)) {
      const PromptSpec prompt = build_prompt(turn, state, bundle, bank);
      GeneratedText g = generate_external(prompt, endpoint, turn, state, bundle, rng, library);
      const auto quoted = price_mentions(g.text);
      const bool keeps_price =
          !turn.price_offer ||
          std::find(quoted.begin(), quoted.end(), *turn.price_offer) != quoted.end();
      if (!g.fallback && keeps_price) {
        text = std::move(g.text);
        ++out.external_turns;
      } else if (g.fallback) {
        text = std::move(g.text);
        ++out.fallback_turns;
      }
    }
    if (text.empty()) {
      text = realize(turn, state, bundle, rng, library);
      ++out.fallback_turns;
    }
    out.dialogue.turns[i].text = std::move(text);
    for (const auto& op : turn.bundle_ops) bundle = apply_bundle_op(bundle, op);
  }
  return out;
}

}  // namespace negotiation
