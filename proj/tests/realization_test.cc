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

#include <atomic>
#include <set>
#include <thread>

#include "doctest.h"
#include "fixtures.h"
#include "httplib.h"
#include "negotiation/error.h"
#include "negotiation/log.h"
#include "negotiation/realization.h"

namespace negotiation {
namespace {

SkeletonTurn make_turn(Speaker speaker, CompositeIntent intent,
                       std::optional<Money> price = std::nullopt,
                       std::vector<BundleOp> ops = {}) {
  SkeletonTurn t;
  t.speaker = speaker;
  t.intent = std::move(intent);
  t.price_offer = price;
  t.bundle_ops = std::move(ops);
  return t;
}

DealState tablet_state() {
  return open_deal(testing::tablet_bundle(), NegotiationConfig{}, 74700, 80000, 85905);
}

// Runs an httplib server on an ephemeral port for the lifetime of the object.
class StubServer {
 public:
  explicit StubServer(httplib::Server::Handler handler) {
    server_.Post("/generate", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/generate"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST_CASE("removing the stylus mentions the item and the new price") {
  const Bundle b = testing::tablet_bundle();
  SkeletonTurn turn = make_turn(Speaker::kAgent, {Intent::kNegotiateRemoveX}, 91100,
                                {BundleOp::remove("stylus")});
  const std::string stylus = b.find("stylus")->name;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::string text = realize(turn, tablet_state(), b, rng);
    CHECK(text.find(stylus) != std::string::npos);
    CHECK(text.find("91100") != std::string::npos);
    CHECK(text.find('{') == std::string::npos);
  }
}

TEST_CASE("slotless acknowledgement is a verbatim template") {
  const auto* texts =
      TemplateLibrary::builtin().find(Speaker::kAgent, CompositeIntent{Intent::kAcknowledge});
  REQUIRE(texts != nullptr);
  Rng rng(4);
  const std::string text = realize(make_turn(Speaker::kAgent, {Intent::kAcknowledge}),
                                   tablet_state(), testing::tablet_bundle(), rng);
  CHECK(std::find(texts->begin(), texts->end(), text) != texts->end());
}

TEST_CASE("realization is deterministic per seed and varies across seeds") {
  const auto corpus = generate_corpus(builtin_catalog(), 5, NegotiationConfig{}, 8);
  for (const auto& sk : corpus) {
    Rng a(77), b(77);
    CHECK(realize_skeleton(sk, a) == realize_skeleton(sk, b));
  }
  const SkeletonTurn turn = make_turn(Speaker::kCustomer, {Intent::kNegotiatePriceDecrease}, 80000);
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    seen.insert(realize(turn, tablet_state(), testing::tablet_bundle(), rng));
  }
  CHECK(seen.size() >= 2);
}

TEST_CASE("every generated intent is covered and realizations are grounded") {
  const auto corpus = generate_corpus(builtin_catalog(), 400, NegotiationConfig{}, 21);
  const auto& lib = TemplateLibrary::builtin();
  Rng rng(5);
  std::map<std::string, std::set<std::string>> variants;
  for (const auto& sk : corpus) {
    const Dialogue d = realize_skeleton(sk, rng);
    CHECK(validate_dialogue(d).empty());
    for (std::size_t i = 0; i < d.turns.size(); ++i) {
      const SkeletonTurn& st = sk.turns[i];
      CHECK(lib.covers(st.speaker, st.intent));
      const std::string& text = d.turns[i].text;
      CHECK_FALSE(text.empty());
      variants[std::string(speaker_name(st.speaker)) + st.intent.name()].insert(text);
      if (st.price_offer) CHECK(text.find(format_price(*st.price_offer)) != std::string::npos);
      for (Money m : price_mentions(text)) {
        const std::string f = format_price(m);
        const bool grounded = st.price_offer == m ||
                              (st.info_slots.count("old_price") && st.info_slots.at("old_price") == f) ||
                              (st.info_slots.count("offer") && st.info_slots.at("offer") == f);
        CHECK(grounded);
      }
    }
  }
  for (const auto& [key, texts] : variants) {
    INFO(key);
    CHECK(texts.size() >= 2);
  }
}

TEST_CASE("builtin templates: three or more per atom, no first-person experience") {
  const auto& lib = TemplateLibrary::builtin();
  const nlohmann::json j = lib.to_json();
  for (const char* role : {"customer", "agent"}) {
    for (const auto& [name, texts] : j.at(role).items()) {
      INFO(role << " " << name);
      CHECK(texts.size() >= 3);
      for (const auto& t : texts) {
        const std::string s = t.get<std::string>();
        for (const auto& slot : template_slots(s)) {
          CHECK(std::set<std::string>{"product", "deal", "price", "item", "feature", "offer",
                                      "old_price"}
                    .count(slot) == 1);
        }
        for (const char* banned : {"I have used", "I own", "my own", "I personally", "I love"}) {
          CHECK(s.find(banned) == std::string::npos);
        }
      }
    }
  }
  CHECK(TemplateLibrary::from_json(j).to_json() == j);
}

TEST_CASE("realization errors") {
  TemplateLibrary lib;
  lib.add(Speaker::kAgent, CompositeIntent{Intent::kInform}, "The price is {price}.");
  Rng rng(0);
  const Bundle b = testing::tablet_bundle();
  CHECK_THROWS_AS(realize(make_turn(Speaker::kAgent, {Intent::kTellPrice}, 1), tablet_state(),
                          b, rng, lib),
                  NegotiationError);
  try {
    realize(make_turn(Speaker::kAgent, {Intent::kInform}), tablet_state(), b, rng, lib);
    FAIL("expected UnresolvedSlot");
  } catch (const NegotiationError& e) {
    CHECK(e.code() == ErrorCode::kUnresolvedSlot);
  }
  CHECK(template_slots("a {price} and {item}") == std::vector<std::string>{"price", "item"});
  CHECK(price_mentions("from $92800 to $91100") == std::vector<Money>{92800, 91100});
}

ShotBank small_bank() {
  const auto corpus = generate_corpus(builtin_catalog(), 200, NegotiationConfig{}, 3);
  return build_shot_bank(corpus, 9);
}

TEST_CASE("four-shot prompt for a hold ends with the generation cue") {
  const ShotBank bank = small_bank();
  const SkeletonTurn turn = make_turn(Speaker::kAgent, {Intent::kNegotiatePriceNoChange}, 92800);
  REQUIRE(bank.find(Speaker::kAgent, turn.intent) != nullptr);
  const PromptSpec p = build_prompt(turn, tablet_state(), testing::tablet_bundle(), bank);
  CHECK(p.shots.size() == 4);
  const std::string text = p.render();
  CHECK(text.size() > 7);
  CHECK(text.substr(text.size() - 7) == "<start>");
  CHECK(estimate_tokens(text) <= 2048);
  CHECK(build_prompt(turn, tablet_state(), testing::tablet_bundle(), bank).render() == text);
}

TEST_CASE("tight token budget drops trailing shots") {
  const ShotBank bank = small_bank();
  const SkeletonTurn turn = make_turn(Speaker::kAgent, {Intent::kNegotiatePriceNoChange}, 92800);
  const PromptSpec full = build_prompt(turn, tablet_state(), testing::tablet_bundle(), bank);
  PromptSpec one = full;
  one.shots.resize(1);
  const int budget = estimate_tokens(one.render()) + 1;
  const PromptSpec trimmed =
      build_prompt(turn, tablet_state(), testing::tablet_bundle(), bank, budget);
  CHECK(trimmed.shots.size() == 1);
  CHECK(trimmed.shots.front() == full.shots.front());
  CHECK_THROWS_AS(build_prompt(turn, tablet_state(), testing::tablet_bundle(), bank, 100),
                  NegotiationError);
  CHECK(estimate_tokens("one two three four five six seven eight nine ten") == 13);
}

TEST_CASE("removal prompt names the item and the old and new deals") {
  const ShotBank bank = small_bank();
  const Bundle b = testing::tablet_bundle();
  SkeletonTurn turn = make_turn(Speaker::kCustomer, {Intent::kNegotiateRemoveX}, std::nullopt,
                                {BundleOp::remove("stylus")});
  const PromptSpec p = build_prompt(turn, tablet_state(), b, bank);
  const std::string stylus = b.find("stylus")->name;
  CHECK(p.task_description.find("remove the " + stylus) != std::string::npos);
  CHECK(p.live_summary.find(describe_deal(b)) != std::string::npos);
  CHECK(p.live_summary.find("$92800") != std::string::npos);
  CHECK(p.task_description.find(describe_deal(apply_bundle_op(b, BundleOp::remove("stylus")))) ==
        std::string::npos);
  CHECK_THROWS_AS(build_prompt(turn, tablet_state(), b, ShotBank{}), NegotiationError);
  CHECK(ShotBank::from_json(bank.to_json()).to_json() == bank.to_json());
}

TEST_CASE("completion trimming") {
  CHECK(trim_completion("<start> Sure, $500 works.\nCustomer: ok") == "Sure, $500 works.");
  CHECK(trim_completion("  plain text  ") == "plain text");
  CHECK(trim_completion("\n\n") == "");
}

TEST_CASE("external generator against a stub server") {
  std::atomic<int> calls{0};
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const auto body = nlohmann::json::parse(req.body);
    CHECK(body.at("max_tokens") == 50);
    res.set_content(nlohmann::json{{"text", "<start> We can do $88000 today.\nextra"}}.dump(),
                    "application/json");
  });
  const SkeletonTurn turn = make_turn(Speaker::kAgent, {Intent::kNegotiatePriceIncrease}, 88000);
  PromptSpec p;
  p.intent = turn.intent;
  p.task_description = "task";
  p.live_summary = "summary";
  Rng rng(1);
  const auto out = generate_external(p, {server.url(), std::chrono::seconds(5)}, turn,
                                     tablet_state(), testing::tablet_bundle(), rng);
  CHECK_FALSE(out.fallback);
  CHECK(out.text == "We can do $88000 today.");
  CHECK(out.tag() == "external");
  CHECK(calls == 1);
}

TEST_CASE("echoing endpoint is trimmed at the first delimiter") {
  StubServer server([](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    res.set_content(nlohmann::json{{"text", body.at("prompt")}}.dump(), "application/json");
  });
  const SkeletonTurn turn = make_turn(Speaker::kAgent, {Intent::kTellPrice}, 92800);
  PromptSpec p;
  p.task_description = "first line";
  p.live_summary = "second line";
  Rng rng(1);
  const auto out = generate_external(p, {server.url(), std::chrono::seconds(5)}, turn,
                                     tablet_state(), testing::tablet_bundle(), rng);
  CHECK_FALSE(out.fallback);
  CHECK(out.text == "first line");
}

TEST_CASE("unreachable or broken endpoints fall back to templates") {
  set_log_level(LogLevel::kOff);
  const SkeletonTurn turn = make_turn(Speaker::kAgent, {Intent::kTellPrice}, 92800);
  PromptSpec p;
  Rng rng(1);
  // Port 9 on loopback has no listener in the test sandbox.
  const auto dead = generate_external(p, {"http://127.0.0.1:9/generate", std::chrono::seconds(1)},
                                      turn, tablet_state(), testing::tablet_bundle(), rng);
  CHECK(dead.fallback);
  CHECK(dead.tag() == "fallback");
  CHECK(dead.text.find("$92800") != std::string::npos);

  StubServer broken([](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("oops", "text/plain");
  });
  CHECK(generate_external(p, {broken.url(), std::chrono::seconds(5)}, turn, tablet_state(),
                          testing::tablet_bundle(), rng)
            .fallback);
  StubServer garbage([](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "application/json");
  });
  CHECK(generate_external(p, {garbage.url(), std::chrono::seconds(5)}, turn, tablet_state(),
                          testing::tablet_bundle(), rng)
            .fallback);
  CHECK(generate_external(p, {"https://example.invalid/x", std::chrono::seconds(1)}, turn,
                          tablet_state(), testing::tablet_bundle(), rng)
            .fallback);
  set_log_level(LogLevel::kWarn);
}

}  // namespace
}  // namespace negotiation
