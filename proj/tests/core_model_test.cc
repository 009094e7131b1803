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

#include <random>

#include "doctest.h"
#include "fixtures.h"
#include "negotiation/catalog.h"
#include "negotiation/dialogue.h"
#include "negotiation/error.h"
#include "negotiation/intent.h"

namespace negotiation {
namespace {

Product make(std::string id, Money price, ProductKind kind) {
  Product p;
  p.id = std::move(id);
  p.name = p.id;
  p.unit_price = price;
  p.kind = kind;
  return p;
}

Bundle three_items() {
  Bundle b;
  b.id = "b";
  b.items = {make("main", 100, ProductKind::kMain), make("a", 20, ProductKind::kAccessory),
             make("c", 5, ProductKind::kDelivery)};
  b.active = {"main", "a", "c"};
  return b;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const NegotiationError& e) {
    return e.code();
  }
  FAIL("expected NegotiationError");
  return ErrorCode::kIoFailure;
}

TEST_CASE("bundle_price sums active items") {
  CHECK(bundle_price(testing::tablet_bundle()) == 92800);
  Bundle only_main;
  only_main.id = "m";
  only_main.items = {make("m", 500, ProductKind::kMain)};
  only_main.active = {"m"};
  CHECK(bundle_price(only_main) == 500);
  CHECK(bundle_price(three_items()) == 125);
}

TEST_CASE("apply_bundle_op updates the active set") {
  const Bundle tablet = testing::tablet_bundle();
  const Bundle without = apply_bundle_op(tablet, BundleOp::remove("stylus"));
  CHECK(without.active == std::set<std::string>{"tablet", "memory-card"});
  CHECK(bundle_price(without) == 91100);
  CHECK(bundle_price(tablet) - bundle_price(without) == 1700);

  CHECK(code_of([&] { apply_bundle_op(tablet, BundleOp::remove("tablet")); }) ==
        ErrorCode::kMainNotRemovable);
  CHECK(code_of([&] { apply_bundle_op(tablet, BundleOp::add("nope")); }) ==
        ErrorCode::kUnknownItem);
  const Bundle added = apply_bundle_op(without, BundleOp::add("stylus"));
  CHECK(code_of([&] { apply_bundle_op(added, BundleOp::add("stylus")); }) ==
        ErrorCode::kRedundantOp);
  CHECK(code_of([&] { apply_bundle_op(without, BundleOp::remove("stylus")); }) ==
        ErrorCode::kRedundantOp);
}

TEST_CASE("bundle price moves strictly with every valid op") {
  std::mt19937_64 rng(3);
  for (const Bundle& start : builtin_catalog().bundles()) {
    Bundle b = start;
    for (int step = 0; step < 20; ++step) {
      std::vector<BundleOp> ops;
      for (const auto* p : b.removable()) ops.push_back(BundleOp::remove(p->id));
      for (const auto* p : b.addable()) ops.push_back(BundleOp::add(p->id));
      if (ops.empty()) break;
      const BundleOp op = ops[std::uniform_int_distribution<std::size_t>(0, ops.size() - 1)(rng)];
      const Money before = bundle_price(b);
      b = apply_bundle_op(b, op);
      if (op.kind == BundleOp::Kind::kAdd) {
        CHECK(bundle_price(b) > before);
      } else {
        CHECK(bundle_price(b) < before);
      }
    }
  }
}

TEST_CASE("composite intents render and parse") {
  CHECK(CompositeIntent{Intent::kGreet, Intent::kAsk}.name() == "Greet-Ask");
  CHECK(CompositeIntent::parse("Greet-Ask") == CompositeIntent{Intent::kGreet, Intent::kAsk});
  CHECK(CompositeIntent::parse("Ask_Clarification") ==
        CompositeIntent{Intent::kAskClarification});
  CHECK(CompositeIntent::parse("NegotiatePriceDecrease") ==
        CompositeIntent{Intent::kNegotiatePriceDecrease});
  CHECK(code_of([] { CompositeIntent::parse("Greet-Haggle"); }) == ErrorCode::kUnknownIntent);
  CHECK(code_of([] { CompositeIntent({Intent::kAsk, Intent::kAsk}); }) ==
        ErrorCode::kUnknownIntent);
  CHECK(code_of([] {
          CompositeIntent({Intent::kGreet, Intent::kAsk, Intent::kInform, Intent::kAccept});
        }) == ErrorCode::kUnknownIntent);

  int auxiliary = 0;
  for (Intent i : all_intents()) auxiliary += is_auxiliary(i) ? 1 : 0;
  CHECK(auxiliary == 5);
  CHECK_FALSE(is_auxiliary(Intent::kReject));
  CHECK(is_auxiliary(Intent::kProvideClarification));
}

TEST_CASE("composite parse inverts render for every composite of up to three atoms") {
  const auto& atoms = all_intents();
  std::size_t checked = 0;
  for (Intent a : atoms) {
    CompositeIntent one{a};
    CHECK(CompositeIntent::parse(one.name()) == one);
    for (Intent b : atoms) {
      if (b == a) continue;
      CompositeIntent two{a, b};
      CHECK(CompositeIntent::parse(two.name()) == two);
      for (Intent c : atoms) {
        if (c == a || c == b) continue;
        CompositeIntent three{a, b, c};
        REQUIRE(CompositeIntent::parse(three.name()) == three);
        ++checked;
      }
    }
  }
  CHECK(checked == 16 * 15 * 14);
}

TEST_CASE("validate_dialogue on the golden trace and broken variants") {
  const Dialogue golden = testing::golden_tablet_dialogue();
  CHECK(validate_dialogue(golden).empty());
  CHECK(bundle_price(final_bundle(golden)) == 91100);

  Dialogue agent_first = golden;
  agent_first.turns.erase(agent_first.turns.begin());
  auto v = validate_dialogue(agent_first);
  REQUIRE_FALSE(v.empty());
  CHECK(v.front().turn == 0);

  Dialogue no_price = golden;
  no_price.outcome.final_price.reset();
  v = validate_dialogue(no_price);
  REQUIRE(v.size() == 1);
  CHECK(v.front().turn == -1);
  CHECK(v.front().rule.find("outcome") != std::string::npos);

  Dialogue missing_offer = golden;
  missing_offer.turns[4].price_offer.reset();
  v = validate_dialogue(missing_offer);
  REQUIRE(v.size() == 1);
  CHECK(v.front().turn == 4);

  Dialogue not_closed = golden;
  not_closed.turns.pop_back();
  CHECK_FALSE(validate_dialogue(not_closed).empty());

  Dialogue double_remove = golden;
  double_remove.turns[3].intent = CompositeIntent::parse("Negotiate-Remove-X");
  double_remove.turns[3].bundle_ops = {BundleOp::remove("stylus")};
  CHECK_FALSE(validate_dialogue(double_remove).empty());
}

TEST_CASE("catalog loader rejects duplicates and dangling accessories") {
  nlohmann::json j = to_json(builtin_catalog());
  CHECK(catalog_from_json(j).products().size() == builtin_catalog().products().size());
  nlohmann::json dup = j;
  dup["products"].push_back(dup["products"][0]);
  CHECK(code_of([&] { catalog_from_json(dup); }) == ErrorCode::kInvalidBundle);
  nlohmann::json dangling = j;
  dangling["products"][0]["accessories"].push_back("ghost");
  CHECK(code_of([&] { catalog_from_json(dangling); }) == ErrorCode::kInvalidBundle);
  CHECK(code_of([] { load_catalog("/nonexistent/catalog.json"); }) == ErrorCode::kIoFailure);
  CHECK(builtin_catalog().mains().size() == 10);
  CHECK(code_of([] { builtin_catalog().bundle_for("stylus"); }) == ErrorCode::kUnknownBundle);
}

TEST_CASE("builtin catalog matches data/catalog.json") {
  const Catalog from_file = load_catalog(NEGOTIATION_SOURCE_DIR "/data/catalog.json");
  CHECK(from_file.checksum() == builtin_catalog().checksum());
}

}  // namespace
}  // namespace negotiation
