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

#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "negotiation/concession.h"
#include "negotiation/error.h"

namespace negotiation {
namespace {

DealState state(Money ps, Money pb, int t, double k_s = 0.6, double k_b = 0.4,
                Money p_min = 0) {
  DealState s;
  s.seller_price = ps;
  s.previous_seller_price = ps;
  s.buyer_price = pb;
  s.t = t;
  s.k_seller = k_s;
  s.k_buyer = k_b;
  s.seller_min = p_min;
  s.buyer_ceiling = pb;
  return s;
}

// Independent scalar evaluation of the concession curves, in long double.
long double seller_curve(long double ps, long double pb, long double k, int t) {
  return pb + (ps - pb) * std::exp(-k * t);
}
long double buyer_curve(long double ps, long double pb, long double k, int t) {
  return ps - (ps - pb) * std::exp(-k * t);
}

TEST_CASE("seller_counter examples") {
  CHECK(seller_counter(state(100, 50, 1)) == 77);
  CHECK(seller_counter(state(100, 50, 1, std::numeric_limits<double>::infinity())) == 50);
  CHECK(seller_counter(state(100, 50, 1, 0.6, 0.4, 90)) == 90);
}

TEST_CASE("buyer_counter examples") {
  CHECK(buyer_counter(state(100, 50, 1)) == 66);
  CHECK(buyer_counter(state(80, 80, 3)) == 80);
  CHECK(buyer_counter(state(100, 50, 2)) == 78);
}

TEST_CASE("counters reject crossed, closed or unstarted states") {
  auto code = [](auto fn) {
    try {
      fn();
    } catch (const NegotiationError& e) {
      return e.code();
    }
    return ErrorCode::kIoFailure;
  };
  CHECK(code([] { seller_counter(state(40, 50, 1)); }) == ErrorCode::kInvalidState);
  CHECK(code([] { buyer_counter(state(100, 50, 0)); }) == ErrorCode::kInvalidState);
  DealState closed = state(100, 50, 1);
  closed.status = DealStatus::kAccepted;
  CHECK(code([&] { seller_counter(closed); }) == ErrorCode::kInvalidState);
  CHECK(code([&] { seller_decision(closed, 10); }) == ErrorCode::kInvalidState);
}

TEST_CASE("counters match the scalar curves on a randomized grid") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<Money> price(1, 500000);
  std::uniform_real_distribution<double> rate(0.05, 2.0);
  std::uniform_int_distribution<int> round(1, 25);
  for (int i = 0; i < 1000; ++i) {
    Money a = price(rng), b = price(rng);
    const Money ps = std::max(a, b), pb = std::min(a, b);
    const double ks = rate(rng), kb = rate(rng);
    const int t = round(rng);
    const DealState s = state(ps, pb, t, ks, kb);
    CHECK(std::fabs(static_cast<long double>(seller_counter(s)) -
                    seller_curve(ps, pb, ks, t)) <= 0.5L);
    CHECK(std::fabs(static_cast<long double>(buyer_counter(s)) -
                    buyer_curve(ps, pb, kb, t)) <= 0.5L);
  }
}

TEST_CASE("seller_decision tolerance threshold") {
  DealState s = state(100, 50, 1);
  s.tol = 0.05;
  CHECK(seller_decision(s, 96) == SellerDecision::kAcceptDeal);
  CHECK(seller_decision(s, 94) == SellerDecision::kCounter);
  CHECK(seller_decision(s, 95) == SellerDecision::kAcceptDeal);
  s.tol = 0.0;
  CHECK(seller_decision(s, 100) == SellerDecision::kAcceptDeal);
  CHECK(seller_decision(s, 99) == SellerDecision::kCounter);
}

TEST_CASE("buyer_decision rules") {
  DealState s = state(90000, 70000, 3);
  CHECK(buyer_decision(s, 83300, 85000) == BuyerDecision::kAcceptDeal);
  DealState late = state(90, 60, 21);
  late.max_turns = 20;
  late.previous_seller_price = 90;
  CHECK(buyer_decision(late, 90, 80) == BuyerDecision::kRejectDeal);
  late.previous_seller_price = 95;  // still falling: keep going
  CHECK(buyer_decision(late, 90, 80) == BuyerDecision::kCounter);
  CHECK(buyer_decision(state(90, 60, 3), 90, 80) == BuyerDecision::kCounter);
}

TEST_CASE("price_trace examples") {
  NegotiationConfig cfg;
  auto accepted = price_trace(cfg, 100, 50, 0, 100);
  CHECK(accepted.terminal == PriceTrace::Terminal::kAccepted);
  REQUIRE(accepted.price);

  auto immediate = price_trace(cfg, 100, 95, 0);
  CHECK(immediate.terminal == PriceTrace::Terminal::kAccepted);
  CHECK(immediate.rounds.size() == 1);
  CHECK(immediate.rounds[0].t == 1);
  CHECK(*immediate.price == 95);

  auto rejected = price_trace(cfg, 100, 50, 60, 40);
  CHECK(rejected.terminal == PriceTrace::Terminal::kRejected);
  CHECK(rejected.rounds.back().seller == 60);
  CHECK(rejected.rounds.back().t == cfg.max_turns + 1);
}

TEST_CASE("price_trace invariants hold on random inputs") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> rate(0.05, 1.5);
  std::uniform_real_distribution<double> frac(0.3, 0.98);
  for (int i = 0; i < 500; ++i) {
    NegotiationConfig cfg;
    cfg.k_seller = rate(rng);
    cfg.k_buyer = rate(rng);
    cfg.tol = frac(rng) * 0.1;
    const Money ps0 = 10000 + static_cast<Money>(frac(rng) * 90000);
    const Money pb0 = round_half_up(ps0 * frac(rng) * 0.9);
    const Money p_min = round_half_up(ps0 * frac(rng) * 0.95);
    const Money ceiling = round_half_up(pb0 * (1.0 + frac(rng) * 0.3));
    const auto trace = price_trace(cfg, ps0, pb0, p_min, ceiling);
    CHECK(trace == price_trace(cfg, ps0, pb0, p_min, ceiling));
    Money prev_s = ps0, prev_b = pb0;
    int prev_t = 0;
    for (const auto& r : trace.rounds) {
      CHECK(r.t == prev_t + 1);
      CHECK(r.seller <= prev_s);
      CHECK(r.buyer >= prev_b);
      CHECK(r.buyer <= r.seller);
      if (r.seller < ps0) CHECK(r.seller >= p_min);
      // Gap contraction while both sides still move freely.
      const Money prev_gap = prev_s - prev_b, gap = r.seller - r.buyer;
      if (r.seller > p_min && r.buyer < ceiling && prev_gap >= 20 &&
          trace.terminal != PriceTrace::Terminal::kAccepted) {
        CHECK(gap < prev_gap);
      }
      prev_s = r.seller;
      prev_b = r.buyer;
      prev_t = r.t;
    }
    if (trace.terminal == PriceTrace::Terminal::kAccepted) {
      REQUIRE(trace.price);
      CHECK(*trace.price >= pb0);
      CHECK(*trace.price <= ps0);
    }
  }
}

}  // namespace
}  // namespace negotiation
