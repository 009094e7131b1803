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

// acceptance: runs each headline check end to end and prints one PASS/FAIL
// line per criterion. Exits nonzero when any criterion fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <unistd.h>

#include "httplib.h"
#include "negotiation/concession.h"
#include "negotiation/corpus_io.h"
#include "negotiation/dialogue.h"
#include "negotiation/hashing.h"
#include "negotiation/log.h"
#include "negotiation/policy.h"
#include "negotiation/realization.h"
#include "negotiation/rewards.h"
#include "negotiation/service.h"
#include "negotiation/sim.h"

namespace {

using namespace negotiation;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

const IntentClassifier& classifier() {
  static const IntentClassifier clf =
      train_corpus_classifier(builtin_catalog(), NegotiationConfig{}, 10, 5000);
  return clf;
}

// ---- concession formulas ----

Verdict concession_formulas() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<Money> price(1, 500000);
  std::uniform_real_distribution<double> rate(0.05, 2.0);
  std::uniform_int_distribution<int> round(1, 25);
  long double worst = 0.0L;
  for (int i = 0; i < 1000; ++i) {
    const Money a = price(rng), b = price(rng);
    DealState s;
    s.seller_price = s.previous_seller_price = std::max(a, b);
    s.buyer_price = s.buyer_ceiling = std::min(a, b);
    s.k_seller = rate(rng);
    s.k_buyer = rate(rng);
    s.t = round(rng);
    const long double ps = s.seller_price, pb = s.buyer_price;
    const long double seller = pb + (ps - pb) * std::exp(-static_cast<long double>(s.k_seller) * s.t);
    const long double buyer = ps - (ps - pb) * std::exp(-static_cast<long double>(s.k_buyer) * s.t);
    worst = std::max(worst, std::fabs(seller_counter(s) - seller));
    worst = std::max(worst, std::fabs(buyer_counter(s) - buyer));
  }
  return {worst <= 0.5L, fmt("max |err| %.3Lf over 1000 cases", worst)};
}

// ---- golden trace ----

Verdict golden_trace() {
  const auto corpus = read_corpus(std::filesystem::path(NEGOTIATION_SOURCE_DIR) / "data" /
                                  "golden_trace.jsonl");
  if (corpus.size() != 1) return {false, "fixture missing"};
  const Dialogue& d = corpus.front();
  const auto problems = validate_dialogue(d);
  const DialogueScore s = score_dialogue(d, classifier(), RewardWeights{}, 80000);
  const double r2 = s.turns.back().r2, r3 = s.turns.back().r3;
  const bool pass = problems.empty() && std::fabs(r2 - 83300.0 / 92800.0) <= 1e-4 && r3 >= 0.0;
  return {pass, fmt("valid=%s r2=%.4f r3=%.4f", problems.empty() ? "yes" : "no", r2, r3)};
}

// ---- reward unit table ----

Verdict reward_table() {
  struct Row {
    const char* name;
    double got;
    double want;
    double tol;
  };
  RewardWeights only_r1;
  only_r1.gamma = {1, 0, 0, 0};
  const RewardBreakdown mixed{0.37, 0.9, -1.2, 0.4, 0};
  const auto z = normalize_batch({1, 3});
  const auto flat = normalize_batch({4, 4, 4});
  const std::vector<Row> rows = {
      {"r2 equal prices", r2_price_gap(500, 500), 1.0, 0.0},
      {"r2 100->90", r2_price_gap(100, 90), 0.9, 1e-15},
      {"r3 110/100 accept", r3_negotiation_strategy(110, 100, Intent::kAccept), std::exp(0.1), 1e-12},
      {"r3 90/100 accept", r3_negotiation_strategy(90, 100, Intent::kAccept), 0.0, 0.0},
      {"r3 90/100 reject", r3_negotiation_strategy(90, 100, Intent::kReject), 0.0, 0.0},
      {"r3 at reserve reject", r3_negotiation_strategy(100, 100, Intent::kReject), -1.0, 0.0},
      {"r4 identical", r4_interactiveness("the price is firm", {"the price is firm"}), 0.0, 1e-12},
      {"r4 disjoint", r4_interactiveness("alpha beta", {"gamma delta"}), 1.0, 0.0},
      {"r4 two priors", r4_interactiveness("alpha beta", {"beta alpha", "gamma"}), 0.5, 1e-12},
      {"combined units", combined({1, 1, 1, 1, 0}, RewardWeights{}), 0.9, 1e-12},
      {"combined projection", combined(mixed, only_r1), 0.37, 0.0},
      {"combined zeros", combined(RewardBreakdown{}, RewardWeights{}), 0.0, 0.0},
      {"normalize low", z[0], -1.0, 0.0},
      {"normalize high", z[1], 1.0, 0.0},
      {"normalize constant", flat[0] + flat[1] + flat[2], 0.0, 0.0},
  };
  int ok = 0;
  std::string failed;
  for (const auto& r : rows) {
    if (std::fabs(r.got - r.want) <= r.tol) {
      ++ok;
    } else {
      failed += fmt(" [%s: %.12g != %.12g]", r.name, r.got, r.want);
    }
  }
  return {ok == static_cast<int>(rows.size()),
          fmt("%d/%zu examples, combined(1,1,1,1)=%.15f", ok, rows.size(),
              combined({1, 1, 1, 1, 0}, RewardWeights{})) +
              failed};
}

// ---- k-sweep ----

Verdict k_sweep_ordering() {
  SimEnvironment env;
  env.bundles = builtin_catalog().bundles();
  env.score = false;
  const auto cells = k_sweep({{0.2, 0.8}, {0.4, 0.6}, {0.6, 0.4}, {0.8, 0.2}}, 200, env, 10);
  bool pass = true;
  std::string buyer, seller;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) {
      pass = pass && cells[i].buyer_utility < cells[i - 1].buyer_utility &&
             cells[i].seller_utility > cells[i - 1].seller_utility;
      buyer += "->";
      seller += "->";
    }
    buyer += fmt("%.3f", cells[i].buyer_utility);
    seller += fmt("%.3f", cells[i].seller_utility);
  }
  return {pass, "buyer " + buyer + ", seller " + seller + " (200 episodes/cell)"};
}

// ---- corpus targets ----

Verdict corpus_targets() {
  const auto skeletons = generate_corpus(builtin_catalog(), 500, NegotiationConfig{}, 10);
  Rng rng(11);
  std::size_t structured = 0, turns = 0;
  for (const auto& sk : skeletons) {
    const Dialogue d = realize_skeleton(sk, rng);
    turns += d.turns.size();
    const auto& last = d.turns.back().intent;
    const bool terminal = last.contains(Intent::kAcknowledge) || last.contains(Intent::kReject);
    if (validate_dialogue(d).empty() && d.turns.front().speaker == Speaker::kCustomer && terminal) {
      ++structured;
    }
  }
  const double mean = static_cast<double>(turns) / 500.0;
  const SplitCounts split = split_sizes(4163, SplitRatios{});
  const bool pass = mean >= 9.0 && mean <= 17.0 && structured == 500 && split.train == 3330 &&
                    split.test == 500 && split.valid == 333;
  return {pass, fmt("mean turns %.2f, structure %zu/500, split (%zu, %zu, %zu)", mean, structured,
                    split.train, split.test, split.valid)};
}

// ---- PPO ----

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Random trajectories with behaviour log-probs shifted so some ratios fall
// outside the clip range, away from the kinks.
std::vector<Trajectory> random_batch(const PolicyParams& p, Rng& rng, double eps) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> len(1, 5);
  std::vector<Trajectory> batch(6);
  for (auto& tr : batch) {
    tr.episode_return = u(rng);
    for (int k = len(rng); k > 0; --k) {
      PolicyStep s;
      for (auto& f : s.features) f = u(rng);
      s.features[0] = 1.0;
      while (std::count(s.mask.begin(), s.mask.end(), true) < 2) {
        for (auto& m : s.mask) m = u(rng) > 0.0;
      }
      const auto pi = p.probabilities(s.features, s.mask);
      std::discrete_distribution<std::size_t> pick(pi.begin(), pi.end());
      s.action = static_cast<AgentAction>(pick(rng));
      double shift = 0.0;
      do {
        shift = 0.6 * u(rng);
      } while (std::abs(std::exp(-shift) - (1.0 - eps)) < 1e-3 ||
               std::abs(std::exp(-shift) - (1.0 + eps)) < 1e-3);
      s.log_prob = std::log(pi[static_cast<std::size_t>(s.action)]) + shift;
      tr.steps.push_back(s);
    }
  }
  return batch;
}

Verdict ppo_correctness() {
  const double eps = 0.2;
  Rng rng(10);
  std::normal_distribution<double> w(0.0, 0.5);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    PolicyParams p = PolicyParams::zeros();
    for (auto& x : p.weights) x = w(rng);
    const auto batch = random_batch(p, rng, eps);
    std::vector<double> returns;
    for (const auto& t : batch) returns.push_back(t.episode_return);
    const auto adv = normalize_batch(returns);
    std::vector<double> grad;
    ppo_objective(p, batch, adv, eps, &grad);
    std::vector<double> fd(grad.size()), diff(grad.size());
    const double h = 1e-6;
    for (std::size_t k = 0; k < grad.size(); ++k) {
      PolicyParams up = p, down = p;
      up.weights[k] += h;
      down.weights[k] -= h;
      fd[k] = (ppo_objective(up, batch, adv, eps) - ppo_objective(down, batch, adv, eps)) / (2 * h);
      diff[k] = fd[k] - grad[k];
    }
    const double scale = std::max(norm(fd), norm(grad));
    if (scale > 0.0) worst = std::max(worst, norm(diff) / scale);
  }
  const bool scalar = clipped_objective(1.0, 1.0, 0.2) == 1.0 &&
                      clipped_objective(1.5, 1.0, 0.2) == 1.2 &&
                      clipped_objective(0.5, -1.0, 0.2) == -0.8;

  const SimEnvironment env = SimEnvironment::standard(10);
  const ImitationResult init =
      imitation_init(generate_corpus(builtin_catalog(), 1000, env.config, 10));
  PpoConfig cfg;  // seed 10, clip 0.2, 17 epochs
  const TrainResult trained = train(init.params, env, cfg);
  const PairedComparison c = compare_policies(trained.params, init.params, env, 500, 12345);
  const bool better = c.mean_diff >= 0.0 && c.p_value < 0.05;
  return {worst < 1e-4 && scalar && better,
          fmt("fd rel err %.2e, clip cases %s, trained %.4f vs init %.4f over %zu paired "
              "episodes (p=%.2g)",
              worst, scalar ? "exact" : "WRONG", c.mean_a, c.mean_b, c.episodes, c.p_value)};
}

// ---- classifier ----

Verdict classifier_quality() {
  const IntentClassifier& clf = classifier();
  std::vector<std::string> words;
  for (const auto& sk : generate_corpus(builtin_catalog(), 20, NegotiationConfig{}, 3)) {
    Rng rng(3);
    for (const auto& t : realize_skeleton(sk, rng).turns) {
      for (auto& w : tokenize(t.text)) words.push_back(std::move(w));
    }
  }
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> pick_word(0, words.size() - 1);
  std::uniform_int_distribution<int> len(0, 30), byte(1, 255), coin(0, 3);
  std::uniform_int_distribution<std::size_t> pick_class(0, clf.classes().size() - 1);
  std::size_t bad = 0;
  constexpr int kFuzz = 100000;
  for (int i = 0; i < kFuzz; ++i) {
    std::string text;
    for (int k = len(rng); k > 0; --k) {
      if (coin(rng) == 0) {
        text += static_cast<char>(byte(rng));
      } else {
        text += words[pick_word(rng)] + ' ';
      }
    }
    const auto target = CompositeIntent::parse(clf.classes()[pick_class(rng)]);
    const double r1 = r1_intent_consistency(clf, text, target);
    if (!std::isfinite(r1) || r1 < 0.0 || r1 > 1.0) ++bad;
  }
  const double acc = clf.heldout_accuracy();
  return {acc >= 0.90 && bad == 0,
          fmt("held-out accuracy %.4f, %zu/%d fuzzed r1 outside [0,1]", acc, bad, kFuzz)};
}

// ---- service ----

Verdict service_sessions() {
  const std::filesystem::path out = std::filesystem::temp_directory_path() /
                                    ("acceptance-sessions-" + std::to_string(::getpid()) + ".jsonl");
  std::filesystem::remove(out);
  ServiceOptions options;
  options.classifier = std::make_shared<const IntentClassifier>(classifier());
  options.persist_path = out;
  auto sessions = std::make_shared<SessionManager>(options);
  NegotiationServer server(sessions);
  const int port = server.bind("127.0.0.1", 0);
  std::thread serving([&] { server.run(); });

  const auto bundles = builtin_catalog().bundles();
  constexpr int kSessions = 100;
  struct Result {
    std::string id, bundle, error;
    std::vector<Money> offers;
    json dialogue;
  };
  std::vector<Result> results(kSessions);
  std::vector<std::thread> clients;
  for (int k = 0; k < kSessions; ++k) {
    clients.emplace_back([&, k] {
      Result& r = results[static_cast<std::size_t>(k)];
      try {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(30, 0);
        auto call = [&](auto res, int want) {
          if (!res || res->status != want) {
            throw std::runtime_error(res ? res->body : httplib::to_string(res.error()));
          }
          return json::parse(res->body);
        };
        r.bundle = bundles[static_cast<std::size_t>(k) % bundles.size()].id;
        const json s = call(c.Post("/sessions",
                                   json{{"bundle_id", r.bundle}, {"config", {{"d", 8}}}}.dump(),
                                   "application/json"),
                            201);
        r.id = s.at("id");
        const Money list = s.at("price");
        const std::string turns = "/sessions/" + r.id + "/turns";
        json reply = call(c.Post(turns, R"({"intent":"Greet-Ask"})", "application/json"), 200);
        for (int step = 1; step <= 6 && !reply.at("closed").get<bool>(); ++step) {
          if (reply.at("snapshot").at("status") == "accepted") {
            reply = call(c.Post(turns, R"({"intent":"Acknowledge"})", "application/json"), 200);
            break;
          }
          const Money offer = list * (70 + 3 * step + k % 5) / 100;
          r.offers.push_back(offer);
          reply = call(c.Post(turns,
                              json{{"intent", "Negotiate-Price-Decrease"}, {"price", offer}}.dump(),
                              "application/json"),
                       200);
        }
        r.dialogue = call(c.Delete("/sessions/" + r.id), 200);
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    });
  }
  for (auto& t : clients) t.join();
  server.stop();
  serving.join();

  std::size_t clean = 0;
  std::set<std::string> ids;
  for (const auto& r : results) {
    if (!r.error.empty()) continue;
    const Dialogue d = dialogue_from_json(r.dialogue);
    std::vector<Money> offers;
    for (const auto& t : d.turns) {
      if (t.speaker == Speaker::kCustomer && t.intent.contains(Intent::kNegotiatePriceDecrease)) {
        offers.push_back(*t.price_offer);
      }
    }
    if (d.id == r.id && d.bundle.id == r.bundle && offers == r.offers &&
        validate_dialogue(d).empty()) {
      ++clean;
      ids.insert(r.id);
    }
  }
  const auto saved = read_corpus(out);
  std::size_t persisted_valid = 0;
  for (const auto& d : saved) {
    if (ids.count(d.id) == 1 && validate_dialogue(d).empty()) ++persisted_valid;
  }
  std::filesystem::remove(out);
  const bool pass = clean == kSessions && saved.size() == kSessions && persisted_valid == kSessions;
  return {pass, fmt("%zu/%d sessions isolated, %zu/%zu persisted dialogues valid", clean, kSessions,
                    persisted_valid, saved.size())};
}

}  // namespace

int main() {
  set_log_level(LogLevel::kWarn);
  struct Criterion {
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"concession-formulas", 1.0, concession_formulas},
      {"golden-trace", 0.0, golden_trace},
      {"reward-unit-table", 0.0, reward_table},
      {"k-sweep-ordering", 120.0, k_sweep_ordering},
      {"corpus-targets", 0.0, corpus_targets},
      {"ppo-correctness", 300.0, ppo_correctness},
      {"classifier", 0.0, classifier_quality},
      {"service", 0.0, service_sessions},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (c.budget_s > 0.0 && secs >= c.budget_s) {
      v.pass = false;
      v.detail += fmt(" [over the %.0f s budget]", c.budget_s);
    }
    std::printf("%s %-20s %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
