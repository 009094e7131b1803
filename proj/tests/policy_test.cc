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
#include <numeric>

#include "doctest.h"
#include "fixtures.h"
#include "negotiation/error.h"
#include "negotiation/hashing.h"
#include "negotiation/policy.h"

namespace negotiation {
namespace {

constexpr std::size_t kW = kNumAgentActions * kPolicyFeatureDim;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const NegotiationError& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kBadConfig;
}

DealState tablet_state() {
  return open_deal(testing::tablet_bundle(), NegotiationConfig{}, 74700, 80000, 85000);
}

CustomerMove price_move(Money offer) {
  CustomerMove m;
  m.intent = {Intent::kNegotiatePriceDecrease};
  m.offer = offer;
  return m;
}

PolicyParams random_params(Rng& rng, double scale = 0.5) {
  std::normal_distribution<double> n(0.0, scale);
  PolicyParams p = PolicyParams::zeros();
  for (auto& w : p.weights) w = n(rng);
  return p;
}

// Random trajectories whose behaviour log-probs put some ratios inside the
// clip range and some outside, away from the kinks.
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

std::vector<double> advantages_of(const std::vector<Trajectory>& batch) {
  std::vector<double> r;
  for (const auto& t : batch) r.push_back(t.episode_return);
  return normalize_batch(r);
}

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

double update_norm(const PolicyParams& a, const PolicyParams& b) {
  std::vector<double> d(a.weights.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = a.weights[k] - b.weights[k];
  return norm(d);
}

const std::vector<Skeleton>& corpus_1000() {
  static const auto corpus = generate_corpus(builtin_catalog(), 1000, NegotiationConfig{}, 10);
  return corpus;
}

const ImitationResult& imitation() {
  static const auto result = imitation_init(corpus_1000());
  return result;
}

TEST_CASE("feature definitions") {
  DealSnapshot s;
  s.seller_price = 100;
  s.buyer_price = 50;
  s.seller_min = 80;
  s.t = 0;
  s.active_items = 3;
  s.total_items = 3;
  const Features x = featurize(s, {Intent::kNegotiatePriceDecrease});
  CHECK(x[0] == 1.0);
  CHECK(x[1] == doctest::Approx(0.5));
  CHECK(x[2] == 0.0);
  CHECK(x[4] == 1.0);
  CHECK(x[11] == 1.0);
  CHECK(x[16] == 0.0);
  CHECK(std::accumulate(x.begin() + 9, x.begin() + 16, 0.0) == 1.0);
}

TEST_CASE("closed deals cannot be featurized") {
  DealState s = tablet_state();
  s.status = DealStatus::kAccepted;
  CHECK(code_of([&] { featurize_state(s, {Intent::kAccept}); }) == ErrorCode::kClosedDeal);
}

TEST_CASE("price-only actions are masked after d price rounds") {
  DealState s = tablet_state();
  s.price_rounds_used = s.d;
  const ActionMask mask = legal_agent_actions(s, price_move(76000));
  Rng rng(3);
  const auto pi = random_params(rng).probabilities(featurize_state(s, {Intent::kNegotiatePriceDecrease}), mask);
  for (std::size_t a = 0; a < kNumAgentActions; ++a) {
    if (is_price_only_action(static_cast<AgentAction>(a))) CHECK(pi[a] == 0.0);
  }
  CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("uniform weights sample legal actions uniformly") {
  const DealState s = tablet_state();
  const ActionMask mask = legal_agent_actions(s, price_move(76000));
  const auto x = featurize_state(s, {Intent::kNegotiatePriceDecrease});
  const std::size_t legal = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  REQUIRE(legal >= 3);
  const PolicyParams p = PolicyParams::zeros();
  Rng rng(10);
  const int n = 10000;
  std::array<int, kNumAgentActions> counts{};
  for (int i = 0; i < n; ++i) {
    const auto s = sample_action(p, x, mask, rng);
    CHECK(s.log_prob == doctest::Approx(-std::log(static_cast<double>(legal))));
    ++counts[static_cast<std::size_t>(s.action)];
  }
  const double q = 1.0 / static_cast<double>(legal);
  const double sigma = std::sqrt(n * q * (1 - q));
  for (std::size_t a = 0; a < kNumAgentActions; ++a) {
    if (!mask[a]) {
      CHECK(counts[a] == 0);
    } else {
      CHECK(std::abs(counts[a] - n * q) < 3 * sigma);
    }
  }
}

TEST_CASE("single legal action has log-prob zero") {
  ActionMask mask{};
  mask[static_cast<std::size_t>(AgentAction::kAcknowledge)] = true;
  Rng rng(1);
  const auto s = sample_action(random_params(rng), Features{}, mask, rng);
  CHECK(s.action == AgentAction::kAcknowledge);
  CHECK(s.log_prob == 0.0);
}

TEST_CASE("empty mask has no legal action") {
  Rng rng(1);
  CHECK(code_of([&] { sample_action(PolicyParams::zeros(), Features{}, ActionMask{}, rng); }) ==
        ErrorCode::kNoLegalAction);
}

TEST_CASE("clipped surrogate scalar cases") {
  CHECK(clipped_objective(1.0, 1.0, 0.2) == 1.0);
  CHECK(clipped_objective(1.5, 1.0, 0.2) == 1.2);
  CHECK(clipped_objective(0.5, -1.0, 0.2) == -0.8);
}

TEST_CASE("analytic gradient matches finite differences") {
  Rng rng(10);
  const double eps = 0.2;
  for (int trial = 0; trial < 50; ++trial) {
    PolicyParams p = random_params(rng);
    const auto batch = random_batch(p, rng, eps);
    const auto adv = advantages_of(batch);
    std::vector<double> grad;
    ppo_objective(p, batch, adv, eps, &grad);
    std::vector<double> fd(kW), diff(kW);
    const double h = 1e-6;
    for (std::size_t k = 0; k < kW; ++k) {
      PolicyParams up = p, down = p;
      up.weights[k] += h;
      down.weights[k] -= h;
      fd[k] = (ppo_objective(up, batch, adv, eps) - ppo_objective(down, batch, adv, eps)) / (2 * h);
      diff[k] = fd[k] - grad[k];
    }
    const double scale = std::max(norm(fd), norm(grad));
    if (scale == 0.0) continue;
    CHECK(norm(diff) / scale < 1e-4);
  }
}

TEST_CASE("clipping is inactive when every ratio is in range") {
  Rng rng(4);
  const PolicyParams p = random_params(rng);
  auto batch = random_batch(p, rng, 0.2);
  double surrogate = 0.0;
  std::size_t steps = 0;
  const auto adv = advantages_of(batch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (auto& s : batch[i].steps) {
      const double lp = p.log_prob(s.features, s.mask, s.action);
      s.log_prob = lp + std::log(1.0 / (0.85 + 0.3 * (steps % 7) / 7.0));
      surrogate += std::exp(lp - s.log_prob) * adv[i];
      ++steps;
    }
  }
  CHECK(ppo_objective(p, batch, adv, 0.2) == doctest::Approx(surrogate / steps).epsilon(1e-12));
}

TEST_CASE("degenerate batches are rejected") {
  Rng rng(2);
  const PolicyParams p = random_params(rng);
  auto batch = random_batch(p, rng, 0.2);
  for (auto& t : batch) t.episode_return = 0.7;
  CHECK(code_of([&] { ppo_update(p, batch, PpoConfig{}); }) == ErrorCode::kDegenerateBatch);
  CHECK(code_of([&] { ppo_update(p, {}, PpoConfig{}); }) == ErrorCode::kDegenerateBatch);
}

TEST_CASE("an update raises the surrogate and keeps the softmax normalized") {
  Rng rng(6);
  const PolicyParams p = random_params(rng);
  auto batch = random_batch(p, rng, 0.2);
  for (auto& tr : batch) {
    for (auto& s : tr.steps) s.log_prob = p.log_prob(s.features, s.mask, s.action);
  }
  PpoConfig cfg;
  cfg.minibatch_episodes = batch.size();
  const auto up = ppo_update(p, batch, cfg);
  const auto adv = advantages_of(batch);
  double expected = 0.0;
  std::size_t steps = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    expected += adv[i] * static_cast<double>(batch[i].steps.size());
    steps += batch[i].steps.size();
  }
  CHECK(up.diagnostics.objective_before == doctest::Approx(expected / steps).epsilon(1e-12));
  CHECK(up.diagnostics.objective_after > up.diagnostics.objective_before);
  CHECK(up.params.version == p.version + 1);
  for (const auto& tr : batch) {
    for (const auto& s : tr.steps) {
      const auto pi = up.params.probabilities(s.features, s.mask);
      CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("updates shrink as the clip range closes") {
  Rng rng(8);
  const PolicyParams p = random_params(rng);
  auto batch = random_batch(p, rng, 0.2);
  for (auto& tr : batch) {
    for (auto& s : tr.steps) s.log_prob = p.log_prob(s.features, s.mask, s.action);
  }
  double previous = std::numeric_limits<double>::infinity();
  for (double eps : {0.5, 0.2, 0.05, 0.01, 1e-4}) {
    PpoConfig cfg;
    cfg.clip = eps;
    cfg.learning_rate = 1.0;
    cfg.minibatch_episodes = 1;
    const double step = update_norm(ppo_update(p, batch, cfg).params, p);
    CHECK(step <= previous + 1e-12);
    previous = step;
  }
  PpoConfig wide;
  wide.clip = 0.5;
  wide.learning_rate = 1.0;
  wide.minibatch_episodes = 1;
  CHECK(previous < 0.01 * update_norm(ppo_update(p, batch, wide).params, p));
}

TEST_CASE("imitation beats the uniform baseline") {
  const auto& r = imitation();
  CHECK(r.examples > 1000);
  CHECK(r.heldout_accuracy > 1.0 / kNumAgentActions);
  CHECK(r.heldout_accuracy > 0.8);
}

TEST_CASE("imitation acknowledges after an accept") {
  const auto& r = imitation();
  ActionMask all;
  all.fill(true);
  int seen = 0;
  for (const auto& sk : corpus_1000()) {
    for (const auto& t : sk.turns) {
      if (t.speaker != Speaker::kAgent || !t.answering || !t.answering->contains(Intent::kAccept)) {
        continue;
      }
      const auto pi = r.params.probabilities(featurize(t.before, *t.answering), all);
      CHECK(pi[static_cast<std::size_t>(AgentAction::kAcknowledge)] > 0.9);
      if (++seen == 50) return;
    }
  }
  CHECK(seen > 0);
}

TEST_CASE("imitation needs agent turns") {
  CHECK(code_of([] { imitation_init({}); }) == ErrorCode::kEmptyCorpus);
}

TEST_CASE("policy json round trip") {
  Rng rng(5);
  PolicyParams p = random_params(rng);
  p.version = 7;
  const PolicyParams q = PolicyParams::from_json(nlohmann::json::parse(p.to_json().dump()));
  CHECK(q.weights == p.weights);
  CHECK(q.version == 7);
  auto bad = p.to_json();
  bad["feature_dim"] = 3;
  CHECK(code_of([&] { PolicyParams::from_json(bad); }) == ErrorCode::kBadConfig);
  CHECK(code_of([] { PolicyParams::from_json(nlohmann::json::object()); }) == ErrorCode::kBadConfig);
}

TEST_CASE("training is deterministic and parallel matches serial") {
  auto env = SimEnvironment{};
  env.bundles = builtin_catalog().bundles();
  env.classifier = std::make_shared<const IntentClassifier>(
      train_corpus_classifier(builtin_catalog(), env.config, 10, 1500));
  PpoConfig cfg;
  cfg.epochs = 2;
  cfg.batch_episodes = 16;
  const auto a = train(imitation().params, env, cfg);
  const auto b = train(imitation().params, env, cfg);
  cfg.parallel = false;
  const auto c = train(imitation().params, env, cfg);
  CHECK(a.params.weights == b.params.weights);
  CHECK(a.params.weights == c.params.weights);
  CHECK(a.curve.size() == 2);
  CHECK(a.params.version == imitation().params.version + 2);
  CHECK(training_csv(a.curve).rfind("epoch,mean_reward,clip_fraction,mean_ratio\n", 0) == 0);
}

TEST_CASE("config validation") {
  PpoConfig cfg;
  cfg.clip = 1.0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kBadConfig);
  cfg = {};
  cfg.epochs = 0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kBadConfig);
}

}  // namespace
}  // namespace negotiation
