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

#include "negotiation/policy.h"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "negotiation/error.h"
#include "negotiation/hashing.h"
#include "negotiation/kernels.h"

namespace negotiation {
namespace {

using I = Intent;
constexpr std::size_t kA = kNumAgentActions;
constexpr std::size_t kF = kPolicyFeatureDim;

std::size_t customer_category(const CompositeIntent& c) {
  if (c.contains(I::kAccept)) return 0;
  if (c.contains(I::kReject) || c.contains(I::kAcknowledge)) return 1;
  if (c.contains(I::kNegotiatePriceDecrease)) return 2;
  if (c.contains(I::kNegotiateAddX) || c.contains(I::kNegotiateRemoveX)) return 3;
  if (c.contains(I::kAskPrice)) return 4;
  if (c.contains(I::kAskClarification)) return 5;
  return 6;
}

std::size_t legal_count(const ActionMask& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

AgentAction only_legal(const ActionMask& mask) {
  for (std::size_t a = 0; a < kA; ++a) {
    if (mask[a]) return static_cast<AgentAction>(a);
  }
  throw NegotiationError(ErrorCode::kNoLegalAction, "mask is empty");
}

double clip_ratio(double r, double eps) { return std::clamp(r, 1.0 - eps, 1.0 + eps); }

// Adds the gradient of the clipped surrogate for one step, scaled by `scale`.
// Returns the step objective.
double step_objective(const PolicyParams& p, const PolicyStep& s, double adv, double eps,
                      double scale, std::vector<double>* grad) {
  const auto pi = p.probabilities(s.features, s.mask);
  const std::size_t a = static_cast<std::size_t>(s.action);
  const double ratio = std::exp(std::log(pi[a]) - s.log_prob);
  const double unclipped = ratio * adv;
  const double clipped = clip_ratio(ratio, eps) * adv;
  if (grad && unclipped <= clipped) {
    for (std::size_t k = 0; k < kA; ++k) {
      if (!s.mask[k]) continue;
      const double coef = scale * unclipped * ((k == a ? 1.0 : 0.0) - pi[k]);
      for (std::size_t f = 0; f < kF; ++f) (*grad)[k * kF + f] += coef * s.features[f];
    }
  }
  return std::min(unclipped, clipped);
}

// Largest |ratio - 1| over the batch.
double max_ratio_deviation(const PolicyParams& p, const std::vector<Trajectory>& batch) {
  double worst = 0.0;
  for (const auto& tr : batch) {
    for (const auto& s : tr.steps) {
      worst = std::max(worst, std::abs(std::exp(p.log_prob(s.features, s.mask, s.action) -
                                                s.log_prob) - 1.0));
    }
  }
  return worst;
}

std::vector<Trajectory> slice(const std::vector<Trajectory>& v, std::size_t lo, std::size_t hi) {
  return {v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi)};
}

}  // namespace

Features featurize(const DealSnapshot& b, const CompositeIntent& customer) {
  Features x{};
  const double ps = b.seller_price > 0 ? static_cast<double>(b.seller_price) : 1.0;
  const double pb = static_cast<double>(b.buyer_price);
  x[0] = 1.0;
  x[1] = (ps - pb) / ps;
  x[2] = b.max_turns > 0 ? static_cast<double>(b.t) / b.max_turns : 0.0;
  x[3] = b.d > 0 ? static_cast<double>(b.price_rounds_used) / b.d : 0.0;
  x[4] = b.total_items > 0 ? static_cast<double>(b.active_items) / b.total_items : 1.0;
  x[5] = (pb - static_cast<double>(b.seller_min)) / ps;
  x[6] = pb / ps - (1.0 - b.tol);
  x[7] = b.seller_price <= b.seller_min ? 1.0 : 0.0;
  x[8] = b.bundle_ops_available ? 1.0 : 0.0;
  x[9 + customer_category(customer)] = 1.0;
  x[16] = customer.contains(I::kGreet) ? 1.0 : 0.0;
  return x;
}

Features featurize_state(const DealState& state, const CompositeIntent& customer) {
  if (!state.is_open()) throw NegotiationError(ErrorCode::kClosedDeal, "deal is closed");
  return featurize(snapshot(state), customer);
}

PolicyParams PolicyParams::zeros() {
  PolicyParams p;
  p.weights.assign(kA * kF, 0.0);
  return p;
}

double PolicyParams::logit(std::size_t action, const Features& x) const {
  const double* w = weights.data() + action * kF;
  return std::inner_product(x.begin(), x.end(), w, 0.0);
}

std::array<double, kNumAgentActions> PolicyParams::probabilities(const Features& x,
                                                                 const ActionMask& mask) const {
  std::array<double, kA> out{};
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < kA; ++a) {
    if (mask[a]) best = std::max(best, out[a] = logit(a, x));
  }
  if (!std::isfinite(best)) throw NegotiationError(ErrorCode::kNoLegalAction, "mask is empty");
  double z = 0.0;
  for (std::size_t a = 0; a < kA; ++a) {
    out[a] = mask[a] ? std::exp(out[a] - best) : 0.0;
    z += out[a];
  }
  for (auto& v : out) v /= z;
  return out;
}

double PolicyParams::log_prob(const Features& x, const ActionMask& mask, AgentAction action) const {
  const std::size_t a = static_cast<std::size_t>(action);
  if (!mask[a]) return -std::numeric_limits<double>::infinity();
  return std::log(probabilities(x, mask)[a]);
}

nlohmann::json PolicyParams::to_json() const {
  nlohmann::json actions = nlohmann::json::array();
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t a = 0; a < kA; ++a) {
    actions.push_back(std::string(agent_action_name(static_cast<AgentAction>(a))));
    rows.push_back(std::vector<double>(weights.begin() + static_cast<std::ptrdiff_t>(a * kF),
                                       weights.begin() + static_cast<std::ptrdiff_t>((a + 1) * kF)));
  }
  return {{"feature_dim", feature_dim}, {"actions", actions}, {"weights", rows},
          {"version", version}};
}

PolicyParams PolicyParams::from_json(const nlohmann::json& j) {
  try {
    PolicyParams p;
    p.feature_dim = j.at("feature_dim").get<std::size_t>();
    p.version = j.at("version").get<int>();
    const auto& actions = j.at("actions");
    const auto& rows = j.at("weights");
    if (p.feature_dim != kF || actions.size() != kA || rows.size() != kA) {
      throw NegotiationError(ErrorCode::kBadConfig, "policy shape mismatch");
    }
    for (std::size_t a = 0; a < kA; ++a) {
      if (actions[a].get<std::string>() != agent_action_name(static_cast<AgentAction>(a))) {
        throw NegotiationError(ErrorCode::kBadConfig,
                               "unexpected action " + actions[a].get<std::string>());
      }
      const auto row = rows[a].get<std::vector<double>>();
      if (row.size() != kF) throw NegotiationError(ErrorCode::kBadConfig, "bad weight row");
      p.weights.insert(p.weights.end(), row.begin(), row.end());
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw NegotiationError(ErrorCode::kBadConfig, std::string("policy json: ") + e.what());
  }
}

SampledAction sample_action(const PolicyParams& policy, const Features& x, const ActionMask& mask,
                            Rng& rng) {
  if (legal_count(mask) == 1) return {only_legal(mask), 0.0};
  const auto pi = policy.probabilities(x, mask);
  std::discrete_distribution<std::size_t> pick(pi.begin(), pi.end());
  const std::size_t a = pick(rng);
  return {static_cast<AgentAction>(a), std::log(pi[a])};
}

AgentMove PolicyAgent::respond(const DealState& state, const CustomerMove& customer, Rng& rng) {
  const ActionMask mask = legal_agent_actions(state, customer);
  const int turn = turn_++;
  AgentAction action;
  if (legal_count(mask) <= 1 || !state.is_open()) {
    action = only_legal(mask);
  } else {
    PolicyStep step;
    step.features = featurize_state(state, customer.intent);
    step.mask = mask;
    const SampledAction s = sample_action(params_, step.features, mask, rng);
    step.action = s.action;
    step.log_prob = s.log_prob;
    steps_.push_back(step);
    step_turns_.push_back(turn);
    action = s.action;
  }
  return make_agent_move(state, customer, action, rng);
}

ImitationResult imitation_init(const std::vector<Skeleton>& corpus,
                               const ImitationOptions& options) {
  std::vector<kernels::SparseRow> rows;
  std::vector<std::size_t> labels;
  for (const auto& sk : corpus) {
    for (const auto& t : sk.turns) {
      if (t.speaker != Speaker::kAgent || !t.answering || t.agent_action < 0) continue;
      const Features x = featurize(t.before, *t.answering);
      kernels::SparseRow row;
      for (std::size_t f = 0; f < kF; ++f) {
        if (x[f] != 0.0) {
          row.index.push_back(f);
          row.value.push_back(x[f]);
        }
      }
      rows.push_back(std::move(row));
      labels.push_back(static_cast<std::size_t>(t.agent_action));
    }
  }
  if (rows.empty()) throw NegotiationError(ErrorCode::kEmptyCorpus, "no agent turns");

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_test =
      rows.size() < 5 ? 0 : static_cast<std::size_t>(std::floor(rows.size() * options.holdout));
  std::vector<kernels::SparseRow> train_rows, test_rows;
  std::vector<std::size_t> train_labels, test_labels;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& r = i < n_test ? test_rows : train_rows;
    auto& l = i < n_test ? test_labels : train_labels;
    r.push_back(rows[order[i]]);
    l.push_back(labels[order[i]]);
  }

  ImitationResult result;
  result.examples = rows.size();
  result.params = PolicyParams::zeros();
  auto& w = result.params.weights;
  std::vector<double> grad(w.size()), m(w.size(), 0.0), v(w.size(), 0.0);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int it = 1; it <= options.iterations; ++it) {
    kernels::softmax_gradient_parallel(train_rows, train_labels, w, kA, kF, options.l2, grad);
    const double c1 = 1.0 - std::pow(b1, it);
    const double c2 = 1.0 - std::pow(b2, it);
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = b1 * m[k] + (1 - b1) * grad[k];
      v[k] = b2 * v[k] + (1 - b2) * grad[k] * grad[k];
      w[k] -= options.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
    }
  }

  const auto& eval_rows = test_rows.empty() ? train_rows : test_rows;
  const auto& eval_labels = test_rows.empty() ? train_labels : test_labels;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < eval_rows.size(); ++i) {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < kA; ++a) {
      double s = 0.0;
      for (std::size_t k = 0; k < eval_rows[i].index.size(); ++k) {
        s += w[a * kF + eval_rows[i].index[k]] * eval_rows[i].value[k];
      }
      if (s > best_score) {
        best_score = s;
        best = a;
      }
    }
    hits += best == eval_labels[i];
  }
  result.heldout_accuracy = static_cast<double>(hits) / static_cast<double>(eval_rows.size());
  return result;
}

void PpoConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw NegotiationError(ErrorCode::kBadConfig, "clip must be in (0, 1)");
  if (epochs < 1) throw NegotiationError(ErrorCode::kBadConfig, "epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw NegotiationError(ErrorCode::kBadConfig, "learning rate must be > 0");
  if (batch_episodes < 2 || minibatch_episodes < 1) {
    throw NegotiationError(ErrorCode::kBadConfig, "batch needs >= 2 episodes");
  }
}

double clipped_objective(double ratio, double advantage, double clip) {
  return std::min(ratio * advantage, clip_ratio(ratio, clip) * advantage);
}

double ppo_objective(const PolicyParams& policy, const std::vector<Trajectory>& batch,
                     const std::vector<double>& advantages, double clip,
                     std::vector<double>* grad) {
  std::size_t steps = 0;
  for (const auto& tr : batch) steps += tr.steps.size();
  if (grad) grad->assign(policy.weights.size(), 0.0);
  if (steps == 0) return 0.0;
  const double scale = 1.0 / static_cast<double>(steps);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (const auto& s : batch[i].steps) {
      total += step_objective(policy, s, advantages[i], clip, scale, grad);
    }
  }
  return total * scale;
}

PpoUpdate ppo_update(const PolicyParams& policy, const std::vector<Trajectory>& batch,
                     const PpoConfig& config) {
  if (batch.empty()) throw NegotiationError(ErrorCode::kDegenerateBatch, "empty batch");
  std::vector<double> returns;
  std::size_t steps = 0;
  for (const auto& tr : batch) {
    returns.push_back(tr.episode_return);
    steps += tr.steps.size();
  }
  const std::vector<double> adv = normalize_batch(returns);
  if (steps == 0 || std::all_of(adv.begin(), adv.end(), [](double a) { return a == 0.0; })) {
    throw NegotiationError(ErrorCode::kDegenerateBatch, "all advantages are zero");
  }

  PpoUpdate out;
  out.params = policy;
  out.diagnostics.steps = steps;
  out.diagnostics.objective_before = ppo_objective(policy, batch, adv, config.clip);
  std::vector<double> grad;
  const std::size_t mb = std::max<std::size_t>(1, config.minibatch_episodes);
  for (std::size_t lo = 0; lo < batch.size(); lo += mb) {
    const std::size_t hi = std::min(batch.size(), lo + mb);
    const std::vector<double> part_adv(adv.begin() + static_cast<std::ptrdiff_t>(lo),
                                       adv.begin() + static_cast<std::ptrdiff_t>(hi));
    ppo_objective(out.params, slice(batch, lo, hi), part_adv, config.clip, &grad);
    // Halve the step until no ratio leaves the clip range (or the deviation
    // already present before the step).
    const double limit = std::max(config.clip, max_ratio_deviation(out.params, batch));
    double rate = config.learning_rate;
    for (int tries = 0; tries < 40; ++tries, rate *= 0.5) {
      PolicyParams next = out.params;
      for (std::size_t k = 0; k < grad.size(); ++k) next.weights[k] += rate * grad[k];
      if (max_ratio_deviation(next, batch) <= limit) {
        out.params.weights = std::move(next.weights);
        break;
      }
    }
  }
  ++out.params.version;

  out.diagnostics.objective_after = ppo_objective(out.params, batch, adv, config.clip);
  double ratio_sum = 0.0;
  std::size_t clipped = 0;
  for (const auto& tr : batch) {
    for (const auto& s : tr.steps) {
      const double r = std::exp(out.params.log_prob(s.features, s.mask, s.action) - s.log_prob);
      ratio_sum += r;
      clipped += (r < 1.0 - config.clip || r > 1.0 + config.clip);
    }
  }
  out.diagnostics.mean_ratio = ratio_sum / static_cast<double>(steps);
  out.diagnostics.clip_fraction = static_cast<double>(clipped) / static_cast<double>(steps);
  return out;
}

std::vector<Trajectory> collect(const PolicyParams& policy, const SimEnvironment& env,
                                std::size_t episodes, std::uint64_t seed, bool parallel) {
  if (!env.score || !env.classifier) {
    throw NegotiationError(ErrorCode::kBadConfig, "collection needs a scoring environment");
  }
  auto one = [&](std::size_t i) {
    PolicyAgent agent(policy);
    const Episode ep = run_seeded_episode(agent, env, derive_seed(seed, i));
    Trajectory tr;
    tr.steps = agent.steps();
    for (std::size_t k = 0; k < tr.steps.size(); ++k) {
      tr.steps[k].reward = ep.score->turns.at(static_cast<std::size_t>(agent.step_turns()[k])).total;
    }
    tr.episode_return = ep.metrics.episode_reward;
    return tr;
  };
  return parallel ? kernels::map_indexed_parallel(episodes, one)
                  : kernels::map_indexed_serial(episodes, one);
}

TrainResult train(const PolicyParams& init, const SimEnvironment& env, const PpoConfig& config) {
  config.validate();
  env.validate();
  TrainResult result;
  result.params = init;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batch = collect(result.params, env, config.batch_episodes,
                               derive_seed(config.seed, static_cast<std::uint64_t>(epoch)),
                               config.parallel);
    double mean = 0.0;
    for (const auto& tr : batch) mean += tr.episode_return;
    mean /= static_cast<double>(batch.size());
    const PpoUpdate up = ppo_update(result.params, batch, config);
    result.params = up.params;
    result.curve.push_back({epoch, mean, up.diagnostics.clip_fraction, up.diagnostics.mean_ratio});
  }
  return result;
}

std::string training_csv(const std::vector<EpochLog>& curve) {
  std::string out = "epoch,mean_reward,clip_fraction,mean_ratio\n";
  char line[160];
  for (const auto& e : curve) {
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f\n", e.epoch, e.mean_reward,
                  e.clip_fraction, e.mean_ratio);
    out += line;
  }
  return out;
}

PairedComparison compare_policies(const PolicyParams& a, const PolicyParams& b,
                                  const SimEnvironment& env, std::size_t episodes,
                                  std::uint64_t seed, bool parallel) {
  if (episodes < 2) throw NegotiationError(ErrorCode::kBadConfig, "need >= 2 episodes");
  env.validate();
  if (!env.score) throw NegotiationError(ErrorCode::kBadConfig, "comparison needs scoring");
  struct Pair {
    double ra, rb;
    std::optional<double> pa, pb;
  };
  auto price_ratio = [](const Episode& ep) -> std::optional<double> {
    if (!ep.metrics.accepted) return std::nullopt;
    for (const auto& t : ep.skeleton.turns) {
      if (t.speaker == Speaker::kAgent && t.price_offer) {
        return static_cast<double>(*ep.metrics.final_price) / static_cast<double>(*t.price_offer);
      }
    }
    return std::nullopt;
  };
  auto one = [&](std::size_t i) {
    const std::uint64_t s = derive_seed(seed, i);
    PolicyAgent agent_a(a), agent_b(b);
    const Episode ea = run_seeded_episode(agent_a, env, s);
    const Episode eb = run_seeded_episode(agent_b, env, s);
    return Pair{ea.metrics.episode_reward, eb.metrics.episode_reward, price_ratio(ea),
                price_ratio(eb)};
  };
  const auto pairs = parallel ? kernels::map_indexed_parallel(episodes, one)
                              : kernels::map_indexed_serial(episodes, one);

  PairedComparison c;
  c.episodes = episodes;
  const double n = static_cast<double>(episodes);
  double sum_d = 0.0, pa = 0.0, pb = 0.0;
  std::size_t na = 0, nb = 0;
  for (const auto& p : pairs) {
    c.mean_a += p.ra / n;
    c.mean_b += p.rb / n;
    sum_d += p.ra - p.rb;
    if (p.pa) pa += *p.pa, ++na;
    if (p.pb) pb += *p.pb, ++nb;
  }
  c.mean_diff = sum_d / n;
  c.price_ratio_a = na ? pa / static_cast<double>(na) : 0.0;
  c.price_ratio_b = nb ? pb / static_cast<double>(nb) : 0.0;
  double ss = 0.0;
  for (const auto& p : pairs) ss += std::pow(p.ra - p.rb - c.mean_diff, 2);
  const double se = std::sqrt(ss / (n - 1.0) / n);
  if (se > 0.0) {
    c.t_stat = c.mean_diff / se;
    const boost::math::students_t dist(n - 1.0);
    c.p_value = boost::math::cdf(boost::math::complement(dist, c.t_stat));
  } else {
    c.t_stat = c.mean_diff > 0 ? std::numeric_limits<double>::infinity()
                               : (c.mean_diff < 0 ? -std::numeric_limits<double>::infinity() : 0.0);
    c.p_value = c.mean_diff > 0 ? 0.0 : (c.mean_diff < 0 ? 1.0 : 0.5);
  }
  return c;
}

}  // namespace negotiation
