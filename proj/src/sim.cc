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

#include "negotiation/sim.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "negotiation/error.h"
#include "negotiation/hashing.h"
#include "negotiation/kernels.h"

namespace negotiation {
namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  if (v.empty()) return {};
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

bool digits_only(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

IntentClassifier train_corpus_classifier(const Catalog& catalog, const NegotiationConfig& config,
                                         std::uint64_t seed, std::size_t examples) {
  std::vector<LabeledText> data;
  Rng text_rng(derive_seed(seed, 1));
  std::size_t batch = 0;
  while (data.size() < examples) {
    const auto corpus = generate_corpus(catalog, 200, config, derive_seed(seed, 100 + batch++));
    for (const auto& sk : corpus) {
      const Dialogue d = realize_skeleton(sk, text_rng);
      for (const auto& t : d.turns) data.push_back({t.text, t.intent});
    }
  }
  data.resize(examples);
  ClassifierOptions options;
  options.seed = seed;
  return train_classifier(data, options);
}

SimEnvironment SimEnvironment::standard(std::uint64_t seed, const NegotiationConfig& config) {
  SimEnvironment env;
  env.bundles = builtin_catalog().bundles();
  env.config = config;
  env.classifier = std::make_shared<const IntentClassifier>(
      train_corpus_classifier(builtin_catalog(), config, seed));
  return env;
}

void SimEnvironment::validate() const {
  if (bundles.empty()) throw NegotiationError(ErrorCode::kBadConfig, "no bundles");
  config.validate();
  scenario.validate();
  table.validate();
  weights.validate();
  if (score && !classifier) {
    throw NegotiationError(ErrorCode::kBadConfig, "scoring needs a classifier");
  }
}

EpisodeMetrics skeleton_metrics(const Skeleton& sk) {
  EpisodeMetrics m;
  m.turns = static_cast<int>(sk.turns.size());
  m.accepted = sk.outcome.status == OutcomeStatus::kAccepted;
  if (!m.accepted) return m;
  m.final_price = sk.outcome.final_price;
  const double ask = static_cast<double>(sk.final_state.opening_ask);
  const double bid = static_cast<double>(sk.final_state.opening_bid);
  const double price = static_cast<double>(*sk.outcome.final_price);
  if (ask > bid) {
    m.buyer_utility = std::clamp((ask - price) / (ask - bid), 0.0, 1.0);
    m.seller_utility = std::clamp((price - bid) / (ask - bid), 0.0, 1.0);
  } else {
    m.buyer_utility = 0.5;
    m.seller_utility = 0.5;
  }
  return m;
}

Episode run_episode(AgentStrategy& agent, const SimEnvironment& env, const Bundle& bundle,
                    Rng& rng) {
  Rng text_rng(rng());
  Episode ep;
  const DealState opening = open_scenario(bundle, env.config, env.scenario, rng);
  ep.skeleton = run_negotiation(opening, env.config, env.table, agent, rng);
  ep.metrics = skeleton_metrics(ep.skeleton);
  if (env.score) {
    if (!env.classifier) throw NegotiationError(ErrorCode::kBadConfig, "no classifier");
    ep.dialogue = realize_skeleton(ep.skeleton, text_rng);
    ep.score = score_dialogue(*ep.dialogue, *env.classifier, env.weights,
                              std::max<Money>(1, ep.skeleton.final_state.seller_min));
    ep.metrics.episode_reward = ep.score->total;
  }
  return ep;
}

Episode run_seeded_episode(AgentStrategy& agent, const SimEnvironment& env, std::uint64_t seed) {
  if (env.bundles.empty()) throw NegotiationError(ErrorCode::kBadConfig, "no bundles");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> which(0, env.bundles.size() - 1);
  const Bundle& bundle = env.bundles[which(rng)];
  Episode ep = run_episode(agent, env, bundle, rng);
  ep.skeleton.id = "ep-" + std::to_string(seed);
  if (ep.dialogue) ep.dialogue->id = ep.skeleton.id;
  return ep;
}

std::vector<SweepCell> k_sweep(const std::vector<std::pair<double, double>>& grid, std::size_t n,
                               const SimEnvironment& env, std::uint64_t seed, bool parallel) {
  if (n < 30) throw NegotiationError(ErrorCode::kBadConfig, "k_sweep needs n >= 30 per cell");
  std::vector<SimEnvironment> cells;
  for (const auto& [kb, ks] : grid) {
    SimEnvironment cell = env;
    cell.config.k_buyer = kb;
    cell.config.k_seller = ks;
    cell.score = false;
    cell.validate();
    cells.push_back(std::move(cell));
  }
  auto one = [&](std::size_t job) {
    RuleAgent agent(env.table);
    return run_seeded_episode(agent, cells[job / n], derive_seed(seed, job % n)).metrics;
  };
  const std::size_t jobs = cells.size() * n;
  const auto metrics =
      parallel ? kernels::map_indexed_parallel(jobs, one) : kernels::map_indexed_serial(jobs, one);

  std::vector<SweepCell> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> buyer, seller;
    double accepted = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& m = metrics[c * n + i];
      buyer.push_back(m.buyer_utility);
      seller.push_back(m.seller_utility);
      accepted += m.accepted;
    }
    SweepCell cell;
    cell.k_buyer = grid[c].first;
    cell.k_seller = grid[c].second;
    cell.episodes = n;
    const MeanSe b = mean_se(buyer);
    const MeanSe s = mean_se(seller);
    cell.buyer_utility = b.mean;
    cell.stderr_buyer = b.se;
    cell.seller_utility = s.mean;
    cell.stderr_seller = s.se;
    cell.accept_rate = accepted / static_cast<double>(n);
    out.push_back(cell);
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::string out = "k_buyer,k_seller,buyer_utility,seller_utility,accept_rate,stderr\n";
  char line[256];
  for (const auto& c : cells) {
    std::snprintf(line, sizeof line, "%.4g,%.4g,%.6f,%.6f,%.6f,%.6f\n", c.k_buyer, c.k_seller,
                  c.buyer_utility, c.seller_utility, c.accept_rate, c.stderr_buyer);
    out += line;
  }
  return out;
}

nlohmann::json CorpusStats::to_json() const {
  return {{"dialogues", dialogues},
          {"utterances", utterances},
          {"mean_turns", mean_turns},
          {"mean_words_customer", mean_words_customer},
          {"mean_words_agent", mean_words_agent},
          {"unique_words", unique_words},
          {"self_bleu1", self_bleu1}};
}

CorpusStats corpus_stats(const std::vector<Dialogue>& corpus, std::uint64_t seed,
                         std::size_t pairs, bool parallel) {
  if (corpus.empty()) throw NegotiationError(ErrorCode::kEmptyCorpus, "no dialogues");
  CorpusStats st;
  st.dialogues = corpus.size();
  std::vector<std::vector<std::string>> utterances;
  std::set<std::string> vocab;
  double words[2] = {0, 0};
  double count[2] = {0, 0};
  for (const auto& d : corpus) {
    for (const auto& t : d.turns) {
      auto toks = tokenize(t.text);
      const int side = t.speaker == Speaker::kAgent ? 1 : 0;
      words[side] += static_cast<double>(toks.size());
      count[side] += 1.0;
      for (const auto& w : toks) {
        if (!digits_only(w)) vocab.insert(w);
      }
      utterances.push_back(std::move(toks));
    }
  }
  st.utterances = utterances.size();
  st.mean_turns = static_cast<double>(st.utterances) / static_cast<double>(st.dialogues);
  st.mean_words_customer = count[0] > 0 ? words[0] / count[0] : 0.0;
  st.mean_words_agent = count[1] > 0 ? words[1] / count[1] : 0.0;
  st.unique_words = vocab.size();
  if (utterances.size() >= 2) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, utterances.size() - 1);
    std::vector<std::pair<std::size_t, std::size_t>> sample;
    while (sample.size() < pairs) {
      const std::size_t i = pick(rng);
      const std::size_t j = pick(rng);
      if (i != j) sample.emplace_back(i, j);
    }
    st.self_bleu1 = parallel ? kernels::mean_pair_bleu1_parallel(utterances, sample)
                             : kernels::mean_pair_bleu1_serial(utterances, sample);
  }
  return st;
}

}  // namespace negotiation
