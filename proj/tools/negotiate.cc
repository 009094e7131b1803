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

// negotiate: command-line front end for corpus generation, self-play
// experiments, scoring, policy training and the session service.
//
// Exit codes: 0 ok, 1 configuration error, 2 I/O error.

#include <pthread.h>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "negotiation/catalog.h"
#include "negotiation/corpus_io.h"
#include "negotiation/dialogue.h"
#include "negotiation/error.h"
#include "negotiation/flow.h"
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

constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

// Catalog and policy files are configuration: any failure to load them is a
// configuration error.
struct ConfigFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DealFlags {
  NegotiationConfig config;

  void attach(CLI::App* cmd) {
    cmd->add_option("--k-seller", config.k_seller, "Seller concession rate")->capture_default_str();
    cmd->add_option("--k-buyer", config.k_buyer, "Buyer concession rate")->capture_default_str();
    cmd->add_option("--tol", config.tol, "Acceptance tolerance")->capture_default_str();
    cmd->add_option("--d", config.d, "Price-only rounds before bundle moves")
        ->capture_default_str();
    cmd->add_option("--max-turns", config.max_turns, "Price-round deadline")
        ->capture_default_str();
  }
};

Catalog catalog_from(const std::string& path) {
  if (path.empty()) return builtin_catalog();
  try {
    return load_catalog(path);
  } catch (const NegotiationError& e) {
    throw ConfigFileError("catalog " + path + ": " + e.what());
  }
}

PolicyParams policy_from(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigFileError("cannot open policy " + path);
  try {
    return PolicyParams::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigFileError("policy " + path + ": " + e.what());
  } catch (const NegotiationError& e) {
    throw ConfigFileError("policy " + path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw NegotiationError(ErrorCode::kIoFailure, "cannot write " + path);
}

std::vector<std::pair<double, double>> parse_grid(const std::string& text) {
  std::vector<std::pair<double, double>> grid;
  std::stringstream list(text);
  for (std::string cell; std::getline(list, cell, ',');) {
    const auto colon = cell.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(cell);
      std::size_t used = 0;
      const double kb = std::stod(cell.substr(0, colon), &used);
      const double ks = std::stod(cell.substr(colon + 1));
      grid.emplace_back(kb, ks);
    } catch (const std::exception&) {
      throw NegotiationError(ErrorCode::kBadConfig,
                             "grid cell '" + cell + "' is not k_buyer:k_seller");
    }
  }
  if (grid.empty()) throw NegotiationError(ErrorCode::kBadConfig, "empty grid");
  return grid;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---- generate ----

struct GenerateArgs {
  std::string catalog;
  std::size_t n = 4163;
  std::uint64_t seed = 10;
  std::string out;
  std::vector<std::string> realize{"template"};
  std::size_t shots_from = 200;
  DealFlags deal;
};

int cmd_generate(const GenerateArgs& a) {
  const Catalog catalog = catalog_from(a.catalog);
  a.deal.config.validate();
  const std::string& mode = a.realize.front();
  std::optional<ExternalEndpoint> endpoint;
  if (mode == "endpoint") {
    if (a.realize.size() != 2) {
      throw NegotiationError(ErrorCode::kBadConfig, "--realize endpoint needs a URL");
    }
    endpoint = ExternalEndpoint{a.realize[1]};
  } else if (mode != "template" || a.realize.size() != 1) {
    throw NegotiationError(ErrorCode::kBadConfig, "--realize is template or endpoint URL");
  }

  const auto skeletons = generate_corpus(catalog, a.n, a.deal.config, a.seed);
  std::vector<Dialogue> corpus;
  corpus.reserve(skeletons.size());
  Rng text_rng(derive_seed(a.seed, 1));
  if (!endpoint) {
    for (const auto& sk : skeletons) corpus.push_back(realize_skeleton(sk, text_rng));
  } else {
    const auto bank_source = generate_corpus(catalog, a.shots_from, a.deal.config,
                                             derive_seed(a.seed, 2));
    const ShotBank bank = build_shot_bank(bank_source, a.seed);
    std::size_t external = 0, fallback = 0;
    bool endpoint_up = true;
    for (const auto& sk : skeletons) {
      if (!endpoint_up) {
        corpus.push_back(realize_skeleton(sk, text_rng));
        fallback += sk.turns.size();
        continue;
      }
      auto r = realize_skeleton_external(sk, bank, *endpoint, text_rng);
      external += r.external_turns;
      fallback += r.fallback_turns;
      corpus.push_back(std::move(r.dialogue));
      if (external == 0) {
        log_message(LogLevel::kWarn, "endpoint " + endpoint->url +
                                         " produced nothing usable; realizing with templates");
        endpoint_up = false;
      }
    }
    log_message(LogLevel::kInfo, "external turns " + std::to_string(external) +
                                     ", template turns " + std::to_string(fallback));
  }
  for (const auto& d : corpus) {
    const auto problems = validate_dialogue(d);
    if (!problems.empty()) {
      throw NegotiationError(ErrorCode::kInvalidDialogue, d.id + ": " + problems.front().rule);
    }
  }

  const CorpusManifest manifest =
      write_split_corpus(corpus, SplitRatios{}, a.seed, catalog, a.out);
  json report = corpus_stats(corpus, a.seed).to_json();
  report["manifest"] = manifest.to_json();
  std::cout << report.dump(2) << '\n';
  return 0;
}

// ---- simulate ----

struct SimulateArgs {
  std::size_t episodes = 100;
  std::uint64_t seed = 10;
  std::string policy;
  bool no_score = false;
  std::string out;
  DealFlags deal;
};

int cmd_simulate(const SimulateArgs& a) {
  a.deal.config.validate();
  if (a.episodes == 0) throw NegotiationError(ErrorCode::kBadConfig, "--episodes must be positive");
  std::optional<PolicyParams> policy;
  if (!a.policy.empty()) policy = policy_from(a.policy);
  SimEnvironment env;
  if (a.no_score) {
    env.bundles = builtin_catalog().bundles();
    env.config = a.deal.config;
    env.score = false;
  } else {
    env = SimEnvironment::standard(a.seed, a.deal.config);
  }
  env.validate();

  std::ostringstream csv;
  csv << "episode,bundle,accepted,final_price,turns,buyer_utility,seller_utility,reward\n";
  for (std::size_t i = 0; i < a.episodes; ++i) {
    const std::uint64_t seed = derive_seed(a.seed, i);
    std::unique_ptr<AgentStrategy> agent;
    if (policy) {
      agent = std::make_unique<PolicyAgent>(*policy);
    } else {
      agent = std::make_unique<RuleAgent>(env.table);
    }
    const Episode ep = run_seeded_episode(*agent, env, seed);
    const EpisodeMetrics& m = ep.metrics;
    csv << i << ',' << ep.skeleton.bundle.id << ',' << (m.accepted ? 1 : 0) << ','
        << (m.final_price ? std::to_string(*m.final_price) : "") << ',' << m.turns << ','
        << fixed(m.buyer_utility) << ',' << fixed(m.seller_utility) << ','
        << fixed(m.episode_reward) << '\n';
  }
  write_text(a.out, csv.str());
  return 0;
}

// ---- sweep ----

struct SweepArgs {
  std::string grid = "0.2:0.8,0.4:0.6,0.6:0.4,0.8:0.2";
  std::size_t episodes = 200;
  std::uint64_t seed = 10;
  std::string out;
  DealFlags deal;
};

int cmd_sweep(const SweepArgs& a) {
  a.deal.config.validate();
  SimEnvironment env;
  env.bundles = builtin_catalog().bundles();
  env.config = a.deal.config;
  env.score = false;
  write_text(a.out, sweep_csv(k_sweep(parse_grid(a.grid), a.episodes, env, a.seed)));
  return 0;
}

// ---- score ----

struct ScoreArgs {
  std::string in;
  std::string weights = "0.2,0.2,0.3,0.2";
  std::optional<Money> pmin;
  std::uint64_t seed = 10;
  std::size_t classifier_examples = 5000;
  std::string out;
};

int cmd_score(const ScoreArgs& a) {
  const RewardWeights weights = RewardWeights::parse_csv(a.weights);
  weights.validate();
  const auto corpus = read_corpus(a.in);
  if (corpus.empty()) throw NegotiationError(ErrorCode::kEmptyCorpus, a.in + " has no dialogues");
  const IntentClassifier clf = train_corpus_classifier(builtin_catalog(), NegotiationConfig{},
                                                       a.seed, a.classifier_examples);
  const ScenarioConfig scenario;
  const double floor_share = (scenario.seller_floor_low + scenario.seller_floor_high) / 2.0;

  std::ostringstream csv;
  csv << "id,agent_turns,r1,r2,r3,r4,total\n";
  for (const auto& d : corpus) {
    const Money pmin = a.pmin ? *a.pmin
                              : round_half_up(floor_share * static_cast<double>(bundle_price(d.bundle)));
    const DialogueScore s = score_dialogue(d, clf, weights, pmin);
    double r1 = 0.0, r4 = 0.0;
    for (const auto& t : s.turns) {
      r1 += t.r1;
      r4 += t.r4;
    }
    const double n = s.turns.empty() ? 1.0 : static_cast<double>(s.turns.size());
    const RewardBreakdown last = s.turns.empty() ? RewardBreakdown{} : s.turns.back();
    csv << d.id << ',' << s.turns.size() << ',' << fixed(r1 / n) << ',' << fixed(last.r2) << ','
        << fixed(last.r3) << ',' << fixed(r4 / n) << ',' << fixed(s.total) << '\n';
  }
  write_text(a.out, csv.str());
  return 0;
}

// ---- train ----

struct TrainArgs {
  PpoConfig ppo;
  std::size_t imitation_dialogues = 1000;
  std::size_t evaluate = 0;
  std::string out = "policy.json";
  std::string log = "training.csv";
};

int cmd_train(TrainArgs a) {
  a.ppo.validate();
  const SimEnvironment env = SimEnvironment::standard(a.ppo.seed);
  const auto corpus =
      generate_corpus(builtin_catalog(), a.imitation_dialogues, env.config, a.ppo.seed);
  ImitationOptions imitation;
  imitation.seed = a.ppo.seed;
  const ImitationResult init = imitation_init(corpus, imitation);
  log_message(LogLevel::kInfo, "imitation held-out accuracy " + fixed(init.heldout_accuracy));
  const TrainResult result = train(init.params, env, a.ppo);
  write_text(a.out, result.params.to_json().dump(2) + "\n");
  write_text(a.log, training_csv(result.curve));
  if (a.evaluate > 0) {
    const PairedComparison c = compare_policies(result.params, init.params, env, a.evaluate,
                                                derive_seed(a.ppo.seed, 99));
    std::cout << json{{"episodes", c.episodes},
                      {"trained_mean", c.mean_a},
                      {"imitation_mean", c.mean_b},
                      {"mean_diff", c.mean_diff},
                      {"t_stat", c.t_stat},
                      {"p_value", c.p_value}}
                     .dump(2)
              << '\n';
  }
  return 0;
}

// ---- serve ----

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string catalog;
  std::string policy;
  std::string persist = "sessions.jsonl";
  int expiry_minutes = 30;
  std::uint64_t seed = 10;
  std::size_t classifier_examples = 5000;
};

int cmd_serve(const ServeArgs& a) {
  ServiceOptions options;
  options.catalog = catalog_from(a.catalog);
  if (!a.policy.empty()) options.policy = policy_from(a.policy);
  if (a.expiry_minutes <= 0) {
    throw NegotiationError(ErrorCode::kBadConfig, "--expiry-minutes must be positive");
  }
  options.expiry = std::chrono::minutes(a.expiry_minutes);
  options.persist_path = a.persist;
  options.seed = a.seed;

  // Block the stop signals before any thread starts so only the waiter sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  options.classifier = std::make_shared<const IntentClassifier>(train_corpus_classifier(
      options.catalog, options.config, a.seed, a.classifier_examples));
  auto sessions = std::make_shared<SessionManager>(std::move(options));
  NegotiationServer server(sessions);
  const int port = server.bind(a.host, a.port);
  std::cout << "listening on " << a.host << ':' << port << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    log_message(LogLevel::kInfo, "signal " + std::to_string(sig) + ", shutting down");
    server.stop();
  });
  server.run();
  waiter.join();
  return 0;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigFileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NegotiationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kIoFailure ? kExitIo : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Negotiation engine: corpora, simulation, rewards, training and live sessions"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  std::string level = "info";
  app.add_option("--log-level", level, "debug, info, warn, error or off")->capture_default_str();

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate and split a dialogue corpus");
  generate->add_option("--catalog", gen.catalog, "Catalog JSON (default: built-in)");
  generate->add_option("--n", gen.n, "Number of dialogues")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--realize", gen.realize, "template | endpoint URL")
      ->expected(1, 2)
      ->capture_default_str();
  generate->add_option("--shot-dialogues", gen.shots_from,
                       "Dialogues used to build few-shot examples")
      ->capture_default_str();
  gen.deal.attach(generate);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Play seeded self-play episodes");
  simulate->add_option("--episodes", sim.episodes, "Episodes")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--policy", sim.policy, "Policy JSON (default: rule agent)");
  simulate->add_flag("--no-score", sim.no_score, "Skip text realization and rewards");
  simulate->add_option("--out", sim.out, "CSV output (default: stdout)");
  sim.deal.attach(simulate);

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Concession-rate sweep");
  sweep->add_option("--grid", sw.grid, "k_buyer:k_seller cells, comma separated")
      ->capture_default_str();
  sweep->add_option("--episodes", sw.episodes, "Episodes per cell")->capture_default_str();
  sweep->add_option("--seed", sw.seed, "Random seed")->capture_default_str();
  sweep->add_option("--out", sw.out, "CSV output (default: stdout)");
  sw.deal.attach(sweep);

  ScoreArgs sc;
  auto* score = app.add_subcommand("score", "Reward report for a corpus file");
  score->add_option("--in", sc.in, "Corpus JSONL")->required();
  score->add_option("--weights", sc.weights, "Reward weights g1,g2,g3,g4")->capture_default_str();
  score->add_option("--pmin", sc.pmin, "Seller reserve (default: share of the list price)");
  score->add_option("--seed", sc.seed, "Classifier seed")->capture_default_str();
  score->add_option("--classifier-examples", sc.classifier_examples, "Classifier training turns")
      ->capture_default_str();
  score->add_option("--out", sc.out, "CSV output (default: stdout)");

  TrainArgs tr;
  auto* trainer = app.add_subcommand("train", "Imitation init followed by PPO");
  trainer->add_option("--epochs", tr.ppo.epochs, "PPO epochs")->capture_default_str();
  trainer->add_option("--clip", tr.ppo.clip, "Clip range")->capture_default_str();
  trainer->add_option("--lr", tr.ppo.learning_rate, "Learning rate")->capture_default_str();
  trainer->add_option("--batch", tr.ppo.batch_episodes, "Episodes per epoch")
      ->capture_default_str();
  trainer->add_option("--minibatch", tr.ppo.minibatch_episodes, "Episodes per update")
      ->capture_default_str();
  trainer->add_option("--seed", tr.ppo.seed, "Random seed")->capture_default_str();
  trainer->add_option("--imitation-dialogues", tr.imitation_dialogues,
                      "Skeletons for imitation init")
      ->capture_default_str();
  trainer->add_option("--evaluate", tr.evaluate, "Paired evaluation episodes (0: skip)")
      ->capture_default_str();
  trainer->add_option("--out", tr.out, "Policy JSON")->capture_default_str();
  trainer->add_option("--log", tr.log, "Training log CSV")->capture_default_str();

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--host", sv.host, "Bind address")->capture_default_str();
  serve->add_option("--port", sv.port, "Port (0: any free port)")->capture_default_str();
  serve->add_option("--catalog", sv.catalog, "Catalog JSON (default: built-in)");
  serve->add_option("--policy", sv.policy, "Policy JSON for policy-agent sessions");
  serve->add_option("--persist", sv.persist, "JSONL file for closed sessions")
      ->capture_default_str();
  serve->add_option("--expiry-minutes", sv.expiry_minutes, "Idle session expiry")
      ->capture_default_str();
  serve->add_option("--seed", sv.seed, "Random seed")->capture_default_str();
  serve->add_option("--classifier-examples", sv.classifier_examples, "Classifier training turns")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  return run_guarded([&] {
    set_log_level(parse_log_level(level));
    if (*generate) return cmd_generate(gen);
    if (*simulate) return cmd_simulate(sim);
    if (*sweep) return cmd_sweep(sw);
    if (*score) return cmd_score(sc);
    if (*trainer) return cmd_train(tr);
    return cmd_serve(sv);
  });
}
