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

#include "negotiation/rewards.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "negotiation/error.h"
#include "negotiation/kernels.h"
#include "negotiation/log.h"

namespace negotiation {
namespace {

bool all_digits(const std::string& tok) {
  return !tok.empty() && std::all_of(tok.begin(), tok.end(),
                                     [](unsigned char c) { return std::isdigit(c); });
}

// Feature strings for a text: unigrams plus adjacent bigrams.
std::vector<std::string> feature_terms(std::string_view text) {
  std::vector<std::string> toks = tokenize(text);
  for (auto& t : toks) {
    if (all_digits(t)) t = "<num>";
  }
  std::vector<std::string> terms = toks;
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) terms.push_back(toks[i] + " " + toks[i + 1]);
  return terms;
}

kernels::SparseRow to_row(const std::vector<std::size_t>& idx) {
  std::map<std::size_t, double> counts;
  for (std::size_t i : idx) counts[i] += 1.0;
  kernels::SparseRow row;
  for (const auto& [i, c] : counts) {
    row.index.push_back(i);
    row.value.push_back(c);
  }
  return row;
}

std::map<std::string, double> bag(std::string_view text) {
  std::map<std::string, double> counts;
  for (auto& t : tokenize(text)) counts[t] += 1.0;
  return counts;
}

double cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [k, v] : a) {
    na += v * v;
    auto it = b.find(k);
    if (it != b.end()) dot += v * it->second;
  }
  for (const auto& [k, v] : b) nb += v * v;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<LabeledText> labeled_texts(const std::vector<Dialogue>& dialogues) {
  std::vector<LabeledText> out;
  for (const auto& d : dialogues) {
    for (const auto& t : d.turns) out.push_back({t.text, t.intent});
  }
  return out;
}

// ---- Classifier ----

std::vector<std::size_t> IntentClassifier::features(std::string_view text) const {
  std::vector<std::size_t> idx;
  for (const auto& term : feature_terms(text)) {
    auto it = vocabulary_.find(term);
    if (it != vocabulary_.end()) idx.push_back(it->second);
  }
  return idx;
}

std::optional<std::size_t> IntentClassifier::class_index(const CompositeIntent& intent) const {
  const std::string name = intent.name();
  auto it = std::find(classes_.begin(), classes_.end(), name);
  if (it == classes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes_.begin());
}

std::vector<double> IntentClassifier::predict_proba(std::string_view text) const {
  const std::size_t nc = classes_.size();
  const std::size_t nf = vocabulary_.size();
  std::vector<double> z(nc, 0.0);
  for (std::size_t f : features(text)) {
    for (std::size_t c = 0; c < nc; ++c) z[c] += weights_[c * nf + f];
  }
  const double peak = nc ? *std::max_element(z.begin(), z.end()) : 0.0;
  double norm = 0.0;
  for (double& v : z) {
    v = std::exp(v - peak);
    norm += v;
  }
  for (double& v : z) v /= norm;
  return z;
}

IntentClassifier::Prediction IntentClassifier::classify(std::string_view text) const {
  const auto p = predict_proba(text);
  const std::size_t best = argmax(p);
  return {classes_[best], p[best]};
}

double IntentClassifier::probability(std::string_view text, const CompositeIntent& intent) const {
  const auto idx = class_index(intent);
  if (!idx) throw NegotiationError(ErrorCode::kUnknownClass, intent.name());
  return predict_proba(text)[*idx];
}

nlohmann::json IntentClassifier::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  const std::size_t nf = vocabulary_.size();
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    rows.push_back(std::vector<double>(weights_.begin() + static_cast<long>(c * nf),
                                       weights_.begin() + static_cast<long>((c + 1) * nf)));
  }
  return {{"vocabulary", vocabulary_},
          {"classes", classes_},
          {"weights", rows},
          {"heldout_accuracy", heldout_accuracy_}};
}

IntentClassifier IntentClassifier::from_json(const nlohmann::json& j) {
  IntentClassifier clf;
  try {
    clf.vocabulary_ = j.at("vocabulary").get<std::map<std::string, std::size_t>>();
    clf.classes_ = j.at("classes").get<std::vector<std::string>>();
    const auto& rows = j.at("weights");
    if (rows.size() != clf.classes_.size()) {
      throw NegotiationError(ErrorCode::kSchemaViolation, "classifier: one weight row per class");
    }
    for (const auto& row : rows) {
      const auto w = row.get<std::vector<double>>();
      if (w.size() != clf.vocabulary_.size()) {
        throw NegotiationError(ErrorCode::kSchemaViolation, "classifier: row width != vocabulary");
      }
      clf.weights_.insert(clf.weights_.end(), w.begin(), w.end());
    }
    for (const auto& [term, idx] : clf.vocabulary_) {
      if (idx >= clf.vocabulary_.size()) {
        throw NegotiationError(ErrorCode::kSchemaViolation, "classifier: index out of range");
      }
    }
    clf.heldout_accuracy_ = j.value("heldout_accuracy", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw NegotiationError(ErrorCode::kSchemaViolation, std::string("classifier: ") + e.what());
  }
  return clf;
}

IntentClassifier train_classifier(const std::vector<LabeledText>& corpus,
                                  const ClassifierOptions& options) {
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : corpus) ++counts[ex.intent.name()];
  IntentClassifier clf;
  for (const auto& [name, n] : counts) {
    if (n >= options.min_examples) {
      clf.classes_.push_back(name);
    } else {
      log_message(LogLevel::kInfo, "classifier: dropping rare class " + name);
    }
  }
  if (clf.classes_.size() < 2) {
    throw NegotiationError(ErrorCode::kInsufficientData,
                           "need two classes with at least " +
                               std::to_string(options.min_examples) + " examples");
  }
  std::map<std::string, std::size_t> class_of;
  for (std::size_t c = 0; c < clf.classes_.size(); ++c) class_of[clf.classes_[c]] = c;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (class_of.count(corpus[i].intent.name())) order.push_back(i);
  }
  std::mt19937_64 rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto held = static_cast<std::size_t>(std::floor(options.holdout * order.size()));
  const std::vector<std::size_t> train(order.begin(), order.end() - static_cast<long>(held));
  const std::vector<std::size_t> test(order.end() - static_cast<long>(held), order.end());

  std::set<std::string> terms;
  for (std::size_t i : train) {
    for (auto& t : feature_terms(corpus[i].text)) terms.insert(std::move(t));
  }
  std::size_t next = 0;
  for (const auto& t : terms) clf.vocabulary_[t] = next++;

  std::vector<kernels::SparseRow> rows;
  std::vector<std::size_t> labels;
  for (std::size_t i : train) {
    rows.push_back(to_row(clf.features(corpus[i].text)));
    labels.push_back(class_of.at(corpus[i].intent.name()));
  }
  const std::size_t nc = clf.classes_.size();
  const std::size_t nf = clf.vocabulary_.size();
  clf.weights_.assign(nc * nf, 0.0);
  std::vector<double> grad, m(nc * nf, 0.0), v(nc * nf, 0.0);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int it = 1; it <= options.iterations; ++it) {
    if (options.parallel) {
      kernels::softmax_gradient_parallel(rows, labels, clf.weights_, nc, nf, options.l2, grad);
    } else {
      kernels::softmax_gradient_serial(rows, labels, clf.weights_, nc, nf, options.l2, grad);
    }
    const double c1 = 1.0 - std::pow(b1, it);
    const double c2 = 1.0 - std::pow(b2, it);
    for (std::size_t k = 0; k < grad.size(); ++k) {
      m[k] = b1 * m[k] + (1 - b1) * grad[k];
      v[k] = b2 * v[k] + (1 - b2) * grad[k] * grad[k];
      clf.weights_[k] -= options.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
    }
  }

  const std::vector<std::size_t>& scored = test.empty() ? train : test;
  std::size_t hits = 0;
  for (std::size_t i : scored) {
    hits += clf.classify(corpus[i].text).label == corpus[i].intent.name();
  }
  clf.heldout_accuracy_ = static_cast<double>(hits) / static_cast<double>(scored.size());
  return clf;
}

// ---- Reward terms ----

double r1_intent_consistency(const IntentClassifier& clf, std::string_view text,
                             const CompositeIntent& target) {
  return clf.probability(text, target);
}

double r2_price_gap(Money initial_agent_price, Money final_price) {
  if (initial_agent_price <= 0) {
    throw NegotiationError(ErrorCode::kZeroInitialPrice, "initial agent price must be positive");
  }
  return static_cast<double>(final_price) / static_cast<double>(initial_agent_price);
}

double r3_negotiation_strategy(Money buyer_price, Money seller_min, Intent final_intent) {
  if (seller_min <= 0) throw NegotiationError(ErrorCode::kZeroMinPrice, "P_min must be positive");
  double sign = 0.0;
  if (final_intent == Intent::kAccept) {
    sign = 1.0;
  } else if (final_intent == Intent::kReject) {
    sign = -1.0;
  } else {
    throw NegotiationError(ErrorCode::kInvalidDialogue, "final intent must be Accept or Reject");
  }
  const double x = static_cast<double>(buyer_price - seller_min) / static_cast<double>(seller_min);
  return x < 0.0 ? 0.0 : sign * std::exp(x);
}

double r4_interactiveness(std::string_view current, const std::vector<std::string>& prior) {
  if (prior.empty()) return 1.0;
  const auto cur = bag(current);
  double sum = 0.0;
  for (const auto& p : prior) sum += cosine(cur, bag(p));
  return 1.0 - sum / static_cast<double>(prior.size());
}

std::array<double, 4> RewardWeights::effective() const {
  if (!renormalize) return gamma;
  const double s = gamma[0] + gamma[1] + gamma[2] + gamma[3];
  return {gamma[0] / s, gamma[1] / s, gamma[2] / s, gamma[3] / s};
}

void RewardWeights::validate() const {
  for (double g : gamma) {
    if (!(g >= 0.0) || !std::isfinite(g)) {
      throw NegotiationError(ErrorCode::kBadConfig, "reward weights must be finite and >= 0");
    }
  }
  if (renormalize && gamma[0] + gamma[1] + gamma[2] + gamma[3] == 0.0) {
    throw NegotiationError(ErrorCode::kBadConfig, "cannot renormalize all-zero weights");
  }
}

nlohmann::json RewardWeights::to_json() const {
  return {{"gamma", gamma}, {"renormalize", renormalize}};
}

RewardWeights RewardWeights::from_json(const nlohmann::json& j) {
  RewardWeights w;
  try {
    const auto g = j.at("gamma").get<std::vector<double>>();
    if (g.size() != 4) throw NegotiationError(ErrorCode::kBadConfig, "gamma needs 4 values");
    std::copy(g.begin(), g.end(), w.gamma.begin());
    w.renormalize = j.value("renormalize", false);
  } catch (const nlohmann::json::exception& e) {
    throw NegotiationError(ErrorCode::kBadConfig, std::string("reward config: ") + e.what());
  }
  w.validate();
  return w;
}

RewardWeights RewardWeights::parse_csv(std::string_view csv) {
  RewardWeights w;
  std::stringstream in{std::string(csv)};
  std::string cell;
  std::size_t i = 0;
  while (std::getline(in, cell, ',')) {
    if (i >= 4) throw NegotiationError(ErrorCode::kBadConfig, "expected 4 weights");
    try {
      std::size_t used = 0;
      w.gamma[i] = std::stod(cell, &used);
      if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw NegotiationError(ErrorCode::kBadConfig, "bad weight: " + cell);
    }
    ++i;
  }
  if (i != 4) throw NegotiationError(ErrorCode::kBadConfig, "expected 4 weights");
  w.validate();
  return w;
}

double combined(const RewardBreakdown& b, const RewardWeights& w) {
  const auto g = w.effective();
  return g[0] * b.r1 + g[1] * b.r2 + g[2] * b.r3 + g[3] * b.r4;
}

std::vector<double> normalize_batch(const std::vector<double>& values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(values.size(), 0.0);
  if (sd <= 1e-12 * std::max(1.0, std::fabs(mean))) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
  return out;
}

DialogueScore score_dialogue(const Dialogue& d, const IntentClassifier& clf,
                             const RewardWeights& w, Money seller_min) {
  const auto violations = validate_dialogue(d);
  if (!violations.empty()) {
    throw NegotiationError(ErrorCode::kInvalidDialogue,
                           "turn " + std::to_string(violations.front().turn) + ": " +
                               violations.front().rule);
  }
  DialogueScore score;
  std::optional<Money> first_quote, last_quote, last_offer;
  std::map<std::string, std::vector<std::string>> said;
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    const DialogueTurn& t = d.turns[i];
    if (t.speaker == Speaker::kCustomer) {
      if (t.price_offer && t.intent.contains(Intent::kNegotiatePriceDecrease)) {
        last_offer = t.price_offer;
      }
      continue;
    }
    if (t.price_offer) {
      if (!first_quote) first_quote = t.price_offer;
      last_quote = t.price_offer;
    }
    RewardBreakdown b;
    b.r1 = clf.class_index(t.intent) ? clf.probability(t.text, t.intent) : 0.0;
    auto& prior = said[t.intent.name()];
    b.r4 = r4_interactiveness(t.text, prior);
    prior.push_back(t.text);
    score.turns.push_back(b);
    score.turn_index.push_back(i);
  }
  if (score.turns.empty()) {
    throw NegotiationError(ErrorCode::kInvalidDialogue, "no agent turns");
  }
  RewardBreakdown& last = score.turns.back();
  const bool accepted = d.outcome.status == OutcomeStatus::kAccepted;
  const std::optional<Money> final_price = accepted ? d.outcome.final_price : last_quote;
  if (first_quote && final_price) last.r2 = r2_price_gap(*first_quote, *final_price);
  const std::optional<Money> buyer = accepted ? d.outcome.final_price : last_offer;
  if (buyer) {
    last.r3 = r3_negotiation_strategy(*buyer, seller_min,
                                      accepted ? Intent::kAccept : Intent::kReject);
  }
  double sum = 0.0;
  for (auto& b : score.turns) {
    b.total = combined(b, w);
    sum += b.total;
  }
  score.total = sum / static_cast<double>(score.turns.size());
  return score;
}

}  // namespace negotiation
