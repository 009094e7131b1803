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

#include "negotiation/service.h"

#include <openssl/rand.h>

#include <algorithm>
#include <cstdio>
#include <regex>
#include <set>

#define CPPHTTPLIB_LISTEN_BACKLOG 256
#include "httplib.h"
#include "negotiation/corpus_io.h"
#include "negotiation/error.h"
#include "negotiation/hashing.h"
#include "negotiation/log.h"

namespace negotiation {
namespace {

using I = Intent;
using json = nlohmann::json;

[[noreturn]] void fail(ErrorCode code, const std::string& detail) {
  throw NegotiationError(code, detail);
}

std::string random_id() {
  unsigned char bytes[16];
  if (RAND_bytes(bytes, sizeof bytes) != 1) fail(ErrorCode::kIoFailure, "no randomness available");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char b : bytes) {
    out += hex[b >> 4];
    out += hex[b & 15];
  }
  return out;
}

std::string_view status_name(DealStatus s) {
  switch (s) {
    case DealStatus::kOpen: return "open";
    case DealStatus::kAccepted: return "accepted";
    case DealStatus::kRejected: return "rejected";
  }
  return "open";
}

json snapshot_json(const DealState& s) {
  json active = json::array();
  for (const auto& p : s.bundle.items) {
    if (s.bundle.is_active(p.id)) active.push_back(p.id);
  }
  return {{"seller_price", s.seller_price},
          {"buyer_price", s.buyer_has_offered ? json(s.buyer_price) : json(nullptr)},
          {"list_price", s.list_price()},
          {"active", active},
          {"status", status_name(s.status)},
          {"t", s.t},
          {"price_rounds_used", s.price_rounds_used},
          {"d", s.d}};
}

NegotiationConfig apply_overrides(NegotiationConfig config, const json& overrides) {
  if (overrides.is_null()) return config;
  if (!overrides.is_object()) fail(ErrorCode::kBadConfig, "config must be an object");
  try {
    for (const auto& [key, value] : overrides.items()) {
      if (key == "k_seller") {
        config.k_seller = value.get<double>();
      } else if (key == "k_buyer") {
        config.k_buyer = value.get<double>();
      } else if (key == "tol") {
        config.tol = value.get<double>();
      } else if (key == "d") {
        config.d = value.get<int>();
      } else if (key == "max_turns") {
        config.max_turns = value.get<int>();
      } else {
        fail(ErrorCode::kBadConfig, "unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kBadConfig, e.what());
  }
  config.validate();
  return config;
}

std::set<std::string> words(const std::string& text) {
  const auto toks = tokenize(text);
  return {toks.begin(), toks.end()};
}

// Items the text names, matched on the id or any longer word of the name.
std::vector<const Product*> mentioned_items(const Bundle& bundle, const std::string& text) {
  const auto said = words(text);
  std::vector<const Product*> out;
  for (const auto& p : bundle.items) {
    if (p.kind == ProductKind::kMain) continue;
    bool hit = said.count(p.id) > 0;
    for (const auto& w : tokenize(p.name)) hit = hit || (w.size() >= 4 && said.count(w) > 0);
    if (hit) out.push_back(&p);
  }
  return out;
}

std::optional<Money> price_in_text(const std::string& text) {
  const auto dollars = price_mentions(text);
  if (!dollars.empty()) return dollars.front();
  static const std::regex bare(R"((\d{2,}))");
  std::smatch m;
  if (std::regex_search(text, m, bare)) return std::stoll(m[1].str());
  return std::nullopt;
}

std::vector<BundleOp> parse_ops(const json& j) {
  std::vector<BundleOp> ops;
  if (j.is_null()) return ops;
  try {
    for (const auto& op : j) {
      const auto kind = op.at("op").get<std::string>();
      const auto id = op.at("id").get<std::string>();
      if (kind == "add") {
        ops.push_back(BundleOp::add(id));
      } else if (kind == "remove") {
        ops.push_back(BundleOp::remove(id));
      } else {
        fail(ErrorCode::kIllegalIntent, "unknown op '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kSchemaViolation, e.what());
  }
  return ops;
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownSession:
    case ErrorCode::kUnknownBundle: return 404;
    case ErrorCode::kTurnInProgress: return 409;
    case ErrorCode::kSessionClosed: return 410;
    case ErrorCode::kBadConfig:
    case ErrorCode::kSchemaViolation:
    case ErrorCode::kUnknownIntent: return 400;
    case ErrorCode::kIoFailure: return 500;
    default: return 422;
  }
}

json error_body(const NegotiationError& e) {
  return {{"error", std::string(error_code_name(e.code()))}, {"detail", e.detail()}};
}

struct SessionManager::Session {
  std::string id;
  std::mutex mutex;  // one writer per session
  DealState state;
  std::vector<SkeletonTurn> skeleton;
  Dialogue transcript;
  std::unique_ptr<AgentStrategy> agent;
  std::string agent_kind;
  Rng rng;
  Clock::time_point last_active;
  bool closed = false;
  json final_dialogue;

  std::mutex event_mutex;
  std::condition_variable event_cv;
  std::vector<json> events;
  bool events_closed = false;

  void publish(json event) {
    {
      std::lock_guard lk(event_mutex);
      event["seq"] = events.size();
      events.push_back(std::move(event));
    }
    event_cv.notify_all();
  }
};

SessionManager::SessionManager(ServiceOptions options) : options_(std::move(options)) {
  options_.config.validate();
  options_.scenario.validate();
  options_.table.validate();
}

SessionManager::~SessionManager() = default;

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::shared_lock lk(registry_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::kUnknownSession, "no session '" + id + "'");
  return it->second;
}

json SessionManager::create_session(const json& request) {
  if (!request.is_object() || !request.contains("bundle_id") || !request["bundle_id"].is_string()) {
    fail(ErrorCode::kBadConfig, "bundle_id is required");
  }
  const Bundle bundle = options_.catalog.bundle_for(request["bundle_id"].get<std::string>());
  const NegotiationConfig config =
      apply_overrides(options_.config, request.value("config", json(nullptr)));
  const std::string agent = request.value("agent", std::string("rule"));

  auto s = std::make_shared<Session>();
  if (agent == "rule") {
    s->agent = std::make_unique<RuleAgent>(options_.table);
    s->agent_kind = "rule";
  } else if (agent == "policy") {
    if (!options_.policy) fail(ErrorCode::kBadConfig, "no policy loaded");
    s->agent = std::make_unique<PolicyAgent>(*options_.policy);
    s->agent_kind = "policy:v" + std::to_string(options_.policy->version);
  } else {
    fail(ErrorCode::kBadConfig, "agent must be rule or policy");
  }
  s->id = random_id();
  s->rng.seed(derive_seed(options_.seed, counter_++));
  s->state = open_scenario(bundle, config, options_.scenario, s->rng);
  s->transcript.id = s->id;
  s->transcript.bundle = bundle;
  s->last_active = options_.now();
  json out = {{"id", s->id},
              {"bundle", to_json(bundle)},
              {"agent", s->agent_kind},
              {"price", s->state.seller_price},
              {"snapshot", snapshot_json(s->state)}};
  {
    std::unique_lock lk(registry_mutex_);
    sessions_[s->id] = s;
  }
  log_message(LogLevel::kInfo, "session " + s->id + " opened on " + bundle.id);
  return out;
}

json SessionManager::post_turn(const std::string& id, const json& request) {
  auto sp = find(id);
  Session& s = *sp;
  std::unique_lock lk(s.mutex, std::try_to_lock);
  if (!lk.owns_lock()) fail(ErrorCode::kTurnInProgress, "the agent is still answering");
  if (s.closed) fail(ErrorCode::kSessionClosed, "session " + id + " is closed");
  if (!request.is_object()) fail(ErrorCode::kSchemaViolation, "turn must be an object");

  // Work out the customer's move.
  CustomerMove cm;
  std::string text = request.value("text", std::string());
  std::optional<double> confidence;
  std::vector<BundleOp> ops = parse_ops(request.value("ops", json(nullptr)));
  std::optional<Money> price;
  if (request.contains("price") && !request["price"].is_null()) {
    if (!request["price"].is_number_integer()) fail(ErrorCode::kSchemaViolation, "price must be an integer");
    price = request["price"].get<Money>();
  }
  if (request.contains("intent")) {
    try {
      cm.intent = CompositeIntent::parse(request["intent"].get<std::string>());
    } catch (const NegotiationError& e) {
      fail(ErrorCode::kIllegalIntent, e.detail());
    } catch (const json::exception& e) {
      fail(ErrorCode::kSchemaViolation, e.what());
    }
  } else if (!text.empty()) {
    if (!options_.classifier) {
      fail(ErrorCode::kLowConfidence, "free text is not supported; send a structured intent");
    }
    const auto p = options_.classifier->classify(text);
    confidence = p.confidence;
    if (p.confidence < options_.min_confidence) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f", p.confidence);
      fail(ErrorCode::kLowConfidence, "best guess " + p.label + " at " + buf +
                                          "; send a structured intent");
    }
    cm.intent = CompositeIntent::parse(p.label);
    if (!price) price = price_in_text(text);
    if (ops.empty()) {
      const bool add = cm.intent.contains(I::kNegotiateAddX);
      const bool remove = cm.intent.contains(I::kNegotiateRemoveX);
      for (const Product* item : mentioned_items(s.state.bundle, text)) {
        const bool active = s.state.bundle.is_active(item->id);
        if (remove && active) ops.push_back(BundleOp::remove(item->id));
        if (add && !active) ops.push_back(BundleOp::add(item->id));
        if (!ops.empty()) break;
      }
    }
  } else {
    fail(ErrorCode::kSchemaViolation, "turn needs text or an intent");
  }

  if (s.skeleton.empty() && !cm.intent.contains(I::kGreet)) {
    try {
      cm.intent = cm.intent.with_prefix(I::kGreet);
    } catch (const NegotiationError& e) {
      fail(ErrorCode::kIllegalIntent, e.detail());
    }
  }
  if (!customer_may_say(s.state, s.skeleton, cm.intent)) {
    fail(ErrorCode::kIllegalIntent, cm.intent.name() + " is not allowed at this point");
  }
  if (cm.intent.contains(I::kNegotiatePriceDecrease)) {
    if (!price || *price <= 0) fail(ErrorCode::kIllegalIntent, "a price offer needs a positive price");
    cm.offer = price;
  }
  if (cm.intent.contains(I::kAccept)) cm.offer = s.state.seller_price;
  const bool wants_add = cm.intent.contains(I::kNegotiateAddX);
  const bool wants_remove = cm.intent.contains(I::kNegotiateRemoveX);
  for (const auto& op : ops) {
    const bool ok = op.kind == BundleOp::Kind::kAdd ? wants_add : wants_remove;
    if (!ok) fail(ErrorCode::kIllegalIntent, "bundle op does not match the intent");
  }
  auto has_kind = [&](BundleOp::Kind k) {
    return std::any_of(ops.begin(), ops.end(), [&](const BundleOp& o) { return o.kind == k; });
  };
  if ((wants_add && !has_kind(BundleOp::Kind::kAdd)) ||
      (wants_remove && !has_kind(BundleOp::Kind::kRemove))) {
    fail(ErrorCode::kIllegalIntent, "say which item to add or remove");
  }
  cm.ops = ops;
  if (cm.intent.contains(I::kAsk) || cm.intent.contains(I::kAskClarification)) {
    const auto items = mentioned_items(s.state.bundle, text);
    const Product& topic = items.empty() ? s.state.bundle.main_product() : *items.front();
    cm.topic_item = topic.id;
    cm.topic_feature = topic.features.empty() ? "details" : topic.features.front();
  }

  RecordedTurn ct;
  DialogueTurn customer_turn;
  try {
    ct = record_customer_turn(s.state, cm);
    customer_turn.speaker = Speaker::kCustomer;
    customer_turn.intent = ct.turn.intent;
    customer_turn.price_offer = ct.turn.price_offer;
    customer_turn.bundle_ops = ct.turn.bundle_ops;
    customer_turn.text = text.empty() ? realize(ct.turn, s.state, s.state.bundle, s.rng) : text;
  } catch (const NegotiationError& e) {
    fail(ErrorCode::kIllegalIntent, e.detail());
  }
  auto turns = s.transcript.turns;
  turns.push_back(customer_turn);
  if (const auto v = validate_prefix(s.transcript.bundle, turns); !v.empty()) {
    fail(ErrorCode::kIllegalIntent, v.front().rule);
  }

  s.skeleton.push_back(ct.turn);
  s.transcript.turns.push_back(customer_turn);
  s.state = ct.after;
  s.last_active = options_.now();
  s.publish({{"type", "turn"}, {"turn", to_json(customer_turn)}});

  json out = {{"customer_turn", to_json(customer_turn)}, {"agent_turn", nullptr}};
  if (confidence) out["confidence"] = *confidence;
  if (cm.intent.contains(I::kReject) || cm.intent.contains(I::kAcknowledge)) {
    finish(s, false);
  } else {
    const AgentMove am = s.agent->respond(s.state, cm, s.rng);
    RecordedTurn at = record_agent_turn(s.state, cm, am);
    DialogueTurn agent_turn;
    agent_turn.speaker = Speaker::kAgent;
    agent_turn.intent = at.turn.intent;
    agent_turn.price_offer = at.turn.price_offer;
    agent_turn.bundle_ops = at.turn.bundle_ops;
    agent_turn.text = realize(at.turn, s.state, s.state.bundle, s.rng);
    s.skeleton.push_back(at.turn);
    s.transcript.turns.push_back(agent_turn);
    s.state = at.after;
    s.publish({{"type", "turn"}, {"turn", to_json(agent_turn)}});
    out["agent_turn"] = to_json(agent_turn);
    if (am.action == AgentAction::kReject || am.action == AgentAction::kAcknowledge) {
      finish(s, false);
    }
  }
  out["snapshot"] = snapshot_json(s.state);
  out["closed"] = s.closed;
  return out;
}

json SessionManager::finish(Session& s, bool abandoned) {
  if (s.closed) return s.final_dialogue;
  if (abandoned) {
    // An agent Accept stands; anything still open becomes a Reject.
    CustomerMove cm;
    if (!s.state.is_open() && s.state.status == DealStatus::kAccepted) {
      cm.intent = {I::kAcknowledge};
    } else if (s.skeleton.empty()) {
      cm.intent = {I::kGreet, I::kReject};
    } else {
      cm.intent = {I::kReject};
    }
    if (s.state.is_open() || cm.intent == CompositeIntent{I::kAcknowledge}) {
      RecordedTurn ct = record_customer_turn(s.state, cm);
      DialogueTurn t;
      t.speaker = Speaker::kCustomer;
      t.intent = ct.turn.intent;
      t.price_offer = ct.turn.price_offer;
      t.text = realize(ct.turn, s.state, s.state.bundle, s.rng);
      s.skeleton.push_back(ct.turn);
      s.transcript.turns.push_back(t);
      s.state = ct.after;
      s.publish({{"type", "turn"}, {"turn", to_json(t)}});
    }
  }
  if (s.state.status == DealStatus::kAccepted) {
    s.transcript.outcome = {OutcomeStatus::kAccepted, s.state.final_price};
  } else {
    s.transcript.outcome = {OutcomeStatus::kRejected, std::nullopt};
  }
  if (const auto v = validate_dialogue(s.transcript); !v.empty()) {
    log_message(LogLevel::kWarn, "session " + s.id + " closed with an invalid dialogue: " +
                                     v.front().rule);
  }
  if (!options_.persist_path.empty()) {
    try {
      append_dialogue(s.transcript, options_.persist_path);
    } catch (const NegotiationError& e) {
      log_message(LogLevel::kError, "could not persist session " + s.id + ": " + e.detail());
    }
  }
  s.closed = true;
  s.final_dialogue = to_json(s.transcript);
  s.publish({{"type", "closed"}, {"dialogue", s.final_dialogue}});
  {
    std::lock_guard lk(s.event_mutex);
    s.events_closed = true;
  }
  s.event_cv.notify_all();
  log_message(LogLevel::kInfo, "session " + s.id + " closed");
  return s.final_dialogue;
}

json SessionManager::get_session(const std::string& id) {
  auto sp = find(id);
  std::lock_guard lk(sp->mutex);
  json turns = json::array();
  for (const auto& t : sp->transcript.turns) turns.push_back(to_json(t));
  return {{"id", sp->id},
          {"agent", sp->agent_kind},
          {"bundle", to_json(sp->transcript.bundle)},
          {"turns", turns},
          {"snapshot", snapshot_json(sp->state)},
          {"closed", sp->closed}};
}

json SessionManager::close_session(const std::string& id) {
  auto sp = find(id);
  std::lock_guard lk(sp->mutex);
  return finish(*sp, true);
}

std::size_t SessionManager::expire_idle() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::shared_lock lk(registry_mutex_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  const auto now = options_.now();
  std::size_t closed = 0;
  std::vector<std::string> evict;
  for (const auto& s : all) {
    std::unique_lock lk(s->mutex, std::try_to_lock);
    if (!lk.owns_lock() || now - s->last_active <= options_.expiry) continue;
    if (s->closed) {
      evict.push_back(s->id);
    } else {
      finish(*s, true);
      s->last_active = now;
      ++closed;
    }
  }
  std::unique_lock lk(registry_mutex_);
  for (const auto& id : evict) sessions_.erase(id);
  return closed;
}

std::size_t SessionManager::close_all() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::shared_lock lk(registry_mutex_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  std::size_t closed = 0;
  for (const auto& s : all) {
    std::lock_guard lk(s->mutex);
    if (!s->closed) {
      finish(*s, true);
      ++closed;
    }
  }
  return closed;
}

std::vector<json> SessionManager::wait_events(const std::string& id, std::size_t from,
                                              std::chrono::milliseconds wait, bool& closed) {
  auto sp = find(id);
  std::unique_lock lk(sp->event_mutex);
  sp->event_cv.wait_for(lk, wait, [&] { return sp->events.size() > from || sp->events_closed; });
  std::vector<json> out;
  for (std::size_t i = from; i < sp->events.size(); ++i) out.push_back(sp->events[i]);
  closed = sp->events_closed;
  return out;
}

std::size_t SessionManager::open_sessions() const {
  std::shared_lock lk(registry_mutex_);
  std::size_t n = 0;
  for (const auto& [id, s] : sessions_) {
    std::lock_guard slk(s->mutex);
    n += !s->closed;
  }
  return n;
}

// ---- HTTP ----

struct NegotiationServer::Impl {
  std::shared_ptr<SessionManager> sessions;
  httplib::Server server;
  std::atomic<bool> stopping{false};
  std::mutex sweep_mutex;
  std::condition_variable sweep_cv;

  template <class Fn>
  void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const NegotiationError& e) {
      res.status = http_status(e.code());
      res.set_content(error_body(e).dump(), "application/json");
    } catch (const json::exception& e) {
      const NegotiationError err(ErrorCode::kSchemaViolation, e.what());
      res.status = 400;
      res.set_content(error_body(err).dump(), "application/json");
    }
  }

  static json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::exception& e) {
      fail(ErrorCode::kSchemaViolation, std::string("request body: ") + e.what());
    }
  }

  void routes() {
    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"status", "ok"}, {"open_sessions", sessions->open_sessions()}}.dump(),
                      "application/json");
    });
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        res.status = 201;
        res.set_content(sessions->create_session(body_of(req)).dump(), "application/json");
      });
    });
    server.Post(R"(/sessions/([^/]+)/turns)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    res.set_content(sessions->post_turn(req.matches[1], body_of(req)).dump(),
                                    "application/json");
                  });
                });
    server.Get(R"(/sessions/([^/]+)/events)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 guarded(res, [&] { stream_events(req.matches[1], req, res); });
               });
    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        res.set_content(sessions->get_session(req.matches[1]).dump(), "application/json");
      });
    });
    server.Delete(R"(/sessions/([^/]+))",
                  [this](const httplib::Request& req, httplib::Response& res) {
                    guarded(res, [&] {
                      res.set_content(sessions->close_session(req.matches[1]).dump(),
                                      "application/json");
                    });
                  });
  }

  void stream_events(const std::string& id, const httplib::Request& req,
                     httplib::Response& res) {
    bool closed = false;
    sessions->wait_events(id, 0, std::chrono::milliseconds(0), closed);  // 404 check
    std::size_t from = 0;
    if (req.has_header("Last-Event-ID")) {
      from = std::stoul(req.get_header_value("Last-Event-ID")) + 1;
    }
    auto next = std::make_shared<std::size_t>(from);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [this, id, next](std::size_t, httplib::DataSink& sink) {
          bool done = false;
          std::vector<json> events;
          try {
            events = sessions->wait_events(id, *next, std::chrono::milliseconds(500), done);
          } catch (const NegotiationError&) {
            done = true;
          }
          for (const auto& e : events) {
            const std::string frame = "id: " + std::to_string(*next) + "\nevent: " +
                                      e.at("type").get<std::string>() + "\ndata: " + e.dump() +
                                      "\n\n";
            if (!sink.write(frame.data(), frame.size())) return false;
            ++*next;
          }
          if (events.empty() && !done) {
            static const std::string ping = ": ping\n\n";
            if (!sink.is_writable() || !sink.write(ping.data(), ping.size())) return false;
          }
          if (done || stopping) {
            sink.done();
            return false;
          }
          return true;
        });
  }
};

NegotiationServer::NegotiationServer(std::shared_ptr<SessionManager> sessions)
    : impl_(std::make_unique<Impl>()) {
  impl_->sessions = std::move(sessions);
  impl_->server.new_task_queue = [] { return new httplib::ThreadPool(32); };
  impl_->routes();
}

NegotiationServer::~NegotiationServer() { stop(); }

int NegotiationServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                              : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) {
    throw NegotiationError(ErrorCode::kIoFailure,
                           "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void NegotiationServer::run(std::chrono::milliseconds sweep) {
  std::thread sweeper([this, sweep] {
    std::unique_lock lk(impl_->sweep_mutex);
    while (!impl_->stopping) {
      impl_->sweep_cv.wait_for(lk, sweep, [this] { return impl_->stopping.load(); });
      if (impl_->stopping) break;
      lk.unlock();
      const std::size_t n = impl_->sessions->expire_idle();
      if (n > 0) log_message(LogLevel::kInfo, "expired " + std::to_string(n) + " idle sessions");
      lk.lock();
    }
  });
  impl_->server.listen_after_bind();
  {
    std::lock_guard lk(impl_->sweep_mutex);
    impl_->stopping = true;
  }
  impl_->sweep_cv.notify_all();
  sweeper.join();
}

void NegotiationServer::stop() {
  if (!impl_) return;
  {
    std::lock_guard lk(impl_->sweep_mutex);
    impl_->stopping = true;
  }
  impl_->sweep_cv.notify_all();
  const std::size_t n = impl_->sessions->close_all();
  if (n > 0) log_message(LogLevel::kInfo, "closed " + std::to_string(n) + " sessions on shutdown");
  impl_->server.stop();
}

}  // namespace negotiation
