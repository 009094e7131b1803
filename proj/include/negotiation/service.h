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

#ifndef NEGOTIATION_SERVICE_H_
#define NEGOTIATION_SERVICE_H_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "negotiation/catalog.h"
#include "negotiation/error.h"
#include "negotiation/flow.h"
#include "negotiation/policy.h"
#include "negotiation/realization.h"
#include "negotiation/rewards.h"

namespace negotiation {

using Clock = std::chrono::steady_clock;

struct ServiceOptions {
  Catalog catalog = builtin_catalog();
  std::shared_ptr<const IntentClassifier> classifier;  // free-text turns need it
  std::optional<PolicyParams> policy;
  NegotiationConfig config;
  ScenarioConfig scenario;
  FlowPolicyTable table = FlowPolicyTable::uniform();
  std::filesystem::path persist_path;  // closed dialogues are appended here when set
  std::chrono::seconds expiry{30 * 60};
  double min_confidence = 0.4;
  std::uint64_t seed = 10;
  std::function<Clock::time_point()> now = [] { return Clock::now(); };
};

// HTTP status for an error code.
int http_status(ErrorCode code);

// {"error": code name, "detail": text}
nlohmann::json error_body(const NegotiationError& e);

// Thread-safe registry of live sessions. Requests and responses use the
// corpus line schema for turns; every method throws NegotiationError.
class SessionManager {
 public:
  explicit SessionManager(ServiceOptions options);
  ~SessionManager();

  // {"bundle_id", "config"?: {k_seller, k_buyer, tol, d, max_turns}, "agent"?: "rule"|"policy"}
  nlohmann::json create_session(const nlohmann::json& request);

  // {"text"} or {"intent", "price"?, "ops"?, "text"?}. Returns the recorded
  // customer turn, the agent turn (null once closed) and the deal snapshot.
  nlohmann::json post_turn(const std::string& id, const nlohmann::json& request);

  nlohmann::json get_session(const std::string& id);

  // Idempotent; returns the final dialogue.
  nlohmann::json close_session(const std::string& id);

  // Closes sessions idle longer than the expiry. Returns how many closed.
  std::size_t expire_idle();

  // Closes every open session (shutdown path).
  std::size_t close_all();

  // Blocks until events past `from` exist, the session closes or `wait`
  // elapses. `closed` reports whether no more events will follow.
  std::vector<nlohmann::json> wait_events(const std::string& id, std::size_t from,
                                          std::chrono::milliseconds wait, bool& closed);

  std::size_t open_sessions() const;
  const ServiceOptions& options() const { return options_; }

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  nlohmann::json finish(Session& s, bool abandoned);

  ServiceOptions options_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> counter_{0};
};

// HTTP front end: POST /sessions, POST /sessions/{id}/turns,
// GET /sessions/{id}, DELETE /sessions/{id}, GET /sessions/{id}/events (SSE)
// and GET /health.
class NegotiationServer {
 public:
  explicit NegotiationServer(std::shared_ptr<SessionManager> sessions);
  ~NegotiationServer();

  // Port 0 picks a free port. Returns the bound port; throws kIoFailure.
  int bind(const std::string& host, int port);

  // Serves until stop(); also sweeps idle sessions every `sweep` interval.
  void run(std::chrono::milliseconds sweep = std::chrono::seconds(30));

  // Stops listening and closes every open session.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace negotiation

#endif  // NEGOTIATION_SERVICE_H_
