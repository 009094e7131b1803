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

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "fixtures.h"
#include "httplib.h"
#include "negotiation/corpus_io.h"
#include "negotiation/policy.h"

extern char** environ;

namespace negotiation {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("negotiate-cli-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

const Scratch& scratch() {
  static const Scratch s;
  return s;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& arg) {
  std::string q = "'";
  for (char c : arg) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Run negotiate(const std::vector<std::string>& args) {
  static int n = 0;
  const std::string out = scratch() / ("out" + std::to_string(n));
  const std::string err = scratch() / ("err" + std::to_string(n++));
  std::string cmd = quote(NEGOTIATION_CLI_PATH);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " >" + quote(out) + " 2>" + quote(err);
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

TEST_CASE("help and bad flags") {
  const Run help = negotiate({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("generate") != std::string::npos);
  const Run bad = negotiate({"sweep", "--no-such-flag"});
  CHECK(bad.code != 0);
  CHECK(bad.err.find("Usage") != std::string::npos);
  CHECK(negotiate({}).code != 0);
}

TEST_CASE("generate is deterministic and writes splits") {
  const Run a = negotiate({"generate", "--n", "100", "--seed", "7", "--out", scratch() / "g1"});
  const Run b = negotiate({"generate", "--n", "100", "--seed", "7", "--out", scratch() / "g2"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out == b.out);
  for (const char* f : {"train.jsonl", "test.jsonl", "valid.jsonl", "manifest.json"}) {
    CHECK(slurp(scratch() / "g1/" + f) == slurp(scratch() / "g2/" + f));
  }
  const CorpusManifest m = read_manifest(scratch() / "g1/manifest.json");
  CHECK(m.counts.train == 80);
  CHECK(m.counts.test == 12);
  CHECK(m.counts.valid == 8);
  CHECK(json::parse(a.out).at("dialogues") == 100);
}

TEST_CASE("generate with a missing catalog is a configuration error") {
  CHECK(negotiate({"generate", "--catalog", scratch() / "absent.json", "--n", "5", "--out",
                   scratch() / "g3"})
            .code == 1);
  CHECK(negotiate({"generate", "--n", "5", "--out", scratch() / "g3", "--realize", "endpoint"})
            .code == 1);
}

TEST_CASE("generate falls back to templates when the endpoint is down") {
  const Run r = negotiate({"generate", "--n", "10", "--seed", "3", "--out", scratch() / "dead",
                           "--realize", "endpoint", "http://127.0.0.1:1/generate"});
  CHECK(r.code == 0);
  CHECK(r.err.find("W external generator failed") != std::string::npos);
  CHECK(r.err.find("external turns 0") != std::string::npos);
  CHECK(read_manifest(scratch() / "dead/manifest.json").counts.train == 8);
}

TEST_CASE("generate uses a live endpoint for turns it can serve") {
  httplib::Server stub;
  std::atomic<int> calls{0};
  stub.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const json body = json::parse(req.body);
    CHECK(body.at("prompt").get<std::string>().find("<start>") != std::string::npos);
    res.set_content(json{{"text", " Could you tell me a bit more about that?\nextra"}}.dump(),
                    "application/json");
  });
  const int port = stub.bind_to_any_port("127.0.0.1");
  std::thread t([&] { stub.listen_after_bind(); });
  const Run r = negotiate({"generate", "--n", "10", "--seed", "3", "--out", scratch() / "live",
                           "--realize", "endpoint",
                           "http://127.0.0.1:" + std::to_string(port) + "/generate"});
  stub.stop();
  t.join();
  CHECK(r.code == 0);
  CHECK(calls > 0);
  CHECK(r.err.find("external turns 0") == std::string::npos);
  const auto train = read_corpus(scratch() / "live/train.jsonl");
  const bool any_external = std::any_of(train.begin(), train.end(), [](const Dialogue& d) {
    return std::any_of(d.turns.begin(), d.turns.end(), [](const DialogueTurn& t) {
      return t.text == "Could you tell me a bit more about that?";
    });
  });
  CHECK(any_external);
}

TEST_CASE("sweep prints one row per cell and reruns identically") {
  const Run a = negotiate({"sweep", "--episodes", "60"});
  REQUIRE(a.code == 0);
  const auto rows = lines(a.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "k_buyer,k_seller,buyer_utility,seller_utility,accept_rate,stderr");
  CHECK(rows[1].rfind("0.2,0.8,", 0) == 0);
  CHECK(negotiate({"sweep", "--episodes", "60"}).out == a.out);
  CHECK(negotiate({"sweep", "--episodes", "0"}).code == 1);
  CHECK(negotiate({"sweep", "--grid", "0.2-0.8"}).code == 1);
  const Run one = negotiate({"sweep", "--grid", "0.4:0.6", "--episodes", "30"});
  CHECK(lines(one.out).size() == 2);
}

TEST_CASE("simulate writes per-episode rows") {
  const Run r = negotiate({"simulate", "--episodes", "5", "--no-score", "--seed", "4"});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == "episode,bundle,accepted,final_price,turns,buyer_utility,seller_utility,reward");
  CHECK(negotiate({"simulate", "--episodes", "5", "--no-score", "--seed", "4"}).out == r.out);
  CHECK(negotiate({"simulate", "--episodes", "0"}).code == 1);
}

TEST_CASE("score reports the golden trace") {
  const std::string trace = scratch() / "golden.jsonl";
  write_corpus({testing::golden_tablet_dialogue()}, trace);
  const Run r = negotiate({"score", "--in", trace, "--weights", "0.2,0.2,0.3,0.2", "--pmin",
                           "80000", "--classifier-examples", "2000"});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "id,agent_turns,r1,r2,r3,r4,total");
  std::vector<std::string> cells;
  std::stringstream ss(rows[1]);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  REQUIRE(cells.size() == 7);
  CHECK(cells[0] == "golden-tablet");
  CHECK(std::stod(cells[3]) == doctest::Approx(83300.0 / 92800.0).epsilon(1e-4));
  CHECK(std::stod(cells[4]) >= 0.0);

  const std::string empty = scratch() / "empty.jsonl";
  std::ofstream(empty).close();
  CHECK(negotiate({"score", "--in", empty}).code == 1);
  CHECK(negotiate({"score", "--in", scratch() / "missing.jsonl"}).code == 2);
  CHECK(negotiate({"score", "--in", trace, "--weights", "0.2,0.2"}).code == 1);
}

TEST_CASE("train writes a policy and a reproducible log") {
  const auto run = [](const std::string& tag) {
    return negotiate({"train", "--epochs", "2", "--batch", "16", "--imitation-dialogues", "200",
                      "--out", scratch() / ("policy" + tag + ".json"), "--log",
                      scratch() / ("log" + tag + ".csv")});
  };
  REQUIRE(run("a").code == 0);
  REQUIRE(run("b").code == 0);
  CHECK(slurp(scratch() / "loga.csv") == slurp(scratch() / "logb.csv"));
  CHECK(lines(slurp(scratch() / "loga.csv")).size() == 3);
  const PolicyParams p = PolicyParams::from_json(json::parse(slurp(scratch() / "policya.json")));
  CHECK(p.version == 2);
  CHECK(negotiate({"train", "--clip", "0"}).code == 1);
}

struct Served {
  pid_t pid = -1;
  int port = 0;
};

Served spawn_server(const std::vector<std::string>& extra, const std::string& out) {
  std::vector<std::string> args{NEGOTIATION_CLI_PATH, "--log-level", "warn", "serve", "--port",
                                "0", "--classifier-examples", "2000"};
  args.insert(args.end(), extra.begin(), extra.end());
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  Served s;
  REQUIRE(posix_spawn(&s.pid, argv[0], &actions, nullptr, argv.data(), environ) == 0);
  posix_spawn_file_actions_destroy(&actions);
  for (int i = 0; i < 300 && s.port == 0; ++i) {
    const std::string text = slurp(out);
    const auto colon = text.rfind(':');
    if (text.find("listening on") != std::string::npos && text.back() == '\n') {
      s.port = std::stoi(text.substr(colon + 1));
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  }
  return s;
}

int wait_exit(pid_t pid) {
  int status = 0;
  waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_CASE("serve answers health and persists sessions on SIGINT") {
  const std::string persisted = scratch() / "served.jsonl";
  const Served s = spawn_server({"--persist", persisted}, scratch() / "serve.out");
  REQUIRE(s.port > 0);
  httplib::Client c("127.0.0.1", s.port);
  auto health = c.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  auto created = c.Post("/sessions", R"({"bundle_id":"tablet"})", "application/json");
  REQUIRE(created);
  const std::string id = json::parse(created->body).at("id");
  auto turn = c.Post("/sessions/" + id + "/turns", R"({"intent":"Greet-Ask"})", "application/json");
  REQUIRE(turn);
  CHECK(turn->status == 200);
  kill(s.pid, SIGINT);
  CHECK(wait_exit(s.pid) == 0);
  const auto saved = read_corpus(persisted);
  REQUIRE(saved.size() == 1);
  CHECK(saved[0].id == id);
  CHECK(saved[0].outcome.status == OutcomeStatus::kRejected);
  CHECK(validate_dialogue(saved[0]).empty());
}

TEST_CASE("serve rejects a bad policy file") {
  const std::string bad = scratch() / "bad-policy.json";
  std::ofstream(bad) << "{\"feature_dim\": 3}";
  CHECK(negotiate({"serve", "--port", "0", "--policy", bad}).code == 1);
  CHECK(negotiate({"serve", "--port", "0", "--catalog", scratch() / "absent.json"}).code == 1);
}

}  // namespace
}  // namespace negotiation
