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

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.h"
#include "negotiation/corpus_io.h"
#include "negotiation/error.h"
#include "negotiation/flow.h"
#include "negotiation/realization.h"

namespace negotiation {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("negotiation-io-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::vector<Dialogue> realized(std::size_t n, std::uint64_t seed) {
  const auto skeletons = generate_corpus(builtin_catalog(), n, NegotiationConfig{}, seed);
  Rng rng(seed);
  std::vector<Dialogue> out;
  for (const auto& sk : skeletons) out.push_back(realize_skeleton(sk, rng));
  return out;
}

std::vector<Dialogue> numbered(std::size_t n) {
  std::vector<Dialogue> out(n, testing::golden_tablet_dialogue());
  for (std::size_t i = 0; i < n; ++i) out[i].id = "d" + std::to_string(i);
  return out;
}

std::set<std::string> ids(const std::vector<Dialogue>& v) {
  std::set<std::string> s;
  for (const auto& d : v) s.insert(d.id);
  return s;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const NegotiationError& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kBadConfig;
}

TEST_CASE("hundred dialogues survive a round trip") {
  TempDir dir;
  const auto corpus = realized(100, 3);
  write_corpus(corpus, dir.path / "c.jsonl");
  CHECK(read_corpus(dir.path / "c.jsonl") == corpus);
}

TEST_CASE("golden dialogue serializes to the line schema and re-validates") {
  const Dialogue d = testing::golden_tablet_dialogue();
  const auto j = to_json(d);
  CHECK(j.at("bundle").at("active").size() == 3);
  CHECK(j.at("turns").at(0).at("speaker") == "customer");
  CHECK(j.at("turns").at(0).at("intents") == nlohmann::json({"Greet", "Ask"}));
  CHECK(j.at("turns").at(0).at("price").is_null());
  CHECK(j.at("turns").at(2).at("ops") == nlohmann::json::parse(R"([{"op":"remove","id":"stylus"}])"));
  CHECK(j.at("outcome") == nlohmann::json::parse(R"({"status":"accepted","final_price":83300})"));
  const Dialogue back = dialogue_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back == d);
  CHECK(validate_dialogue(back).empty());
}

TEST_CASE("truncated line reports its line number") {
  const std::string good = to_json(testing::golden_tablet_dialogue()).dump();
  std::istringstream in(good + "\n" + good + "\n" + good.substr(0, good.size() / 2) + "\n");
  try {
    parse_corpus(in, "x.jsonl");
    FAIL("expected an error");
  } catch (const NegotiationError& e) {
    CHECK(e.code() == ErrorCode::kSchemaViolation);
    CHECK(e.detail().find("x.jsonl:3:") != std::string::npos);
  }
}

TEST_CASE("schema violations") {
  auto j = to_json(testing::golden_tablet_dialogue());
  SUBCASE("unknown speaker") { j["turns"][0]["speaker"] = "robot"; }
  SUBCASE("unknown intent") { j["turns"][0]["intents"] = {"Haggle"}; }
  SUBCASE("string price") { j["turns"][1]["price"] = "92800"; }
  SUBCASE("bad op") { j["turns"][2]["ops"][0]["op"] = "swap"; }
  SUBCASE("bad status") { j["outcome"]["status"] = "pending"; }
  SUBCASE("missing turns") { j.erase("turns"); }
  SUBCASE("unknown active item") { j["bundle"]["active"].push_back("ghost"); }
  CHECK(code_of([&] { dialogue_from_json(j); }) == ErrorCode::kSchemaViolation);
}

TEST_CASE("blank lines are skipped") {
  const std::string good = to_json(testing::golden_tablet_dialogue()).dump();
  std::istringstream in("\n" + good + "\n\n");
  CHECK(parse_corpus(in).size() == 1);
}

TEST_CASE("missing file is an I/O failure") {
  CHECK(code_of([] { read_corpus("/nonexistent/dir/c.jsonl"); }) == ErrorCode::kIoFailure);
  CHECK(code_of([] { write_corpus({}, "/nonexistent/dir/c.jsonl"); }) == ErrorCode::kIoFailure);
}

TEST_CASE("append adds one line per dialogue") {
  TempDir dir;
  const auto corpus = numbered(3);
  for (const auto& d : corpus) append_dialogue(d, dir.path / "a.jsonl");
  CHECK(read_corpus(dir.path / "a.jsonl") == corpus);
}

TEST_CASE("overwrite truncates the previous content") {
  TempDir dir;
  write_corpus(numbered(5), dir.path / "c.jsonl");
  write_corpus(numbered(2), dir.path / "c.jsonl");
  CHECK(read_corpus(dir.path / "c.jsonl").size() == 2);
}

TEST_CASE("split sizes use largest remainders") {
  CHECK(split_sizes(4163, {}) == SplitCounts{3330, 500, 333});
  CHECK(split_sizes(10, {1.0, 0.0, 0.0}) == SplitCounts{10, 0, 0});
  CHECK(split_sizes(0, {}) == SplitCounts{0, 0, 0});
  for (std::size_t n : {1u, 7u, 99u, 1001u}) {
    const auto c = split_sizes(n, {});
    CHECK(c.train + c.test + c.valid == n);
    CHECK(std::abs(static_cast<double>(c.train) - 0.8 * n) < 1.0);
    CHECK(std::abs(static_cast<double>(c.test) - 0.12 * n) < 1.0);
    CHECK(std::abs(static_cast<double>(c.valid) - 0.08 * n) < 1.0);
  }
}

TEST_CASE("split partitions the corpus deterministically") {
  const auto corpus = numbered(4163);
  const auto a = split_corpus(corpus, {}, 10);
  const auto b = split_corpus(corpus, {}, 10);
  CHECK(a.train.size() == 3330);
  CHECK(a.test.size() == 500);
  CHECK(a.valid.size() == 333);
  CHECK(ids(a.train) == ids(b.train));
  CHECK(ids(a.test) == ids(b.test));
  std::set<std::string> all = ids(a.train);
  for (const auto& part : {a.test, a.valid}) {
    for (const auto& d : part) CHECK(all.insert(d.id).second);
  }
  CHECK(all == ids(corpus));
  CHECK(ids(split_corpus(corpus, {}, 11).test) != ids(a.test));
}

TEST_CASE("all-train ratios") {
  const auto s = split_corpus(numbered(20), {1.0, 0.0, 0.0}, 1);
  CHECK(s.train.size() == 20);
  CHECK(s.test.empty());
  CHECK(s.valid.empty());
}

TEST_CASE("bad ratios") {
  CHECK(code_of([] { split_sizes(10, {0.5, 0.5, 0.5}); }) == ErrorCode::kBadRatios);
  CHECK(code_of([] { split_sizes(10, {1.2, -0.1, -0.1}); }) == ErrorCode::kBadRatios);
}

TEST_CASE("manifest is reproducible and matches the files") {
  TempDir a, b;
  const auto corpus = realized(60, 7);
  const auto ma = write_split_corpus(corpus, {}, 10, builtin_catalog(), a.path);
  const auto mb = write_split_corpus(corpus, {}, 10, builtin_catalog(), b.path);
  CHECK(ma.checksum() == mb.checksum());
  const auto loaded = read_manifest(a.path / "manifest.json");
  CHECK(loaded.checksum() == ma.checksum());
  CHECK(loaded.counts.train == read_corpus(a.path / "train.jsonl").size());
  CHECK(loaded.counts.test == read_corpus(a.path / "test.jsonl").size());
  CHECK(loaded.counts.valid == read_corpus(a.path / "valid.jsonl").size());
  CHECK(loaded.catalog_checksum == builtin_catalog().checksum());
  const auto other = write_split_corpus(corpus, {}, 11, builtin_catalog(), b.path);
  CHECK(other.checksum() != ma.checksum());
}

}  // namespace
}  // namespace negotiation
