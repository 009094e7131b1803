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

#include "negotiation/corpus_io.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "negotiation/error.h"
#include "negotiation/hashing.h"

namespace negotiation {
namespace {

namespace fs = std::filesystem;

[[noreturn]] void schema(const std::string& what) {
  throw NegotiationError(ErrorCode::kSchemaViolation, what);
}

[[noreturn]] void io_error(const fs::path& path, const std::string& what) {
  throw NegotiationError(ErrorCode::kIoFailure,
                         path.string() + ": " + what + " (" + std::strerror(errno) + ")");
}

std::optional<Money> optional_money(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number_integer()) schema(std::string(key) + " must be an integer or null");
  return v.get<Money>();
}

nlohmann::json money_or_null(const std::optional<Money>& m) {
  return m ? nlohmann::json(*m) : nlohmann::json(nullptr);
}

// Owns a locked file descriptor.
class LockedFile {
 public:
  LockedFile(const fs::path& path, int flags, int lock) : path_(path) {
    fd_ = ::open(path.c_str(), flags | O_CLOEXEC, 0644);
    if (fd_ < 0) io_error(path, "cannot open");
    if (::flock(fd_, lock) != 0) {
      ::close(fd_);
      io_error(path, "cannot lock");
    }
  }
  ~LockedFile() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  LockedFile(const LockedFile&) = delete;
  LockedFile& operator=(const LockedFile&) = delete;

  void write_all(const std::string& data) {
    std::size_t done = 0;
    while (done < data.size()) {
      const ssize_t n = ::write(fd_, data.data() + done, data.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        io_error(path_, "write failed");
      }
      done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) io_error(path_, "fsync failed");
  }

  std::string read_all() {
    std::string out;
    char buf[1 << 16];
    while (true) {
      const ssize_t n = ::read(fd_, buf, sizeof buf);
      if (n < 0) {
        if (errno == EINTR) continue;
        io_error(path_, "read failed");
      }
      if (n == 0) break;
      out.append(buf, static_cast<std::size_t>(n));
    }
    return out;
  }

  void truncate() {
    if (::ftruncate(fd_, 0) != 0) io_error(path_, "truncate failed");
  }

 private:
  fs::path path_;
  int fd_ = -1;
};

std::string serialize(const std::vector<Dialogue>& corpus) {
  std::string out;
  for (const auto& d : corpus) {
    out += to_json(d).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const DialogueTurn& t) {
  nlohmann::json intents = nlohmann::json::array();
  for (Intent a : t.intent.atoms()) intents.push_back(std::string(intent_name(a)));
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : t.bundle_ops) {
    ops.push_back({{"op", op.kind == BundleOp::Kind::kAdd ? "add" : "remove"}, {"id", op.id}});
  }
  return {{"speaker", std::string(speaker_name(t.speaker))},
          {"intents", intents},
          {"text", t.text},
          {"price", money_or_null(t.price_offer)},
          {"ops", ops}};
}

nlohmann::json to_json(const Dialogue& d) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : d.turns) turns.push_back(to_json(t));
  return {{"id", d.id},
          {"bundle", to_json(d.bundle)},
          {"turns", turns},
          {"outcome",
           {{"status", d.outcome.status == OutcomeStatus::kAccepted ? "accepted" : "rejected"},
            {"final_price", money_or_null(d.outcome.final_price)}}}};
}

DialogueTurn turn_from_json(const nlohmann::json& j) {
  try {
    DialogueTurn t;
    const std::string speaker = j.at("speaker").get<std::string>();
    if (speaker == "customer") {
      t.speaker = Speaker::kCustomer;
    } else if (speaker == "agent") {
      t.speaker = Speaker::kAgent;
    } else {
      schema("unknown speaker '" + speaker + "'");
    }
    std::vector<Intent> atoms;
    for (const auto& name : j.at("intents")) {
      const auto atom = parse_intent(name.get<std::string>());
      if (!atom) schema("unknown intent '" + name.get<std::string>() + "'");
      atoms.push_back(*atom);
    }
    try {
      t.intent = CompositeIntent(std::move(atoms));
    } catch (const NegotiationError& e) {
      schema(e.detail());
    }
    t.text = j.at("text").get<std::string>();
    t.price_offer = optional_money(j, "price");
    for (const auto& op : j.at("ops")) {
      const std::string kind = op.at("op").get<std::string>();
      const std::string id = op.at("id").get<std::string>();
      if (kind == "add") {
        t.bundle_ops.push_back(BundleOp::add(id));
      } else if (kind == "remove") {
        t.bundle_ops.push_back(BundleOp::remove(id));
      } else {
        schema("unknown op '" + kind + "'");
      }
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    schema(e.what());
  }
}

Dialogue dialogue_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) schema("dialogue must be an object");
    Dialogue d;
    d.id = j.at("id").get<std::string>();
    try {
      d.bundle = bundle_from_json(j.at("bundle"));
    } catch (const NegotiationError& e) {
      schema("bundle: " + e.detail());
    }
    for (const auto& t : j.at("turns")) d.turns.push_back(turn_from_json(t));
    const auto& outcome = j.at("outcome");
    const std::string status = outcome.at("status").get<std::string>();
    if (status == "accepted") {
      d.outcome.status = OutcomeStatus::kAccepted;
    } else if (status == "rejected") {
      d.outcome.status = OutcomeStatus::kRejected;
    } else {
      schema("unknown status '" + status + "'");
    }
    d.outcome.final_price = optional_money(outcome, "final_price");
    return d;
  } catch (const nlohmann::json::exception& e) {
    schema(e.what());
  }
}

std::vector<Dialogue> parse_corpus(std::istream& in, const std::string& source) {
  std::vector<Dialogue> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(dialogue_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      schema(source + ":" + std::to_string(number) + ": " + e.what());
    } catch (const NegotiationError& e) {
      schema(source + ":" + std::to_string(number) + ": " + e.detail());
    }
  }
  return out;
}

void write_corpus(const std::vector<Dialogue>& corpus, const fs::path& path) {
  const std::string data = serialize(corpus);
  LockedFile f(path, O_WRONLY | O_CREAT, LOCK_EX);
  f.truncate();
  f.write_all(data);
}

void append_dialogue(const Dialogue& dialogue, const fs::path& path) {
  LockedFile f(path, O_WRONLY | O_CREAT | O_APPEND, LOCK_EX);
  f.write_all(to_json(dialogue).dump() + "\n");
}

std::vector<Dialogue> read_corpus(const fs::path& path) {
  std::string data;
  {
    LockedFile f(path, O_RDONLY, LOCK_SH);
    data = f.read_all();
  }
  std::istringstream in(data);
  return parse_corpus(in, path.string());
}

std::string corpus_checksum(const std::vector<Dialogue>& corpus) {
  return sha256_hex(serialize(corpus));
}

void SplitRatios::validate() const {
  for (double r : {train, test, valid}) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw NegotiationError(ErrorCode::kBadRatios, "ratios must be non-negative");
    }
  }
  const double sum = train + test + valid;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw NegotiationError(ErrorCode::kBadRatios, "ratios must sum to 1, got " + std::to_string(sum));
  }
}

SplitCounts split_sizes(std::size_t n, const SplitRatios& ratios) {
  ratios.validate();
  const double share[3] = {ratios.train, ratios.test, ratios.valid};
  std::size_t count[3];
  double rem[3];
  std::size_t used = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = share[i] * static_cast<double>(n);
    count[i] = static_cast<std::size_t>(std::floor(exact));
    rem[i] = exact - static_cast<double>(count[i]);
    used += count[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++count[order[k % 3]];
  return {count[0], count[1], count[2]};
}

CorpusSplit split_corpus(const std::vector<Dialogue>& corpus, const SplitRatios& ratios,
                         std::uint64_t seed) {
  const SplitCounts sizes = split_sizes(corpus.size(), ratios);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  CorpusSplit out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& part = i < sizes.train ? out.train
                 : i < sizes.train + sizes.test ? out.test
                                                : out.valid;
    part.push_back(corpus[order[i]]);
  }
  return out;
}

nlohmann::json CorpusManifest::to_json() const {
  return {{"version", version},
          {"seed", seed},
          {"split_ratios", {ratios.train, ratios.test, ratios.valid}},
          {"counts", {{"train", counts.train}, {"test", counts.test}, {"valid", counts.valid}}},
          {"catalog_checksum", catalog_checksum},
          {"corpus_checksum", corpus_checksum}};
}

CorpusManifest CorpusManifest::from_json(const nlohmann::json& j) {
  try {
    CorpusManifest m;
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto r = j.at("split_ratios").get<std::vector<double>>();
    if (r.size() != 3) schema("split_ratios needs three entries");
    m.ratios = {r[0], r[1], r[2]};
    const auto& c = j.at("counts");
    m.counts = {c.at("train").get<std::size_t>(), c.at("test").get<std::size_t>(),
                c.at("valid").get<std::size_t>()};
    m.catalog_checksum = j.at("catalog_checksum").get<std::string>();
    m.corpus_checksum = j.at("corpus_checksum").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    schema(std::string("manifest: ") + e.what());
  }
}

std::string CorpusManifest::checksum() const { return sha256_hex(to_json().dump()); }

CorpusManifest write_split_corpus(const std::vector<Dialogue>& corpus, const SplitRatios& ratios,
                                  std::uint64_t seed, const Catalog& catalog,
                                  const fs::path& dir) {
  const CorpusSplit split = split_corpus(corpus, ratios, seed);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw NegotiationError(ErrorCode::kIoFailure, dir.string() + ": " + ec.message());
  write_corpus(split.train, dir / "train.jsonl");
  write_corpus(split.test, dir / "test.jsonl");
  write_corpus(split.valid, dir / "valid.jsonl");
  CorpusManifest m;
  m.seed = seed;
  m.ratios = ratios;
  m.counts = {split.train.size(), split.test.size(), split.valid.size()};
  m.catalog_checksum = catalog.checksum();
  m.corpus_checksum = corpus_checksum(corpus);
  LockedFile f(dir / "manifest.json", O_WRONLY | O_CREAT, LOCK_EX);
  f.truncate();
  f.write_all(m.to_json().dump(2) + "\n");
  return m;
}

CorpusManifest read_manifest(const fs::path& path) {
  std::string data;
  {
    LockedFile f(path, O_RDONLY, LOCK_SH);
    data = f.read_all();
  }
  try {
    return CorpusManifest::from_json(nlohmann::json::parse(data));
  } catch (const nlohmann::json::exception& e) {
    schema(path.string() + ": " + e.what());
  }
}

}  // namespace negotiation
