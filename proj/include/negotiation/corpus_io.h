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

#ifndef NEGOTIATION_CORPUS_IO_H_
#define NEGOTIATION_CORPUS_IO_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "json.hpp"
#include "negotiation/catalog.h"
#include "negotiation/dialogue.h"

namespace negotiation {

inline constexpr const char* kCorpusSchemaVersion = "1";

nlohmann::json to_json(const DialogueTurn& turn);
nlohmann::json to_json(const Dialogue& dialogue);

// Throw kSchemaViolation.
DialogueTurn turn_from_json(const nlohmann::json& j);
Dialogue dialogue_from_json(const nlohmann::json& j);

// One dialogue per line. Throws kSchemaViolation naming the 1-based line.
std::vector<Dialogue> parse_corpus(std::istream& in, const std::string& source = "<stream>");

// Both take a lock on the file (exclusive for writes, shared for reads).
// Throw kIoFailure.
void write_corpus(const std::vector<Dialogue>& corpus, const std::filesystem::path& path);
void append_dialogue(const Dialogue& dialogue, const std::filesystem::path& path);
std::vector<Dialogue> read_corpus(const std::filesystem::path& path);

// SHA-256 over the serialized lines.
std::string corpus_checksum(const std::vector<Dialogue>& corpus);

struct SplitRatios {
  double train = 0.80;
  double test = 0.12;
  double valid = 0.08;

  void validate() const;  // throws kBadRatios
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t valid = 0;

  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

// Largest-remainder rounding of n * ratios.
SplitCounts split_sizes(std::size_t n, const SplitRatios& ratios);

struct CorpusSplit {
  std::vector<Dialogue> train;
  std::vector<Dialogue> test;
  std::vector<Dialogue> valid;
};

// Seeded shuffle, then contiguous partition.
CorpusSplit split_corpus(const std::vector<Dialogue>& corpus, const SplitRatios& ratios,
                         std::uint64_t seed);

struct CorpusManifest {
  std::string version = kCorpusSchemaVersion;
  std::uint64_t seed = 0;
  SplitRatios ratios;
  SplitCounts counts;
  std::string catalog_checksum;
  std::string corpus_checksum;

  nlohmann::json to_json() const;
  static CorpusManifest from_json(const nlohmann::json& j);  // throws kSchemaViolation
  std::string checksum() const;
};

// Writes train/test/valid .jsonl files and manifest.json under `dir`.
CorpusManifest write_split_corpus(const std::vector<Dialogue>& corpus, const SplitRatios& ratios,
                                  std::uint64_t seed, const Catalog& catalog,
                                  const std::filesystem::path& dir);

CorpusManifest read_manifest(const std::filesystem::path& path);

}  // namespace negotiation

#endif  // NEGOTIATION_CORPUS_IO_H_
