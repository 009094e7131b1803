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

#ifndef NEGOTIATION_HASHING_H_
#define NEGOTIATION_HASHING_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace negotiation {

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// Mixes a master seed with a stream index so that parallel workers draw from
// independent, reproducible generators.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace negotiation

#endif  // NEGOTIATION_HASHING_H_
