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

#ifndef NEGOTIATION_LOG_H_
#define NEGOTIATION_LOG_H_

#include <string_view>

namespace negotiation {

enum class LogLevel { kDebug, kInfo, kWarn, kError, kOff };

void set_log_level(LogLevel level);
LogLevel log_level();

// Parses debug/info/warn/error/off. Throws kBadConfig.
LogLevel parse_log_level(std::string_view name);

// Writes one line to stderr when `level` is enabled. Thread-safe.
void log_message(LogLevel level, std::string_view message);

}  // namespace negotiation

#endif  // NEGOTIATION_LOG_H_
