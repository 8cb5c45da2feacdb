// Copyright 2026 The litebound Authors
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

#ifndef LITEBOUND_LOG_HPP
#define LITEBOUND_LOG_HPP

#include <functional>
#include <iostream>
#include <string>

namespace litebound::log {

enum class Level { info, warning };

using Sink = std::function<void(Level, const std::string&)>;

inline Sink default_sink() {
  return [](Level level, const std::string& msg) {
    std::cerr << (level == Level::warning ? "warning: " : "") << msg << '\n';
  };
}

inline Sink& sink() {
  static Sink s = default_sink();
  return s;
}

/// Replaces the sink; an empty sink restores the stderr default.
inline void set_sink(Sink s) { sink() = s ? std::move(s) : default_sink(); }
inline void info(const std::string& msg) { sink()(Level::info, msg); }
inline void warn(const std::string& msg) { sink()(Level::warning, msg); }

}  // namespace litebound::log

#endif  // LITEBOUND_LOG_HPP
