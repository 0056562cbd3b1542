/*
 * Copyright 2026 The surveyel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "surveyel/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string_view>

namespace surveyel::log {
namespace {

Level from_env() {
    const char* raw = std::getenv("SURVEYEL_LOG");
    if (raw == nullptr) {
        return Level::kWarn;
    }
    std::string_view v(raw);
    if (v == "quiet" || v == "0") return Level::kQuiet;
    if (v == "info" || v == "2") return Level::kInfo;
    if (v == "debug" || v == "3") return Level::kDebug;
    return Level::kWarn;
}

std::atomic<int>& current() {
    static std::atomic<int> lvl{static_cast<int>(from_env())};
    return lvl;
}

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

void emit(Level at, const char* tag, const std::string& message) {
    if (static_cast<int>(at) > current().load()) {
        return;
    }
    std::lock_guard<std::mutex> lock(sink_mutex());
    std::cerr << "[surveyel " << tag << "] " << message << '\n';
}

}  // namespace

Level level() { return static_cast<Level>(current().load()); }
void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

void warn(const std::string& message) { emit(Level::kWarn, "warn", message); }
void info(const std::string& message) { emit(Level::kInfo, "info", message); }
void debug(const std::string& message) { emit(Level::kDebug, "debug", message); }

}  // namespace surveyel::log
