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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "surveyel/config.hpp"

namespace surveyel {

enum class Command { kFit, kSimulate, kMc, kDecluster };

Command parse_command(const std::string& s);
std::string to_string(Command c);

// Command-line values that take precedence over the config document.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> reps;
    std::optional<int> jobs;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitConvergence = 2;

// Runs one command and writes its artifacts under the output directory.
// Returns 0 on success, 2 when a fit failed to converge (results still
// written), 1 on input errors. Messages go to `err`.
int run_command(Command command, RunConfig config, const Overrides& overrides, std::ostream& err);

}  // namespace surveyel
