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

#include <stdexcept>
#include <string>

namespace surveyel {

enum class ErrorKind { kInput, kInfeasible, kConvergence, kNumerical };

// Every error names the module and operation that raised it.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string module, std::string operation,
          const std::string& detail);

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& module() const noexcept { return module_; }
    const std::string& operation() const noexcept { return operation_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string module_;
    std::string operation_;
    std::string detail_;
};

class InputError : public Error {
public:
    InputError(std::string module, std::string operation, const std::string& detail)
        : Error(ErrorKind::kInput, std::move(module), std::move(operation), detail) {}
};

// Zero is not inside the convex hull of the constraint rows.
class InfeasibleError : public Error {
public:
    InfeasibleError(std::string module, std::string operation, const std::string& detail)
        : Error(ErrorKind::kInfeasible, std::move(module), std::move(operation), detail) {}
};

class ConvergenceError : public Error {
public:
    ConvergenceError(std::string module, std::string operation, const std::string& detail)
        : Error(ErrorKind::kConvergence, std::move(module), std::move(operation), detail) {}
};

class NumericalError : public Error {
public:
    NumericalError(std::string module, std::string operation, const std::string& detail)
        : Error(ErrorKind::kNumerical, std::move(module), std::move(operation), detail) {}
};

}  // namespace surveyel
