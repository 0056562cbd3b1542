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

#include "surveyel/error.hpp"

namespace surveyel {

Error::Error(ErrorKind kind, std::string module, std::string operation,
             const std::string& detail)
    : std::runtime_error(module + "/" + operation + ": " + detail),
      kind_(kind),
      module_(std::move(module)),
      operation_(std::move(operation)),
      detail_(detail) {}

}  // namespace surveyel
