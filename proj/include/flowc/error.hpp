/*
 * Copyright 2026 The flowc Authors. All Rights Reserved.
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

namespace flowc {

// Root of every error thrown by the library. `code()` is a stable
// machine-readable identifier used by the CLI's JSON error output.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define FLOWC_DEFINE_ERROR(Name, Code)                   \
  class Name : public Error {                            \
   public:                                               \
    explicit Name(const std::string& message)            \
        : Error(Code, message) {}                        \
  };

FLOWC_DEFINE_ERROR(IoError, "io_error")
FLOWC_DEFINE_ERROR(ConfigError, "config_error")

#undef FLOWC_DEFINE_ERROR

}  // namespace flowc
