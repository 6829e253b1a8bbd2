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

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowc/error.hpp"

namespace flowc {

// `{{name}}` placeholders; `{{{{` renders a literal `{{`.

class TemplateError : public Error {
 public:
  explicit TemplateError(const std::string& message)
      : Error("template_error", message) {}
  TemplateError(std::string code, const std::string& message)
      : Error(std::move(code), message) {}
};

class UnboundPlaceholder : public TemplateError {
 public:
  explicit UnboundPlaceholder(std::string name);
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Placeholder names in order of first appearance. Throws TemplateError on
/// an unterminated or malformed placeholder.
std::vector<std::string> template_placeholders(std::string_view text);

/// Substitutes every placeholder using `lookup`; a nullopt lookup result
/// raises UnboundPlaceholder.
std::string render_with(
    std::string_view text,
    const std::function<std::optional<std::string>(std::string_view)>& lookup);

/// True if `text` contains `{{identifier}}`.
bool contains_placeholder_syntax(std::string_view text);

}  // namespace flowc
