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

#include "flowc/template.hpp"

#include <algorithm>
#include <cctype>

namespace flowc {
namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(s.front())) return false;
  return std::all_of(s.begin(), s.end(), is_ident_char);
}

// Walks `text`, calling `literal` for plain runs and `placeholder` for names.
template <typename Literal, typename Placeholder>
void scan(std::string_view text, Literal literal, Placeholder placeholder) {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto open = text.find("{{", i);
    if (open == std::string_view::npos) {
      literal(text.substr(i));
      return;
    }
    literal(text.substr(i, open - i));
    if (text.compare(open, 4, "{{{{") == 0) {
      literal("{{");
      i = open + 4;
      continue;
    }
    const auto close = text.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw TemplateError("unterminated placeholder at offset " +
                          std::to_string(open));
    }
    const auto name = trim(text.substr(open + 2, close - open - 2));
    if (!is_identifier(name)) {
      throw TemplateError("malformed placeholder '{{" +
                          std::string(text.substr(open + 2, close - open - 2)) +
                          "}}'");
    }
    placeholder(name);
    i = close + 2;
  }
}

}  // namespace

UnboundPlaceholder::UnboundPlaceholder(std::string name)
    : TemplateError("unbound_placeholder",
                    "unbound placeholder '" + name + "'"),
      name_(std::move(name)) {}

std::vector<std::string> template_placeholders(std::string_view text) {
  std::vector<std::string> names;
  scan(
      text, [](std::string_view) {},
      [&](std::string_view name) {
        if (std::find(names.begin(), names.end(), name) == names.end())
          names.emplace_back(name);
      });
  return names;
}

std::string render_with(
    std::string_view text,
    const std::function<std::optional<std::string>(std::string_view)>&
        lookup) {
  std::string out;
  out.reserve(text.size());
  scan(
      text, [&](std::string_view lit) { out.append(lit); },
      [&](std::string_view name) {
        auto value = lookup(name);
        if (!value) throw UnboundPlaceholder(std::string(name));
        out.append(*value);
      });
  return out;
}

bool contains_placeholder_syntax(std::string_view text) {
  std::size_t i = 0;
  while ((i = text.find("{{", i)) != std::string_view::npos) {
    const auto close = text.find("}}", i + 2);
    if (close == std::string_view::npos) return false;
    // Innermost "{{" before the close; handles "{{{{x}}".
    const auto last_open = text.rfind("{{", close);
    if (is_identifier(trim(text.substr(last_open + 2, close - last_open - 2))))
      return true;
    i = close + 2;
  }
  return false;
}

}  // namespace flowc
