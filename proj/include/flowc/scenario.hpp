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

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "flowc/io.hpp"
#include "flowc/template.hpp"

namespace flowc {

enum class VariableKind { kCategorical, kIntegerRange, kTextPool };

using ScenarioValue = std::variant<std::int64_t, std::string>;

std::string to_text(const ScenarioValue& v);

struct IntegerBounds {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  friend bool operator==(const IntegerBounds&, const IntegerBounds&) = default;
};

struct VariableDef {
  std::string name;
  VariableKind kind = VariableKind::kCategorical;
  // Categorical and text-pool variables use `values`; ranges use `bounds`.
  std::vector<std::string> values;
  IntegerBounds bounds;

  bool empty_domain() const {
    return kind != VariableKind::kIntegerRange && values.empty();
  }
};

struct ScenarioSchema {
  std::vector<VariableDef> variables;

  std::vector<std::string> names() const;
};

struct ScenarioSpec {
  std::int64_t scenario_id = 0;
  std::uint64_t seed = 0;
  std::map<std::string, ScenarioValue> bindings;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& message) : Error("schema_error", message) {}
};

class EmptyDomain : public Error {
 public:
  explicit EmptyDomain(const std::string& variable)
      : Error("empty_domain", "variable '" + variable + "' has an empty domain") {}
};

/// Parses `{"variables":[{"name","kind","domain"}...]}`. Rejects duplicate
/// names, unknown kinds and inverted integer ranges.
ScenarioSchema parse_schema(std::string_view text);
ScenarioSchema load_schema(const std::string& path);
Json schema_to_json(const ScenarioSchema& schema);

/// `n` specs with ids 0..n-1. Spec i is seeded with derive_seed(seed, i) and
/// draws each variable in schema order from that stream.
std::vector<ScenarioSpec> sample_scenarios(const ScenarioSchema& schema,
                                           std::size_t n, std::uint64_t seed);

/// Replaces every `{{name}}` with the bound value.
std::string render_template(std::string_view text, const ScenarioSpec& spec);

Json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const Json& j);

}  // namespace flowc
