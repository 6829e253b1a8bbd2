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

#include "flowc/scenario.hpp"

#include <set>
#include <stdexcept>

#include "flowc/rng.hpp"

namespace flowc {
namespace {

std::string_view kind_name(VariableKind k) {
  switch (k) {
    case VariableKind::kCategorical: return "categorical";
    case VariableKind::kIntegerRange: return "integer-range";
    case VariableKind::kTextPool: return "text-pool";
  }
  return "categorical";
}

}  // namespace

std::string to_text(const ScenarioValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

std::vector<std::string> ScenarioSchema::names() const {
  std::vector<std::string> out;
  for (const auto& v : variables) out.push_back(v.name);
  return out;
}

ScenarioSchema parse_schema(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("schema is not valid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("variables") || !root["variables"].is_array())
    throw SchemaError("schema must be an object with a 'variables' array");
  for (auto it = root.begin(); it != root.end(); ++it)
    if (it.key() != "variables") throw SchemaError("unknown schema key '" + it.key() + "'");

  ScenarioSchema schema;
  std::set<std::string> seen;
  for (const auto& jv : root["variables"]) {
    if (!jv.is_object() || !jv.contains("name") || !jv.contains("kind") ||
        !jv.contains("domain"))
      throw SchemaError("each variable needs 'name', 'kind' and 'domain'");
    VariableDef v;
    v.name = jv["name"].get<std::string>();
    if (v.name.empty()) throw SchemaError("variable name must be nonempty");
    if (!seen.insert(v.name).second)
      throw SchemaError("duplicate variable '" + v.name + "'");
    const auto kind = jv["kind"].get<std::string>();
    const auto& domain = jv["domain"];
    if (!domain.is_array()) throw SchemaError("domain of '" + v.name + "' must be an array");
    if (kind == "integer-range") {
      v.kind = VariableKind::kIntegerRange;
      if (domain.size() != 2 || !domain[0].is_number_integer() ||
          !domain[1].is_number_integer())
        throw SchemaError("integer-range '" + v.name + "' needs [lo, hi]");
      v.bounds = {domain[0].get<std::int64_t>(), domain[1].get<std::int64_t>()};
      if (v.bounds.lo > v.bounds.hi)
        throw SchemaError("integer-range '" + v.name + "' has lo > hi");
    } else if (kind == "categorical" || kind == "text-pool") {
      v.kind = kind == "categorical" ? VariableKind::kCategorical : VariableKind::kTextPool;
      for (const auto& x : domain) {
        if (x.is_string()) {
          v.values.push_back(x.get<std::string>());
        } else if (x.is_number_integer()) {
          v.values.push_back(std::to_string(x.get<std::int64_t>()));
        } else {
          throw SchemaError("domain values of '" + v.name + "' must be strings");
        }
      }
    } else {
      throw SchemaError("unknown variable kind '" + kind + "'");
    }
    schema.variables.push_back(std::move(v));
  }
  return schema;
}

ScenarioSchema load_schema(const std::string& path) {
  return parse_schema(read_text_file(path));
}

Json schema_to_json(const ScenarioSchema& schema) {
  Json root;
  root["variables"] = Json::array();
  for (const auto& v : schema.variables) {
    Json jv;
    jv["name"] = v.name;
    jv["kind"] = kind_name(v.kind);
    if (v.kind == VariableKind::kIntegerRange) {
      jv["domain"] = Json::array({v.bounds.lo, v.bounds.hi});
    } else {
      jv["domain"] = v.values;
    }
    root["variables"].push_back(std::move(jv));
  }
  return root;
}

std::vector<ScenarioSpec> sample_scenarios(const ScenarioSchema& schema,
                                           std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_scenarios requires n >= 1");
  for (const auto& v : schema.variables)
    if (v.empty_domain()) throw EmptyDomain(v.name);

  std::vector<ScenarioSpec> specs;
  specs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ScenarioSpec spec;
    spec.scenario_id = static_cast<std::int64_t>(i);
    spec.seed = derive_seed(seed, i);
    SplitMix64 rng(spec.seed);
    for (const auto& v : schema.variables) {
      if (v.kind == VariableKind::kIntegerRange) {
        const auto width =
            static_cast<std::uint64_t>(v.bounds.hi) - static_cast<std::uint64_t>(v.bounds.lo) + 1;
        // width wraps to 0 only for the full 64-bit range.
        const auto offset = width == 0 ? rng.next() : rng.below(width);
        spec.bindings[v.name] =
            static_cast<std::int64_t>(static_cast<std::uint64_t>(v.bounds.lo) + offset);
      } else {
        spec.bindings[v.name] = v.values[rng.below(v.values.size())];
      }
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::string render_template(std::string_view text, const ScenarioSpec& spec) {
  return render_with(text, [&](std::string_view name) -> std::optional<std::string> {
    auto it = spec.bindings.find(std::string(name));
    if (it == spec.bindings.end()) return std::nullopt;
    return to_text(it->second);
  });
}

Json scenario_to_json(const ScenarioSpec& spec) {
  Json j;
  j["scenario_id"] = spec.scenario_id;
  j["seed"] = spec.seed;
  Json b = Json::object();
  for (const auto& [k, v] : spec.bindings) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) {
      b[k] = *i;
    } else {
      b[k] = std::get<std::string>(v);
    }
  }
  j["bindings"] = std::move(b);
  return j;
}

ScenarioSpec scenario_from_json(const Json& j) {
  ScenarioSpec spec;
  spec.scenario_id = j.at("scenario_id").get<std::int64_t>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  const auto& b = j.at("bindings");
  for (auto it = b.begin(); it != b.end(); ++it) {
    if (it->is_number_integer()) {
      spec.bindings[it.key()] = it->get<std::int64_t>();
    } else {
      spec.bindings[it.key()] = it->get<std::string>();
    }
  }
  return spec;
}

}  // namespace flowc
