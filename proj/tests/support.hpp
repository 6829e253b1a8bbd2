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

// Shared helpers for the doctest suites.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "flowc/io.hpp"
#include "flowc/llmgate.hpp"

namespace testing {

inline std::string fixture(const std::string& relative) {
  return std::string(FLOWC_FIXTURE_DIR) + "/" + relative;
}

inline std::string golden_path(const std::string& name) {
  return std::string(FLOWC_GOLDEN_DIR) + "/" + name;
}

/// True when FLOWC_UPDATE_GOLDEN is set: goldens are rewritten, not checked.
inline bool updating_goldens() {
  const char* v = std::getenv("FLOWC_UPDATE_GOLDEN");
  return v != nullptr && *v != '\0';
}

/// Returns the frozen content for `name`, first writing `actual` when
/// goldens are being regenerated.
inline std::string golden(const std::string& name, const std::string& actual) {
  const auto path = golden_path(name);
  if (updating_goldens()) flowc::write_text_file(path, actual);
  if (!std::filesystem::exists(path)) return "<missing golden " + name + ">";
  return flowc::read_text_file(path);
}

inline flowc::ProviderConfig scripted(std::vector<std::string> replies, bool cycle = false) {
  flowc::ProviderConfig c;
  c.kind = flowc::ProviderKind::kScripted;
  c.retry.base_backoff_ms = 0;
  c.script.replies = std::move(replies);
  c.script.cycle = cycle;
  return c;
}

inline flowc::ProviderConfig scripted_fallback(std::string fallback, double latency_ms = 250) {
  flowc::ProviderConfig c;
  c.kind = flowc::ProviderKind::kScripted;
  c.retry.base_backoff_ms = 0;
  c.script.fallback = std::move(fallback);
  c.script.latency_ms = latency_ms;
  return c;
}

/// Provider named `role` from the bundled scripted provider file.
inline flowc::ProviderConfig bundled_provider(const std::string& role) {
  const auto j = flowc::Json::parse(flowc::read_text_file(fixture("providers.scripted.json")));
  return flowc::provider_from_json(j.at(role));
}

}  // namespace testing
