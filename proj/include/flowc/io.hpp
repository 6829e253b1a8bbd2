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
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace flowc {

using Json = nlohmann::ordered_json;

std::string sha256_hex(std::string_view data);
std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string read_text_file(const std::string& path);
/// Writes via a temporary sibling and rename. Creates parent directories.
void write_text_file(const std::string& path, std::string_view content);

/// Parses every nonempty line as JSON; errors name the 1-based line.
std::vector<Json> read_jsonl(const std::string& path);
std::string to_jsonl(const std::vector<Json>& records);

/// Stable compact dump used for every line-delimited export.
std::string dump_compact(const Json& j);

/// Number of UTF-8 code points in `text`.
std::size_t utf8_length(std::string_view text);

}  // namespace flowc
