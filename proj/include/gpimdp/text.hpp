/*
 * Copyright 2026 The gpimdp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gpv::text {

/// Shortest-safe decimal form: 17 significant digits, round-trips exactly through parse_double.
std::string format_double(double value);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
/// Splits on runs of whitespace.
std::vector<std::string> tokens(std::string_view s);

/// Strict parses: the whole string must be consumed. Throw ParseError.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

}  // namespace gpv::text
