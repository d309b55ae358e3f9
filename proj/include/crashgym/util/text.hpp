// Copyright 2026 The crashgym Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace crashgym::util {

// Splits on '\n'. A trailing newline does not produce an empty final line,
// and "\r\n" endings are left untouched.
std::vector<std::string> split_lines(std::string_view text);

// Number of lines as split_lines would report them.
size_t count_lines(std::string_view text);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Converts "\r\n" and lone "\r" to "\n".
std::string normalize_newlines(std::string_view text);

std::string format_fixed(double value, int decimals);

}  // namespace crashgym::util
