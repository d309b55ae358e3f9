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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace crashgym::model {

struct Frame {
  std::string function_name;
  std::optional<std::string> source_file;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct CrashReport {
  std::string raw_console;
  std::string crash_title;
  std::vector<Frame> frames;
  int line_count = 0;

  friend bool operator==(const CrashReport&, const CrashReport&) = default;
};

// Ordered; the first line starting with one of these wins.
const std::vector<std::string>& default_title_prefixes();

// Throws EmptyReport when `raw` has no non-blank line. A leading
// "[   12.345678]" console timestamp is not part of the title.
// The line's text without console prefixes when it starts a crash report.
std::optional<std::string> detect_title(std::string_view line,
                                        const std::vector<std::string>& prefixes = default_title_prefixes());

std::string extract_crash_title(std::string_view raw,
                                const std::vector<std::string>& prefixes = default_title_prefixes());

// Stack frames in console order. Compiler clone suffixes such as
// ".isra.0" or ".cold" are stripped from function names.
std::vector<Frame> extract_frames(std::string_view raw);

// Builds a report with title, frames and line count filled in.
CrashReport make_crash_report(std::string raw_console);

void to_json(nlohmann::json& j, const Frame& f);
void from_json(const nlohmann::json& j, Frame& f);
void to_json(nlohmann::json& j, const CrashReport& r);
void from_json(const nlohmann::json& j, CrashReport& r);

}  // namespace crashgym::model
