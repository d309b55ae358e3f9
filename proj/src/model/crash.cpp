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

#include "crashgym/model/crash.hpp"

#include <regex>

#include "crashgym/errors.hpp"
#include "crashgym/util/text.hpp"

namespace crashgym::model {
namespace {

// Drops "[   12.345678]" and "[ T1234]" style console prefixes.
std::string_view strip_console_prefix(std::string_view line) {
  for (;;) {
    size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i < line.size() && line[i] == '[') {
      const size_t close = line.find(']', i);
      if (close == std::string_view::npos) return line.substr(i);
      std::string_view inner = util::trim(line.substr(i + 1, close - i - 1));
      const bool stamp = !inner.empty() && inner.find_first_not_of("0123456789.TC") == std::string_view::npos;
      if (!stamp) return line.substr(i);
      line = line.substr(close + 1);
      continue;
    }
    return line.substr(i);
  }
}

}  // namespace

const std::vector<std::string>& default_title_prefixes() {
  static const std::vector<std::string> kPrefixes = {
      "BUG:",         "KASAN:",     "KMSAN:", "KCSAN:",
      "WARNING:",     "Kernel panic", "general protection fault", "UBSAN:",
      "INFO: task hung", "kernel BUG at"};
  return kPrefixes;
}

std::optional<std::string> detect_title(std::string_view line,
                                        const std::vector<std::string>& prefixes) {
  std::string_view body = util::trim(strip_console_prefix(line));
  for (const auto& p : prefixes)
    if (body.substr(0, p.size()) == p) return std::string(body);
  return std::nullopt;
}

std::string extract_crash_title(std::string_view raw, const std::vector<std::string>& prefixes) {
  std::optional<std::string> first;
  for (const auto& line : util::split_lines(raw)) {
    std::string_view body = util::trim(strip_console_prefix(line));
    if (body.empty()) continue;
    for (const auto& p : prefixes)
      if (body.substr(0, p.size()) == p) return std::string(body);
    if (!first) first = std::string(body);
  }
  if (!first) throw EmptyReport("crash report has no content");
  return *first;
}

std::vector<Frame> extract_frames(std::string_view raw) {
  static const std::regex kFrame(
      R"(^(?:RIP: [0-9a-f]{4}:)?([A-Za-z_][A-Za-z0-9_.$]*)(\+0x[0-9a-f]+/0x[0-9a-f]+)?)"
      R"((?: \[[^\]]+\])?(?:\s+([A-Za-z0-9_\-./]+\.[A-Za-z]+):\d+(?:\s+\[inline\])?)?\s*$)");
  std::vector<Frame> frames;
  for (const auto& line : util::split_lines(raw)) {
    std::string_view body = util::trim(strip_console_prefix(line));
    if (body.substr(0, 2) == "? ") body.remove_prefix(2);
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(body.begin(), body.end(), m, kFrame)) continue;
    if (!m[2].matched && !m[3].matched) continue;
    Frame f;
    f.function_name = m[1].str();
    const size_t dot = f.function_name.find('.');
    if (dot != std::string::npos) f.function_name.resize(dot);
    if (m[3].matched) f.source_file = m[3].str();
    frames.push_back(std::move(f));
  }
  return frames;
}

CrashReport make_crash_report(std::string raw_console) {
  CrashReport r;
  r.crash_title = extract_crash_title(raw_console);
  r.frames = extract_frames(raw_console);
  r.line_count = static_cast<int>(util::count_lines(raw_console));
  r.raw_console = std::move(raw_console);
  return r;
}

void to_json(nlohmann::json& j, const Frame& f) {
  j = {{"function_name", f.function_name}, {"source_file", nullptr}};
  if (f.source_file) j["source_file"] = *f.source_file;
}

void from_json(const nlohmann::json& j, Frame& f) {
  f.function_name = j.at("function_name").get<std::string>();
  f.source_file.reset();
  if (j.contains("source_file") && !j["source_file"].is_null())
    f.source_file = j["source_file"].get<std::string>();
}

void to_json(nlohmann::json& j, const CrashReport& r) {
  j = {{"raw_console", r.raw_console},
       {"crash_title", r.crash_title},
       {"frames", r.frames},
       {"line_count", r.line_count}};
}

void from_json(const nlohmann::json& j, CrashReport& r) {
  r.raw_console = j.at("raw_console").get<std::string>();
  r.crash_title = j.contains("crash_title") ? j["crash_title"].get<std::string>()
                                            : extract_crash_title(r.raw_console);
  r.frames = j.contains("frames") ? j["frames"].get<std::vector<Frame>>()
                                  : extract_frames(r.raw_console);
  r.line_count = j.contains("line_count") ? j["line_count"].get<int>()
                                          : static_cast<int>(util::count_lines(r.raw_console));
}

}  // namespace crashgym::model
