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

#include "crashgym/prompt/assembler.hpp"

#include <cmath>

#include "crashgym/errors.hpp"
#include "crashgym/prompt/template.hpp"
#include "crashgym/util/text.hpp"

namespace crashgym::prompt {
namespace {

constexpr std::string_view kIssueOpen = "<issue>\n";
constexpr std::string_view kIssueClose = "\n</issue>\n";
constexpr std::string_view kCodeOpen = "\n<code>\n";
constexpr std::string_view kCodeClose = "</code>\n";

std::string start_fence(const std::string& path) { return "[start of " + path + "]"; }
std::string end_fence(const std::string& path) { return "[end of " + path + "]"; }

void check_path(const std::string& path) {
  if (path.empty() || path.find_first_of("]\n\r") != std::string::npos)
    throw TemplateError("file path collides with fence markers: " + path);
}

void check_text(const std::string& path, const std::string& text) {
  const std::string fence = end_fence(path);
  for (const auto& line : util::split_lines(text))
    if (line == fence) throw TemplateError("file text contains its own end fence: " + path);
}

std::string strip_trailing_newlines(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

int estimate_tokens(std::string_view text) {
  return static_cast<int>((text.size() + 3) / 4);
}

TokenEstimator default_estimator() { return [](std::string_view t) { return estimate_tokens(t); }; }

TokenEstimator ratio_estimator(double bytes_per_token) {
  if (!(bytes_per_token > 0)) throw ValidationError("bytes per token must be positive");
  return [bytes_per_token](std::string_view t) {
    return static_cast<int>(std::ceil(static_cast<double>(t.size()) / bytes_per_token));
  };
}

void validate(const PromptBudget& budget) {
  if (budget.crash_cap_tokens <= 0 || budget.crash_cap_tokens >= budget.max_context_tokens)
    throw ValidationError("crash cap must be positive and below the context size");
  if (budget.headroom_tokens < 0 || budget.packing_limit() <= 0)
    throw ValidationError("headroom leaves no room for the prompt");
  if (!budget.estimator) throw ValidationError("no token estimator configured");
}

std::string truncate_crash(std::string_view crash, const std::string& title, int cap_tokens,
                           const TokenEstimator& estimator, bool* truncated) {
  const std::string whole = strip_trailing_newlines(crash);
  if (truncated) *truncated = false;
  if (estimator(whole) <= cap_tokens) return whole;
  if (truncated) *truncated = true;

  const std::vector<std::string> lines = util::split_lines(whole);
  size_t title_at = 0;
  if (!title.empty()) {
    for (size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].find(title) != std::string::npos) {
        title_at = i;
        break;
      }
    }
  }
  auto window = [&](size_t from) {
    std::string text = lines[from];
    size_t end = from + 1;
    while (end < lines.size()) {
      std::string next = text + "\n" + lines[end];
      if (estimator(next) > cap_tokens) break;
      text = std::move(next);
      ++end;
    }
    return std::pair{text, end};
  };
  auto [text, end] = window(0);
  if (title_at >= end) text = window(title_at).first;
  return text;
}

std::string render(std::string_view crash_block,
                   const std::vector<std::pair<std::string, std::string>>& files) {
  std::string out;
  out += kIntro;
  out += kIssueOpen;
  out += crash_block;
  out += kIssueClose;
  out += kCodeOpen;
  for (const auto& [path, text] : files) {
    out += start_fence(path) + "\n";
    out += text;
    if (!text.empty() && text.back() != '\n') out += "\n";
    out += end_fence(path) + "\n";
  }
  out += kCodeClose;
  out += "\n";
  out += kExampleIntro;
  out += "\n<patch>\n";
  out += kExamplePatch;
  out += "</patch>\n\n";
  out += kTrailer;
  return out;
}

AssembleResult assemble(const model::BenchSample& sample,
                        const retrieval::RetrievalResult& retrieval, const FileSource& files,
                        const PromptBudget& budget) {
  validate(budget);
  const std::string title = sample.crash_parent.crash_title.empty()
                                ? model::extract_crash_title(sample.crash_parent.raw_console)
                                : sample.crash_parent.crash_title;
  bool truncated = false;
  const std::string crash = truncate_crash(sample.crash_parent.raw_console, title,
                                           budget.crash_cap_tokens, budget.estimator, &truncated);
  if (crash.find("</issue>") != std::string::npos)
    throw TemplateError("crash text contains the issue close tag");

  std::vector<std::pair<std::string, std::string>> candidates;
  for (const auto& path : retrieval.ranked_paths) {
    check_path(path);
    std::optional<std::string> text = files(path);
    if (!text) continue;  // created by the fix; nothing to show
    check_text(path, *text);
    candidates.emplace_back(path, std::move(*text));
  }
  if (candidates.empty()) return Skip{"no retrieved file exists at the parent commit"};

  const int limit = budget.packing_limit();
  AssembledPrompt prompt;
  prompt.setting = retrieval.mode;
  prompt.crash_block = crash;
  prompt.crash_truncated = truncated;

  std::vector<std::pair<std::string, std::string>> chosen;
  if (retrieval.mode == retrieval::Mode::kOracle) {
    std::string text = render(crash, candidates);
    const int est = budget.estimator(text);
    if (est > limit)
      return Skip{"oracle files need " + std::to_string(est) + " tokens, limit " +
                  std::to_string(limit)};
    chosen = std::move(candidates);
    prompt.text = std::move(text);
    prompt.token_estimate = est;
  } else {
    for (auto& file : candidates) {
      chosen.push_back(file);
      std::string text = render(crash, chosen);
      const int est = budget.estimator(text);
      if (est > limit) {
        chosen.pop_back();
        break;
      }
      prompt.text = std::move(text);
      prompt.token_estimate = est;
    }
    if (chosen.empty())
      return Skip{"top-ranked file does not fit in " + std::to_string(limit) + " tokens"};
  }
  for (const auto& [path, text] : chosen) prompt.included_files.push_back(path);
  return prompt;
}

ParsedPrompt parse_prompt(std::string_view text) {
  ParsedPrompt parsed;
  const size_t open = text.find(kIssueOpen);
  if (open == std::string_view::npos) throw TemplateError("no issue block");
  const size_t body = open + kIssueOpen.size();
  const size_t close = text.find(kIssueClose, body);
  if (close == std::string_view::npos) throw TemplateError("unterminated issue block");
  parsed.crash_block = std::string(text.substr(body, close - body));

  size_t pos = close + kIssueClose.size();
  if (text.substr(pos, kCodeOpen.size()) != kCodeOpen) throw TemplateError("no code block");
  pos += kCodeOpen.size();
  std::optional<std::string> open_file;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (open_file) {
      if (line == end_fence(*open_file)) open_file.reset();
      continue;
    }
    if (line == "</code>") return parsed;
    if (line.substr(0, 10) == "[start of " && !line.empty() && line.back() == ']') {
      open_file = std::string(line.substr(10, line.size() - 11));
      parsed.included_files.push_back(*open_file);
      continue;
    }
    throw TemplateError("unexpected text in code block");
  }
  throw TemplateError("unterminated code block");
}

nlohmann::json sidecar(const std::string& bug_id, retrieval::Mode setting,
                       const AssembleResult& result) {
  nlohmann::json j = {{"bug_id", bug_id},
                      {"setting", retrieval::to_string(setting)},
                      {"template_version", std::string(kTemplateVersion)}};
  if (const auto* p = std::get_if<AssembledPrompt>(&result)) {
    j["included_files"] = p->included_files;
    j["token_estimate"] = p->token_estimate;
    j["crash_truncated"] = p->crash_truncated;
  } else {
    j["skip_reason"] = std::get<Skip>(result).reason;
  }
  return j;
}

}  // namespace crashgym::prompt
