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

// Renders the repair prompt under a token budget.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "crashgym/model/sample.hpp"
#include "crashgym/retrieval/bm25.hpp"

namespace crashgym::prompt {

using TokenEstimator = std::function<int(std::string_view)>;

// ceil(bytes / 4).
int estimate_tokens(std::string_view text);
TokenEstimator default_estimator();
// ceil(bytes / bytes_per_token), for a ratio measured against a real
// tokenizer on the target text.
TokenEstimator ratio_estimator(double bytes_per_token);

struct PromptBudget {
  int max_context_tokens = 16000;
  int crash_cap_tokens = 10000;
  // Subtracted from max_context_tokens before packing to leave room for
  // the model's answer.
  int headroom_tokens = 1024;
  TokenEstimator estimator = default_estimator();

  int packing_limit() const { return max_context_tokens - headroom_tokens; }
};

// Throws ValidationError when the cap does not leave room below the
// context size.
void validate(const PromptBudget& budget);

struct AssembledPrompt {
  std::string text;
  std::vector<std::string> included_files;
  int token_estimate = 0;
  retrieval::Mode setting = retrieval::Mode::kOracle;
  // Crash text exactly as placed between the issue tags.
  std::string crash_block;
  bool crash_truncated = false;
};

struct Skip {
  std::string reason;
};

using AssembleResult = std::variant<AssembledPrompt, Skip>;

// Returns the file content at the sample's parent commit, or nullopt.
using FileSource = std::function<std::optional<std::string>(const std::string& path)>;

// Keeps whole lines from the head of `crash` while the estimate stays
// within `cap_tokens`. The crash title line is always kept; if it lies past
// the head window the window starts at the title.
std::string truncate_crash(std::string_view crash, const std::string& title, int cap_tokens,
                           const TokenEstimator& estimator, bool* truncated = nullptr);

std::string render(std::string_view crash_block,
                   const std::vector<std::pair<std::string, std::string>>& files);

// Oracle: every retrieved file must fit, else Skip. BM25: files are added
// in rank order until the first that does not fit; Skip when none fit.
// Throws TemplateError when a path or text would corrupt the fences.
AssembleResult assemble(const model::BenchSample& sample,
                        const retrieval::RetrievalResult& retrieval, const FileSource& files,
                        const PromptBudget& budget);

struct ParsedPrompt {
  std::string crash_block;
  std::vector<std::string> included_files;
};

// Inverse of render for the parts that matter: the crash block and the
// ordered file list. Throws TemplateError on text that is not a prompt.
ParsedPrompt parse_prompt(std::string_view text);

nlohmann::json sidecar(const std::string& bug_id, retrieval::Mode setting,
                       const AssembleResult& result);

}  // namespace crashgym::prompt
