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

// Unified diffs as emitted by `git diff`: parsing with full structural
// validation, canonical rendering, extraction from free-form model output,
// and line-based diff construction.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crashgym/errors.hpp"

namespace crashgym::patch {

inline constexpr std::string_view kDevNull = "/dev/null";

class MalformedDiff : public Error {
 public:
  MalformedDiff(int line_no, std::string reason)
      : Error("MalformedDiff",
              "line " + std::to_string(line_no) + ": " + reason),
        line_no_(line_no),
        reason_(std::move(reason)) {}
  int line_no() const { return line_no_; }
  const std::string& reason() const { return reason_; }

 private:
  int line_no_;
  std::string reason_;
};

enum class LineOp { kContext, kAdd, kDelete };

struct HunkLine {
  LineOp op = LineOp::kContext;
  std::string text;
  // Followed by "\ No newline at end of file".
  bool no_newline = false;

  friend bool operator==(const HunkLine&, const HunkLine&) = default;
};

struct Hunk {
  int old_start = 0;
  int old_len = 0;
  int new_start = 0;
  int new_len = 0;
  // Text after the closing "@@", usually the enclosing function signature.
  std::string context_header;
  std::vector<HunkLine> lines;

  std::vector<std::string> old_side() const;
  std::vector<std::string> new_side() const;
  int additions() const;
  int deletions() const;

  friend bool operator==(const Hunk&, const Hunk&) = default;
};

// Paths are stored without their "a/" or "b/" prefix; a side that does not
// exist is kDevNull.
struct DiffFile {
  std::string old_path;
  std::string new_path;
  std::vector<Hunk> hunks;

  bool is_creation() const { return old_path == kDevNull; }
  bool is_deletion() const { return new_path == kDevNull; }
  // The post-image path, or the deleted path for deletions.
  const std::string& target_path() const {
    return is_deletion() ? old_path : new_path;
  }

  friend bool operator==(const DiffFile&, const DiffFile&) = default;
};

using Patch = std::vector<DiffFile>;

// Throws MalformedDiff. Text outside of file sections (prose, code fences)
// is skipped the way `git apply` skips it; anything inside a hunk must be
// consistent with the hunk header counts.
Patch parse(std::string_view text);

// Canonical `git diff` text. parse(render(p)) == p.
std::string render(const Patch& patch);
std::string render(const DiffFile& file);

// Content of the first <patch>...</patch> block, otherwise everything from
// the first line starting with "--- a/". Throws NoPatchFound.
std::string extract_patch(std::string_view raw_model_output);

// Canonical form used for deduplicating candidate patches: the rendering of
// the parsed patch, or the trimmed text when it does not parse.
std::string normalize(std::string_view patch_text);

// Builds a diff between two versions of a file. Either side may be absent
// for creations and deletions. Returns nullopt when the contents are equal.
std::optional<DiffFile> make_diff(const std::string& path,
                                  const std::optional<std::string>& old_content,
                                  const std::optional<std::string>& new_content,
                                  int context = 3);

// Identifier immediately before the first '(' of a hunk context header,
// falling back to the last identifier in it. "" for an empty header.
std::string function_from_context(std::string_view context_header);

// Added plus deleted lines, and the per-change-run count used for fix
// sizing: each maximal run of changed lines counts max(deletions, additions).
int diffstat_lines(const Patch& patch);
int changed_lines(const Patch& patch);

}  // namespace crashgym::patch
