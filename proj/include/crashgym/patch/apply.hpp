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

// Applies parsed diffs to a workspace directory with `git apply`-like
// semantics: exact context matching, a bounded offset search and
// all-or-nothing writes.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "crashgym/errors.hpp"
#include "crashgym/patch/diff.hpp"

namespace crashgym::patch {

class HunkMismatch : public Error {
 public:
  HunkMismatch(std::string file, int hunk_index)
      : Error("HunkMismatch", "hunk #" + std::to_string(hunk_index) +
                                  " does not apply to " + file),
        file_(std::move(file)),
        hunk_index_(hunk_index) {}
  const std::string& file() const { return file_; }
  int hunk_index() const { return hunk_index_; }

 private:
  std::string file_;
  int hunk_index_;
};

class MissingFile : public Error {
 public:
  explicit MissingFile(const std::string& file)
      : Error("MissingFile", "patch target does not exist: " + file) {}
};

class AlreadyApplied : public Error {
 public:
  explicit AlreadyApplied(const std::string& file)
      : Error("AlreadyApplied", "patch appears to be applied already: " + file) {}
};

struct ApplyOptions {
  // Lines searched on either side of the recorded position when the old
  // side does not match in place. 0 means no offset at all.
  int fuzz_window = 20;
};

struct ChangedFiles {
  std::vector<std::string> modified;
  std::vector<std::string> created;
  std::vector<std::string> deleted;

  std::vector<std::string> all() const;
};

// Path -> file content.
using FileTree = std::map<std::string, std::string>;

// Applies to files under `workspace`. On any error the workspace is left
// byte-identical to its prior state.
ChangedFiles apply_patch(const std::filesystem::path& workspace, const Patch& patch,
                   const ApplyOptions& options = {});

// In-memory variant; `tree` is only modified on success.
ChangedFiles apply_patch(FileTree& tree, const Patch& patch,
                   const ApplyOptions& options = {});

// Result of applying a single file diff to `content`; nullopt input means
// the file does not exist and nullopt output means it is deleted.
std::optional<std::string> apply_file(const std::optional<std::string>& content,
                                      const DiffFile& diff,
                                      const ApplyOptions& options = {});

}  // namespace crashgym::patch
