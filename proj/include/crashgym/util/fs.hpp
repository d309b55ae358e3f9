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

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace crashgym::util {

namespace fs = std::filesystem;

// Throws StorageError when the file cannot be read.
std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view content);
// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const fs::path& path, std::string_view content);

// Regular files under `root`, relative, sorted, excluding any `.git` entry.
std::vector<std::string> list_tree(const fs::path& root);

// SHA-256 over the sorted (relative path, content digest) pairs of a tree.
std::string tree_digest(const fs::path& root);

// Copies `in` to `path` in fixed-size chunks; returns the SHA-256 of the
// bytes written.
std::string stream_to_file(std::istream& in, const fs::path& path);

class TempDir {
 public:
  explicit TempDir(std::string_view prefix = "crashgym");
  ~TempDir();
  TempDir(TempDir&& other) noexcept;
  TempDir& operator=(TempDir&&) = delete;
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  // Keeps the directory on destruction.
  fs::path release();

 private:
  fs::path path_;
};

// $CRASHGYM_HOME, or ~/.crashgym when unset.
fs::path crashgym_home();

fs::path make_unique_dir(const fs::path& parent, std::string_view prefix);

}  // namespace crashgym::util
