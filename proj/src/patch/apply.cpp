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

#include "crashgym/patch/apply.hpp"

#include <algorithm>
#include <optional>

#include "crashgym/util/fs.hpp"
#include "crashgym/util/text.hpp"

namespace crashgym::patch {
namespace {

namespace fs = std::filesystem;

struct Buffer {
  std::vector<std::string> lines;
  bool trailing_newline = true;
};

Buffer to_buffer(const std::string& content) {
  Buffer b;
  b.lines = util::split_lines(content);
  b.trailing_newline = content.empty() || content.back() == '\n';
  return b;
}

std::string from_buffer(const Buffer& b) {
  std::string out;
  for (size_t i = 0; i < b.lines.size(); ++i) {
    out += b.lines[i];
    if (i + 1 < b.lines.size() || b.trailing_newline) out += '\n';
  }
  return out;
}

struct Side {
  std::vector<std::string> lines;
  bool ends_without_newline = false;
};

Side side_of(const Hunk& h, LineOp skipped) {
  Side s;
  for (const auto& l : h.lines) {
    if (l.op == skipped) continue;
    s.lines.push_back(l.text);
    s.ends_without_newline = l.no_newline;
  }
  return s;
}

bool matches_at(const Buffer& b, size_t pos, const Side& side) {
  const size_t len = side.lines.size();
  if (pos + len > b.lines.size()) return false;
  if (!std::equal(side.lines.begin(), side.lines.end(), b.lines.begin() + static_cast<long>(pos)))
    return false;
  const bool reaches_end = pos + len == b.lines.size();
  if (side.ends_without_newline) return reaches_end && !b.trailing_newline;
  if (len > 0 && reaches_end && !b.trailing_newline) return false;
  return true;
}

// Offsets 0, -1, +1, -2, +2, ... within the window.
std::optional<size_t> search(const Buffer& b, long expected, size_t min_pos, const Side& side,
                             int window) {
  for (int step = 0; step <= 2 * window; ++step) {
    const long offset = step % 2 == 0 ? step / 2 : -(step + 1) / 2;
    const long pos = expected + offset;
    if (pos < static_cast<long>(min_pos)) continue;
    if (matches_at(b, static_cast<size_t>(pos), side)) return static_cast<size_t>(pos);
  }
  return std::nullopt;
}

long expected_position(int start, int len) { return len == 0 ? start : start - 1; }

bool safe_path(const std::string& p) {
  if (p.empty() || p.front() == '/') return false;
  for (const auto& part : fs::path(p))
    if (part == "..") return false;
  return true;
}

using State = std::map<std::string, std::optional<std::string>>;

struct Outcome {
  State original;
  State result;
};

template <typename Loader>
Outcome compute(const Patch& patch, Loader&& load, const ApplyOptions& options) {
  Outcome o;
  auto current = [&](const std::string& path) -> std::optional<std::string> {
    auto it = o.result.find(path);
    if (it != o.result.end()) return it->second;
    auto loaded = load(path);
    o.original.emplace(path, loaded);
    return loaded;
  };
  for (const auto& file : patch) {
    for (const std::string* p : {&file.old_path, &file.new_path})
      if (*p != kDevNull && !safe_path(*p))
        throw ValidationError("unsafe path in patch: " + *p);
    const std::string& source = file.is_creation() ? file.new_path : file.old_path;
    std::optional<std::string> content = current(source);
    std::optional<std::string> updated = apply_file(content, file, options);
    if (!file.is_creation() && !file.is_deletion() && file.old_path != file.new_path) {
      current(file.new_path);
      o.result[file.old_path] = std::nullopt;
      o.result[file.new_path] = std::move(updated);
    } else {
      o.result[file.target_path()] = std::move(updated);
    }
  }
  return o;
}

ChangedFiles summarize(const Outcome& o) {
  ChangedFiles changed;
  for (const auto& [path, after] : o.result) {
    const auto& before = o.original.at(path);
    if (before == after) continue;
    if (!before)
      changed.created.push_back(path);
    else if (!after)
      changed.deleted.push_back(path);
    else
      changed.modified.push_back(path);
  }
  return changed;
}

}  // namespace

std::vector<std::string> ChangedFiles::all() const {
  std::vector<std::string> out;
  out.insert(out.end(), modified.begin(), modified.end());
  out.insert(out.end(), created.begin(), created.end());
  out.insert(out.end(), deleted.begin(), deleted.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::string> apply_file(const std::optional<std::string>& content,
                                      const DiffFile& diff, const ApplyOptions& options) {
  const std::string& name = diff.target_path();
  if (diff.is_creation()) {
    if (content) {
      try {
        auto created = apply_file(std::nullopt, diff, options);
        if (created == content) throw AlreadyApplied(name);
      } catch (const HunkMismatch&) {
      }
      throw HunkMismatch(name, 0);
    }
  } else if (!content) {
    throw MissingFile(diff.old_path);
  }

  Buffer buf = content ? to_buffer(*content) : Buffer{};
  long delta = 0;
  size_t min_pos = 0;
  for (size_t i = 0; i < diff.hunks.size(); ++i) {
    const Hunk& h = diff.hunks[i];
    const Side old_side = side_of(h, LineOp::kAdd);
    const Side new_side = side_of(h, LineOp::kDelete);
    const long expected = expected_position(h.old_start, h.old_len) + delta;
    std::optional<size_t> pos = search(buf, expected, min_pos, old_side, options.fuzz_window);
    if (!pos) {
      if (!new_side.lines.empty() && new_side.lines != old_side.lines &&
          search(buf, expected_position(h.new_start, h.new_len), 0, new_side, options.fuzz_window))
        throw AlreadyApplied(name);
      throw HunkMismatch(name, static_cast<int>(i));
    }
    const bool reaches_end = *pos + old_side.lines.size() == buf.lines.size();
    if (new_side.ends_without_newline && !reaches_end) throw HunkMismatch(name, static_cast<int>(i));
    auto first = buf.lines.begin() + static_cast<long>(*pos);
    first = buf.lines.erase(first, first + static_cast<long>(old_side.lines.size()));
    buf.lines.insert(first, new_side.lines.begin(), new_side.lines.end());
    if (reaches_end) buf.trailing_newline = new_side.lines.empty() || !new_side.ends_without_newline;
    min_pos = *pos + new_side.lines.size();
    delta = static_cast<long>(min_pos) - (expected_position(h.old_start, h.old_len) + h.old_len);
  }

  if (diff.is_deletion()) {
    if (!buf.lines.empty()) throw HunkMismatch(name, std::max(0, static_cast<int>(diff.hunks.size()) - 1));
    return std::nullopt;
  }
  return from_buffer(buf);
}

ChangedFiles apply_patch(FileTree& tree, const Patch& patch, const ApplyOptions& options) {
  Outcome o = compute(
      patch,
      [&](const std::string& path) -> std::optional<std::string> {
        auto it = tree.find(path);
        if (it == tree.end()) return std::nullopt;
        return it->second;
      },
      options);
  for (const auto& [path, after] : o.result) {
    if (after)
      tree[path] = *after;
    else
      tree.erase(path);
  }
  return summarize(o);
}

ChangedFiles apply_patch(const fs::path& workspace, const Patch& patch, const ApplyOptions& options) {
  Outcome o = compute(
      patch,
      [&](const std::string& path) -> std::optional<std::string> {
        const fs::path full = workspace / path;
        std::error_code ec;
        if (!fs::is_regular_file(full, ec)) return std::nullopt;
        return util::read_file(full);
      },
      options);

  std::vector<std::string> written;
  try {
    for (const auto& [path, after] : o.result) {
      if (o.original.at(path) == after) continue;
      const fs::path full = workspace / path;
      written.push_back(path);
      if (after) {
        fs::create_directories(full.parent_path());
        util::write_file_atomic(full, *after);
      } else {
        fs::remove(full);
      }
    }
  } catch (...) {
    for (const auto& path : written) {
      const fs::path full = workspace / path;
      std::error_code ec;
      if (const auto& before = o.original.at(path))
        util::write_file_atomic(full, *before);
      else
        fs::remove(full, ec);
    }
    throw;
  }
  return summarize(o);
}

}  // namespace crashgym::patch
