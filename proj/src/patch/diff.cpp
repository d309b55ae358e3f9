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

#include "crashgym/patch/diff.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "crashgym/util/text.hpp"

namespace crashgym::patch {
namespace {

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string strip_path(std::string_view raw) {
  // Drop a trailing tab-separated timestamp.
  raw = raw.substr(0, raw.find('\t'));
  while (!raw.empty() && (raw.back() == ' ' || raw.back() == '\r')) raw.remove_suffix(1);
  if (raw == kDevNull) return std::string(kDevNull);
  if (starts_with(raw, "a/") || starts_with(raw, "b/")) raw.remove_prefix(2);
  return std::string(raw);
}

bool parse_int(std::string_view s, size_t& pos, int& out) {
  const char* b = s.data() + pos;
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p == b) return false;
  pos += static_cast<size_t>(p - b);
  return true;
}

bool parse_range(std::string_view s, size_t& pos, int& start, int& len) {
  if (!parse_int(s, pos, start)) return false;
  len = 1;
  if (pos < s.size() && s[pos] == ',') {
    ++pos;
    if (!parse_int(s, pos, len)) return false;
  }
  return start >= 0 && len >= 0;
}

bool parse_hunk_header(std::string_view line, Hunk& hunk) {
  size_t pos = 0;
  if (!starts_with(line, "@@ -")) return false;
  pos = 4;
  if (!parse_range(line, pos, hunk.old_start, hunk.old_len)) return false;
  if (line.substr(pos, 2) != " +") return false;
  pos += 2;
  if (!parse_range(line, pos, hunk.new_start, hunk.new_len)) return false;
  if (line.substr(pos, 3) != " @@") return false;
  pos += 3;
  std::string_view rest = line.substr(pos);
  if (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  hunk.context_header = std::string(rest);
  return true;
}

std::string render_range(int start, int len) {
  if (len == 1) return std::to_string(start);
  return std::to_string(start) + "," + std::to_string(len);
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

std::vector<std::string> Hunk::old_side() const {
  std::vector<std::string> out;
  for (const auto& l : lines)
    if (l.op != LineOp::kAdd) out.push_back(l.text);
  return out;
}

std::vector<std::string> Hunk::new_side() const {
  std::vector<std::string> out;
  for (const auto& l : lines)
    if (l.op != LineOp::kDelete) out.push_back(l.text);
  return out;
}

int Hunk::additions() const {
  return static_cast<int>(std::count_if(lines.begin(), lines.end(), [](const HunkLine& l) {
    return l.op == LineOp::kAdd;
  }));
}

int Hunk::deletions() const {
  return static_cast<int>(std::count_if(lines.begin(), lines.end(), [](const HunkLine& l) {
    return l.op == LineOp::kDelete;
  }));
}

Patch parse(std::string_view text) {
  const std::vector<std::string> lines = util::split_lines(text);
  const size_t n = lines.size();
  Patch files;
  size_t i = 0;
  bool after_hunk = false;

  while (i < n) {
    const std::string& line = lines[i];
    const int line_no = static_cast<int>(i) + 1;
    if (starts_with(line, "--- ")) {
      if (i + 1 >= n || !starts_with(lines[i + 1], "+++ "))
        throw MalformedDiff(line_no, "'---' header not followed by '+++'");
      DiffFile file;
      file.old_path = strip_path(std::string_view(line).substr(4));
      file.new_path = strip_path(std::string_view(lines[i + 1]).substr(4));
      if (file.old_path.empty() || file.new_path.empty())
        throw MalformedDiff(line_no, "empty path in file header");
      if (file.is_creation() && file.is_deletion())
        throw MalformedDiff(line_no, "both sides are /dev/null");
      i += 2;
      while (i < n && starts_with(lines[i], "@@")) {
        const int header_no = static_cast<int>(i) + 1;
        Hunk hunk;
        if (!parse_hunk_header(lines[i], hunk))
          throw MalformedDiff(header_no, "malformed hunk header");
        if (hunk.old_len > 0 && hunk.old_start == 0)
          throw MalformedDiff(header_no, "old range starts at line 0");
        if (hunk.new_len > 0 && hunk.new_start == 0)
          throw MalformedDiff(header_no, "new range starts at line 0");
        if (file.is_creation() && (hunk.old_len != 0 || hunk.old_start != 0))
          throw MalformedDiff(header_no, "creation hunk with an old range");
        if (file.is_deletion() && (hunk.new_len != 0 || hunk.new_start != 0))
          throw MalformedDiff(header_no, "deletion hunk with a new range");
        if (!file.hunks.empty()) {
          const Hunk& prev = file.hunks.back();
          if (hunk.old_start < prev.old_start + prev.old_len)
            throw MalformedDiff(header_no, "hunks overlap or are out of order");
        }
        ++i;
        int old_rem = hunk.old_len;
        int new_rem = hunk.new_len;
        while (old_rem > 0 || new_rem > 0) {
          if (i >= n) throw MalformedDiff(static_cast<int>(i), "hunk truncated");
          const std::string& body = lines[i];
          const int body_no = static_cast<int>(i) + 1;
          const char c = body.empty() ? ' ' : body[0];
          const std::string content = body.empty() ? std::string() : body.substr(1);
          switch (c) {
            case ' ':
              if (old_rem == 0 || new_rem == 0)
                throw MalformedDiff(body_no, "context line exceeds hunk counts");
              hunk.lines.push_back({LineOp::kContext, content});
              --old_rem;
              --new_rem;
              break;
            case '-':
              if (old_rem == 0) throw MalformedDiff(body_no, "deletion exceeds old count");
              hunk.lines.push_back({LineOp::kDelete, content});
              --old_rem;
              break;
            case '+':
              if (new_rem == 0) throw MalformedDiff(body_no, "addition exceeds new count");
              hunk.lines.push_back({LineOp::kAdd, content});
              --new_rem;
              break;
            case '\\':
              if (hunk.lines.empty() || hunk.lines.back().no_newline)
                throw MalformedDiff(body_no, "misplaced no-newline marker");
              hunk.lines.back().no_newline = true;
              break;
            case '@':
              throw MalformedDiff(body_no, "hunk shorter than its header counts");
            default:
              throw MalformedDiff(body_no, "unexpected line inside hunk");
          }
          ++i;
        }
        if (i < n && starts_with(lines[i], "\\")) {
          if (hunk.lines.empty() || hunk.lines.back().no_newline)
            throw MalformedDiff(static_cast<int>(i) + 1, "misplaced no-newline marker");
          hunk.lines.back().no_newline = true;
          ++i;
        }
        file.hunks.push_back(std::move(hunk));
      }
      if (file.hunks.empty()) throw MalformedDiff(static_cast<int>(i) + 1, "file section without hunks");
      files.push_back(std::move(file));
      after_hunk = true;
      continue;
    }
    if (starts_with(line, "diff --git a/")) {
      // Empty files are created and deleted without any ---/+++ section.
      size_t j = i + 1;
      bool created = false;
      bool deleted = false;
      while (j < n && (starts_with(lines[j], "index ") || starts_with(lines[j], "new file mode") ||
                       starts_with(lines[j], "deleted file mode") ||
                       starts_with(lines[j], "old mode") || starts_with(lines[j], "new mode"))) {
        created = created || starts_with(lines[j], "new file mode");
        deleted = deleted || starts_with(lines[j], "deleted file mode");
        ++j;
      }
      const bool has_body = j < n && starts_with(lines[j], "--- ");
      if (!has_body && (created || deleted)) {
        std::string_view rest = std::string_view(line).substr(13);
        const size_t sep = rest.find(" b/");
        if (sep == std::string_view::npos) throw MalformedDiff(line_no, "malformed diff --git line");
        DiffFile file;
        const std::string path(rest.substr(0, sep));
        file.old_path = created ? std::string(kDevNull) : path;
        file.new_path = deleted ? std::string(kDevNull) : path;
        files.push_back(std::move(file));
        after_hunk = false;
        i = j;
        continue;
      }
    }
    if (starts_with(line, "@@")) throw MalformedDiff(line_no, "hunk outside of a file section");
    if (after_hunk && !line.empty() &&
        (line[0] == '+' || line[0] == '-' || line[0] == ' ') && !starts_with(line, "---"))
      throw MalformedDiff(line_no, "diff line beyond hunk counts");
    after_hunk = false;
    ++i;
  }
  if (files.empty()) throw MalformedDiff(static_cast<int>(n) + 1, "no file headers found");
  return files;
}

std::string render(const DiffFile& file) {
  std::string out;
  const std::string& a = file.is_creation() ? file.new_path : file.old_path;
  const std::string& b = file.is_deletion() ? file.old_path : file.new_path;
  out += "diff --git a/" + a + " b/" + b + "\n";
  if (file.is_creation()) out += "new file mode 100644\n";
  if (file.is_deletion()) out += "deleted file mode 100644\n";
  if (file.hunks.empty()) return out;
  out += "--- " + (file.is_creation() ? std::string(kDevNull) : "a/" + file.old_path) + "\n";
  out += "+++ " + (file.is_deletion() ? std::string(kDevNull) : "b/" + file.new_path) + "\n";
  for (const auto& h : file.hunks) {
    out += "@@ -" + render_range(h.old_start, h.old_len) + " +" +
           render_range(h.new_start, h.new_len) + " @@";
    if (!h.context_header.empty()) out += " " + h.context_header;
    out += "\n";
    for (const auto& l : h.lines) {
      out += l.op == LineOp::kContext ? ' ' : l.op == LineOp::kAdd ? '+' : '-';
      out += l.text;
      out += "\n";
      if (l.no_newline) out += "\\ No newline at end of file\n";
    }
  }
  return out;
}

std::string render(const Patch& patch) {
  std::string out;
  for (const auto& f : patch) out += render(f);
  return out;
}

std::string extract_patch(std::string_view raw_model_output) {
  const std::string text = util::normalize_newlines(raw_model_output);
  const size_t open = text.find("<patch>");
  if (open != std::string::npos) {
    size_t begin = open + 7;
    const size_t close = text.find("</patch>", begin);
    if (close != std::string::npos) {
      if (begin < close && text[begin] == '\n') ++begin;
      return text.substr(begin, close - begin);
    }
  }
  size_t pos = 0;
  while (pos < text.size()) {
    if (std::string_view(text).substr(pos, 6) == "--- a/") return text.substr(pos);
    const size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  throw NoPatchFound("model output contains no <patch> block and no '--- a/' line");
}

std::string normalize(std::string_view patch_text) {
  try {
    return render(parse(patch_text));
  } catch (const MalformedDiff&) {
    return std::string(util::trim(patch_text));
  }
}

namespace {

enum class EditKind { kEqual, kDelete, kInsert };

struct Edit {
  EditKind kind;
  int a;  // index into the old lines (position before the op for inserts)
  int b;  // index into the new lines (position before the op for deletes)
};

// Myers' O(ND) shortest edit script over line keys.
std::vector<Edit> myers(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  int prefix = 0;
  while (prefix < n && prefix < m && a[prefix] == b[prefix]) ++prefix;
  int suffix = 0;
  while (suffix < n - prefix && suffix < m - prefix &&
         a[n - 1 - suffix] == b[m - 1 - suffix])
    ++suffix;

  const int an = n - prefix - suffix;
  const int bn = m - prefix - suffix;
  auto A = [&](int i) -> const std::string& { return a[prefix + i]; };
  auto B = [&](int j) -> const std::string& { return b[prefix + j]; };

  std::vector<Edit> middle;
  if (an == 0 || bn == 0) {
    for (int i = 0; i < an; ++i) middle.push_back({EditKind::kDelete, i, 0});
    for (int j = 0; j < bn; ++j) middle.push_back({EditKind::kInsert, an, j});
  } else {
    const int max = an + bn;
    const int off = max + 1;
    std::vector<int> v(2 * max + 3, 0);
    std::vector<std::vector<int>> trace;
    int found_d = -1;
    for (int d = 0; d <= max && found_d < 0; ++d) {
      trace.emplace_back(v.begin() + (off - d - 1), v.begin() + (off + d + 2));
      for (int k = -d; k <= d; k += 2) {
        int x;
        if (k == -d || (k != d && v[off + k - 1] < v[off + k + 1]))
          x = v[off + k + 1];
        else
          x = v[off + k - 1] + 1;
        int y = x - k;
        while (x < an && y < bn && A(x) == B(y)) {
          ++x;
          ++y;
        }
        v[off + k] = x;
        if (x >= an && y >= bn) {
          found_d = d;
          break;
        }
      }
    }
    // Backtrack through the saved frontiers.
    int x = an;
    int y = bn;
    std::vector<Edit> rev;
    for (int d = found_d; d > 0; --d) {
      const std::vector<int>& tv = trace[static_cast<size_t>(d)];
      auto V = [&](int k) { return tv[static_cast<size_t>(k + d + 1)]; };
      const int k = x - y;
      int prev_k;
      if (k == -d || (k != d && V(k - 1) < V(k + 1)))
        prev_k = k + 1;
      else
        prev_k = k - 1;
      const int prev_x = V(prev_k);
      const int prev_y = prev_x - prev_k;
      while (x > prev_x && y > prev_y) {
        rev.push_back({EditKind::kEqual, x - 1, y - 1});
        --x;
        --y;
      }
      if (x == prev_x)
        rev.push_back({EditKind::kInsert, x, y - 1});
      else
        rev.push_back({EditKind::kDelete, x - 1, y});
      x = prev_x;
      y = prev_y;
    }
    while (x > 0 && y > 0) {
      rev.push_back({EditKind::kEqual, x - 1, y - 1});
      --x;
      --y;
    }
    middle.assign(rev.rbegin(), rev.rend());
  }

  std::vector<Edit> out;
  out.reserve(static_cast<size_t>(prefix + suffix) + middle.size());
  for (int i = 0; i < prefix; ++i) out.push_back({EditKind::kEqual, i, i});
  for (const auto& e : middle) out.push_back({e.kind, e.a + prefix, e.b + prefix});
  for (int i = 0; i < suffix; ++i)
    out.push_back({EditKind::kEqual, n - suffix + i, m - suffix + i});
  return out;
}

struct SplitText {
  std::vector<std::string> lines;
  std::vector<std::string> keys;
  bool missing_newline = false;
};

SplitText split_for_diff(const std::optional<std::string>& content) {
  SplitText s;
  if (!content) return s;
  s.lines = util::split_lines(*content);
  s.missing_newline = !content->empty() && content->back() != '\n';
  s.keys = s.lines;
  if (s.missing_newline && !s.keys.empty()) s.keys.back().push_back('\0');
  return s;
}

std::string git_funcname(const std::vector<std::string>& old_lines, int before) {
  for (int i = before - 1; i >= 0; --i) {
    const std::string& l = old_lines[static_cast<size_t>(i)];
    if (!l.empty() && (std::isalpha(static_cast<unsigned char>(l[0])) || l[0] == '_' || l[0] == '$')) {
      std::string_view sv(l);
      while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.back()))) sv.remove_suffix(1);
      return std::string(sv);
    }
  }
  return {};
}

}  // namespace

std::optional<DiffFile> make_diff(const std::string& path,
                                  const std::optional<std::string>& old_content,
                                  const std::optional<std::string>& new_content,
                                  int context) {
  if (!old_content && !new_content) return std::nullopt;
  if (old_content && new_content && *old_content == *new_content) return std::nullopt;
  const SplitText a = split_for_diff(old_content);
  const SplitText b = split_for_diff(new_content);
  const std::vector<Edit> edits = myers(a.keys, b.keys);

  DiffFile file;
  file.old_path = old_content ? path : std::string(kDevNull);
  file.new_path = new_content ? path : std::string(kDevNull);

  std::vector<size_t> changes;
  for (size_t i = 0; i < edits.size(); ++i)
    if (edits[i].kind != EditKind::kEqual) changes.push_back(i);
  if (changes.empty()) {
    // Only reachable when both sides are empty files of differing presence.
    if (old_content && new_content) return std::nullopt;
    return file;
  }

  const auto last_old = static_cast<int>(a.lines.size()) - 1;
  const auto last_new = static_cast<int>(b.lines.size()) - 1;
  size_t c = 0;
  while (c < changes.size()) {
    size_t first = changes[c];
    size_t last = first;
    size_t next = c + 1;
    while (next < changes.size() &&
           changes[next] - last - 1 <= static_cast<size_t>(2 * context)) {
      last = changes[next];
      ++next;
    }
    const size_t begin = first >= static_cast<size_t>(context) ? first - static_cast<size_t>(context) : 0;
    const size_t end = std::min(edits.size(), last + static_cast<size_t>(context) + 1);

    Hunk hunk;
    int a_pos = -1;
    int b_pos = -1;
    for (size_t i = begin; i < end; ++i) {
      const Edit& e = edits[i];
      HunkLine hl;
      switch (e.kind) {
        case EditKind::kEqual:
          hl = {LineOp::kContext, a.lines[static_cast<size_t>(e.a)]};
          hl.no_newline = a.missing_newline && e.a == last_old;
          break;
        case EditKind::kDelete:
          hl = {LineOp::kDelete, a.lines[static_cast<size_t>(e.a)]};
          hl.no_newline = a.missing_newline && e.a == last_old;
          break;
        case EditKind::kInsert:
          hl = {LineOp::kAdd, b.lines[static_cast<size_t>(e.b)]};
          hl.no_newline = b.missing_newline && e.b == last_new;
          break;
      }
      if (a_pos < 0) {
        a_pos = e.a;
        b_pos = e.b;
      }
      if (hl.op != LineOp::kAdd) ++hunk.old_len;
      if (hl.op != LineOp::kDelete) ++hunk.new_len;
      hunk.lines.push_back(std::move(hl));
    }
    hunk.old_start = hunk.old_len == 0 ? a_pos : a_pos + 1;
    hunk.new_start = hunk.new_len == 0 ? b_pos : b_pos + 1;
    hunk.context_header = git_funcname(a.lines, a_pos);
    file.hunks.push_back(std::move(hunk));
    c = next;
  }
  return file;
}

std::string function_from_context(std::string_view header) {
  header = util::trim(header);
  if (header.empty()) return {};
  const size_t paren = header.find('(');
  if (paren != std::string_view::npos) {
    size_t end = paren;
    while (end > 0 && header[end - 1] == ' ') --end;
    size_t begin = end;
    while (begin > 0 && is_ident_char(header[begin - 1])) --begin;
    if (begin < end) return std::string(header.substr(begin, end - begin));
  }
  size_t end = header.size();
  while (end > 0 && !is_ident_char(header[end - 1])) --end;
  size_t begin = end;
  while (begin > 0 && is_ident_char(header[begin - 1])) --begin;
  return std::string(header.substr(begin, end - begin));
}

int diffstat_lines(const Patch& patch) {
  int total = 0;
  for (const auto& f : patch)
    for (const auto& h : f.hunks) total += h.additions() + h.deletions();
  return total;
}

int changed_lines(const Patch& patch) {
  int total = 0;
  for (const auto& f : patch) {
    for (const auto& h : f.hunks) {
      int dels = 0;
      int adds = 0;
      for (const auto& l : h.lines) {
        if (l.op == LineOp::kContext) {
          total += std::max(dels, adds);
          dels = adds = 0;
        } else if (l.op == LineOp::kDelete) {
          ++dels;
        } else {
          ++adds;
        }
      }
      total += std::max(dels, adds);
    }
  }
  return total;
}

}  // namespace crashgym::patch
