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

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "crashgym/patch/apply.hpp"
#include "crashgym/patch/diff.hpp"
#include "crashgym/prompt/template.hpp"
#include "crashgym/util/fs.hpp"

namespace crashgym::patch {
namespace {

constexpr const char* kSimple =
    "--- a/mm/slab.c\n"
    "+++ b/mm/slab.c\n"
    "@@ -10,3 +10,4 @@ static void free_obj(struct kmem_cache *c, void *p)\n"
    " a\n"
    "-b\n"
    "+B\n"
    "+C\n"
    " d\n";

TEST(PatchParse, SimpleHunk) {
  Patch p = parse(kSimple);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].old_path, "mm/slab.c");
  EXPECT_EQ(p[0].new_path, "mm/slab.c");
  ASSERT_EQ(p[0].hunks.size(), 1u);
  const Hunk& h = p[0].hunks[0];
  EXPECT_EQ(h.old_start, 10);
  EXPECT_EQ(h.old_len, 3);
  EXPECT_EQ(h.new_len, 4);
  EXPECT_EQ(h.additions(), 2);
  EXPECT_EQ(h.deletions(), 1);
  EXPECT_EQ(function_from_context(h.context_header), "free_obj");
}

TEST(PatchParse, ExamplePatchFromTemplate) {
  Patch p = parse(prompt::kExamplePatch);
  ASSERT_EQ(p.size(), 1u);
  ASSERT_EQ(p[0].hunks.size(), 1u);
  EXPECT_EQ(p[0].hunks[0].old_len, 27);
  EXPECT_EQ(p[0].hunks[0].new_len, 35);
  EXPECT_EQ(render(p), std::string("diff --git a/file.py b/file.py\n") +
                           std::string(prompt::kExamplePatch));
}

TEST(PatchParse, CountMismatchIsMalformed) {
  const char* bad =
      "--- a/x.c\n"
      "+++ b/x.c\n"
      "@@ -1,3 +1,3 @@\n"
      " a\n"
      "-b\n"
      "+c\n";
  EXPECT_THROW(parse(bad), MalformedDiff);
}

TEST(PatchParse, ExtraLineAfterHunkIsMalformed) {
  std::string bad = std::string(kSimple) + "+extra\n";
  try {
    parse(bad);
    FAIL();
  } catch (const MalformedDiff& e) {
    EXPECT_EQ(e.line_no(), 9);
  }
}

TEST(PatchParse, EmptyIsMalformed) { EXPECT_THROW(parse(""), MalformedDiff); }

TEST(PatchParse, BadHeaderIsMalformed) {
  EXPECT_THROW(parse("--- a/x\n+++ b/x\n@@ -1,x +1 @@\n a\n"), MalformedDiff);
  EXPECT_THROW(parse("--- a/x\nnot plus\n"), MalformedDiff);
  EXPECT_THROW(parse("@@ -1 +1 @@\n-a\n+b\n"), MalformedDiff);
}

TEST(PatchParse, SkipsProseAroundFileSections) {
  std::string text = "Here is the fix:\n```diff\ndiff --git a/mm/slab.c b/mm/slab.c\n" +
                     std::string(kSimple) + "```\nThanks.\n";
  Patch p = parse(text);
  ASSERT_EQ(p.size(), 1u);
}

TEST(PatchParse, NoNewlineMarker) {
  const char* text =
      "--- a/x\n+++ b/x\n@@ -1 +1 @@\n-a\n\\ No newline at end of file\n+b\n";
  Patch p = parse(text);
  ASSERT_EQ(p[0].hunks[0].lines.size(), 2u);
  EXPECT_TRUE(p[0].hunks[0].lines[0].no_newline);
  EXPECT_FALSE(p[0].hunks[0].lines[1].no_newline);
}

TEST(PatchExtract, PatchBlockWins) {
  std::string out = "prose\r\n--- a/ignored\r\n<patch>\r\n--- a/x\r\n+++ b/x\r\n</patch>\r\n";
  EXPECT_EQ(extract_patch(out), "--- a/x\n+++ b/x\n");
}

TEST(PatchExtract, BareDiffAfterPreamble) {
  std::string out = std::string("I think the bug is here.\n") + kSimple;
  EXPECT_EQ(extract_patch(out), kSimple);
}

TEST(PatchExtract, ProseOnly) {
  EXPECT_THROW(extract_patch("I cannot fix this bug."), NoPatchFound);
}

TEST(PatchNormalize, EquivalentSpellingsCollapse) {
  std::string a = std::string("noise\n") + kSimple;
  std::string b = std::string("diff --git a/mm/slab.c b/mm/slab.c\nindex 1..2\n") + kSimple;
  EXPECT_EQ(normalize(a), normalize(b));
  EXPECT_EQ(normalize("  junk \n"), "junk");
}

TEST(PatchSize, ChangedLinesCountsReplacementsOnce) {
  Patch p = parse(kSimple);
  EXPECT_EQ(diffstat_lines(p), 3);
  EXPECT_EQ(changed_lines(p), 2);
}

TEST(PatchContext, FunctionName) {
  EXPECT_EQ(function_from_context("static int foo_bar(int x)"), "foo_bar");
  EXPECT_EQ(function_from_context("struct kmem_cache {"), "kmem_cache");
  EXPECT_EQ(function_from_context(""), "");
  EXPECT_EQ(function_from_context("void (*fn)(void)"), "void");
}

TEST(MakeDiff, GitStyleFunctionHeader) {
  std::string before = "int f(void)\n{\n\tint a;\n\tint b;\n\tint c;\n\tint d;\n\treturn 0;\n}\n";
  std::string after = "int f(void)\n{\n\tint a;\n\tint b;\n\tint c;\n\tint x;\n\treturn 0;\n}\n";
  auto d = make_diff("f.c", before, after);
  ASSERT_TRUE(d);
  ASSERT_EQ(d->hunks.size(), 1u);
  EXPECT_EQ(d->hunks[0].old_start, 3);
  EXPECT_EQ(d->hunks[0].context_header, "int f(void)");
  EXPECT_FALSE(make_diff("f.c", before, before));
}

TEST(Apply, OffsetSearchAndAlreadyApplied) {
  FileTree tree{{"mm/slab.c", "x\nx\na\nb\nd\n"}};
  Patch p = parse(kSimple);
  ChangedFiles changed = apply_patch(tree, p);
  EXPECT_EQ(tree["mm/slab.c"], "x\nx\na\nB\nC\nd\n");
  EXPECT_EQ(changed.modified, std::vector<std::string>{"mm/slab.c"});
  EXPECT_THROW(apply_patch(tree, p), AlreadyApplied);
}

TEST(Apply, OutsideWindowMismatches) {
  FileTree tree{{"mm/slab.c", "a\nb\nd\n"}};
  Patch p = parse(kSimple);
  ApplyOptions strict;
  strict.fuzz_window = 5;
  EXPECT_THROW(apply_patch(tree, p, strict), HunkMismatch);
  strict.fuzz_window = 20;
  EXPECT_NO_THROW(apply_patch(tree, p, strict));
}

TEST(Apply, MissingFile) {
  FileTree tree;
  EXPECT_THROW(apply_patch(tree, parse(kSimple)), MissingFile);
}

TEST(Apply, CreateAndDelete) {
  FileTree tree{{"old.c", "gone\n"}};
  auto create = make_diff("new.c", std::nullopt, std::string("hello\n"));
  auto remove = make_diff("old.c", std::string("gone\n"), std::nullopt);
  Patch p = parse(render(Patch{*create, *remove}));
  ChangedFiles changed = apply_patch(tree, p);
  EXPECT_EQ(tree, (FileTree{{"new.c", "hello\n"}}));
  EXPECT_EQ(changed.created, std::vector<std::string>{"new.c"});
  EXPECT_EQ(changed.deleted, std::vector<std::string>{"old.c"});
}

TEST(Apply, WorkspaceIsAtomic) {
  util::TempDir dir;
  util::write_file(dir.path() / "a.c", "one\ntwo\nthree\n");
  util::write_file(dir.path() / "b.c", "alpha\nbeta\n");
  const std::string before = util::tree_digest(dir.path());
  auto good = make_diff("a.c", std::string("one\ntwo\nthree\n"), std::string("one\n2\nthree\n"));
  auto bad = make_diff("b.c", std::string("gamma\n"), std::string("delta\n"));
  EXPECT_THROW(apply_patch(dir.path(), Patch{*good, *bad}), HunkMismatch);
  EXPECT_EQ(util::tree_digest(dir.path()), before);
  apply_patch(dir.path(), Patch{*good});
  EXPECT_EQ(util::read_file(dir.path() / "a.c"), "one\n2\nthree\n");
}

TEST(Apply, RejectsEscapingPaths) {
  FileTree tree{{"x", "a\n"}};
  Patch p = parse("--- a/../x\n+++ b/../x\n@@ -1 +1 @@\n-a\n+b\n");
  EXPECT_THROW(apply_patch(tree, p), ValidationError);
}

// Generative round trip: random trees, random edits, diff, render, parse,
// apply, compare.
class RoundTrip : public ::testing::Test {
 protected:
  std::mt19937_64 rng{20260101};

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  std::string random_line() {
    static const char* kWords[] = {"{", "}", "", "return 0;", "int x;", "x++;", "if (x)",
                                   "foo();", "bar(x);", "/* c */"};
    if (uniform(0, 3) == 0) return "line " + std::to_string(uniform(0, 50));
    return kWords[uniform(0, 9)];
  }

  std::string random_file() {
    std::string s;
    const int n = uniform(0, 40);
    for (int i = 0; i < n; ++i) s += random_line() + "\n";
    if (!s.empty() && uniform(0, 5) == 0) s.pop_back();
    return s;
  }

  std::string edit(const std::string& content) {
    std::vector<std::string> lines;
    {
      size_t start = 0;
      while (start < content.size()) {
        size_t nl = content.find('\n', start);
        if (nl == std::string::npos) nl = content.size();
        lines.push_back(content.substr(start, nl - start));
        start = nl + 1;
      }
    }
    bool eol = content.empty() || content.back() == '\n';
    const int ops = uniform(1, 6);
    for (int k = 0; k < ops; ++k) {
      const int kind = uniform(0, 3);
      if (kind == 0 || lines.empty()) {
        lines.insert(lines.begin() + uniform(0, static_cast<int>(lines.size())), random_line());
      } else if (kind == 1) {
        lines.erase(lines.begin() + uniform(0, static_cast<int>(lines.size()) - 1));
      } else if (kind == 2) {
        lines[static_cast<size_t>(uniform(0, static_cast<int>(lines.size()) - 1))] = random_line();
      } else {
        eol = !eol;
      }
    }
    std::string out;
    for (size_t i = 0; i < lines.size(); ++i) {
      out += lines[i];
      if (i + 1 < lines.size() || eol) out += "\n";
    }
    return out;
  }
};

TEST_F(RoundTrip, ThousandRandomEdits) {
  int applied = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    FileTree before;
    const int files = uniform(1, 4);
    for (int f = 0; f < files; ++f) before["dir/f" + std::to_string(f) + ".c"] = random_file();
    FileTree after = before;
    for (auto& [path, content] : after)
      if (uniform(0, 2) != 0) content = edit(content);
    if (uniform(0, 4) == 0) after.erase(after.begin());
    if (uniform(0, 4) == 0) after["new/created.c"] = random_file() + "x\n";

    Patch edit_patch;
    std::set<std::string> paths;
    for (const auto& [p, c] : before) paths.insert(p);
    for (const auto& [p, c] : after) paths.insert(p);
    for (const auto& path : paths) {
      std::optional<std::string> a, b;
      if (before.count(path)) a = before.at(path);
      if (after.count(path)) b = after.at(path);
      if (auto d = make_diff(path, a, b)) edit_patch.push_back(*d);
    }
    if (edit_patch.empty()) continue;
    const std::string text = render(edit_patch);
    Patch parsed = parse(text);
    ASSERT_EQ(parsed, edit_patch) << text;
    FileTree tree = before;
    apply_patch(tree, parsed);
    ASSERT_EQ(tree, after) << text;
    ++applied;
  }
  EXPECT_GT(applied, 900);
}

}  // namespace
}  // namespace crashgym::patch
