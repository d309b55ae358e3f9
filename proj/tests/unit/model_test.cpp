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

#include "crashgym/errors.hpp"
#include "crashgym/model/sample.hpp"
#include "crashgym/patch/diff.hpp"

namespace crashgym::model {
namespace {

constexpr const char* kKasanLog =
    "[    0.000000] Linux version 6.1.0\n"
    "[   12.100000] random: crng init done\n"
    "[   72.123456][ T5061] ==================================================================\n"
    "[   72.123457][ T5061] BUG: KASAN: slab-out-of-bounds in foo_read+0x1a/0x60 fs/foo/read.c:42\n"
    "[   72.123458][ T5061] Read of size 8 at addr ffff888012345678 by task syz-executor/5061\n"
    "[   72.123459][ T5061] Call Trace:\n"
    "[   72.123460][ T5061]  <TASK>\n"
    "[   72.123461][ T5061]  __dump_stack lib/dump_stack.c:88 [inline]\n"
    "[   72.123462][ T5061]  dump_stack_lvl+0xd9/0x150 lib/dump_stack.c:106\n"
    "[   72.123463][ T5061]  foo_read.isra.0+0x1a/0x60 fs/foo/read.c:42\n"
    "[   72.123464][ T5061]  ? vfs_read+0x10/0x20\n"
    "[   72.123465][ T5061]  </TASK>\n";

TEST(CrashTitle, DetectorPrefixWins) {
  EXPECT_EQ(extract_crash_title(kKasanLog),
            "BUG: KASAN: slab-out-of-bounds in foo_read+0x1a/0x60 fs/foo/read.c:42");
}

TEST(CrashTitle, FallsBackToFirstLine) {
  EXPECT_EQ(extract_crash_title("\n\n[ 1.0] booting\nall good\n"), "booting");
}

TEST(CrashTitle, PanicLine) {
  EXPECT_EQ(extract_crash_title("x\nKernel panic - not syncing: Fatal exception\n"),
            "Kernel panic - not syncing: Fatal exception");
}

TEST(CrashTitle, EmptyReport) {
  EXPECT_THROW(extract_crash_title(" \n\n"), EmptyReport);
  EXPECT_THROW(extract_crash_title(""), EmptyReport);
}

TEST(CrashFrames, ExtractsFunctionsAndFiles) {
  auto frames = extract_frames(kKasanLog);
  ASSERT_EQ(frames.size(), 4u);
  EXPECT_EQ(frames[0], (Frame{"__dump_stack", "lib/dump_stack.c"}));
  EXPECT_EQ(frames[1], (Frame{"dump_stack_lvl", "lib/dump_stack.c"}));
  EXPECT_EQ(frames[2], (Frame{"foo_read", "fs/foo/read.c"}));
  EXPECT_EQ(frames[3], (Frame{"vfs_read", std::nullopt}));
}

TEST(CrashReport, InvariantsHold) {
  CrashReport r = make_crash_report(kKasanLog);
  EXPECT_EQ(r.line_count, 12);
  EXPECT_NE(r.raw_console.find(r.crash_title), std::string::npos);
}

std::string replace_one() {
  return "--- a/a.c\n+++ b/a.c\n@@ -1,3 +1,3 @@ int f(void)\n x\n-y\n+z\n w\n";
}

TEST(ClassifyFix, Definitions) {
  EXPECT_EQ(classify_fix(replace_one()), FixClass::kSingleLine);
  EXPECT_EQ(classify_fix("--- a/a.c\n+++ b/a.c\n@@ -1,2 +1,4 @@ int f(void)\n x\n+y\n+z\n w\n"),
            FixClass::kSingleFunctionMultiLine);
  EXPECT_EQ(classify_fix("--- a/a.c\n+++ b/a.c\n@@ -1 +1 @@ int f(void)\n-y\n+z\n"
                         "@@ -9 +9 @@ int g(void)\n-y\n+z\n"),
            FixClass::kMultiFunctionSingleFile);
  EXPECT_EQ(classify_fix(replace_one() + "--- a/b.c\n+++ b/b.c\n@@ -1 +1 @@\n-y\n+z\n"),
            FixClass::kMultiFile);
  EXPECT_THROW(classify_fix("garbage"), patch::MalformedDiff);
}

TEST(ClassifyFix, AnonymousHunksShareOneFunction) {
  EXPECT_EQ(classify_fix("--- a/a.c\n+++ b/a.c\n@@ -1 +1 @@\n-y\n+z\n@@ -9 +9 @@\n-y\n+z\n"),
            FixClass::kSingleFunctionMultiLine);
}

BenchSample sample_with(const std::string& fix, const std::string& crash) {
  BenchSample s;
  s.bug_id = "b";
  s.commit_bug = std::string(40, 'a');
  s.commit_fix = std::string(40, 'b');
  s.commit_parent = std::string(40, 'c');
  s.crash_parent = make_crash_report(crash);
  s.gold_fix = fix;
  s.reproducer = {ReproducerKind::kMockScript, std::string("r1\n\x01\x02", 5)};
  s.kernel_version = "5.10.1";
  s.fix_year = 2021;
  s.subsystem = "net";
  return s;
}

TEST(FixStats, EmptyIsZero) {
  SummaryStats s = fix_stats({});
  EXPECT_EQ(s.count, 0);
  EXPECT_EQ(s.lines_avg, 0);
}

TEST(FixStats, SingleThreeLineFix) {
  std::string fix = "--- a/a.c\n+++ b/a.c\n@@ -1,2 +1,5 @@ f()\n x\n+1\n+2\n+3\n y\n";
  SummaryStats s = fix_stats({sample_with(fix, "BUG: x\nl2\nl3\nl4\n")});
  EXPECT_DOUBLE_EQ(s.lines_avg, 3.0);
  EXPECT_EQ(s.lines_max, 3);
  EXPECT_DOUBLE_EQ(s.files_avg, 1.0);
  EXPECT_EQ(s.files_max, 1);
  EXPECT_DOUBLE_EQ(s.crash_lines_avg, 4.0);
  EXPECT_EQ(s.crash_lines_max, 4);
}

TEST(FixStats, AverageOfTwo) {
  std::string two = "--- a/a.c\n+++ b/a.c\n@@ -1 +1,3 @@\n x\n+1\n+2\n";
  std::string four = "--- a/a.c\n+++ b/a.c\n@@ -1 +1,5 @@\n x\n+1\n+2\n+3\n+4\n";
  SummaryStats s = fix_stats({sample_with(two, "x\n"), sample_with(four, "x\n")});
  EXPECT_DOUBLE_EQ(s.lines_avg, 3.0);
  EXPECT_EQ(s.lines_max, 4);
}

TEST(FixStats, ClassInvariants) {
  for (const std::string& fix :
       {replace_one(), replace_one() + "--- a/b.c\n+++ b/b.c\n@@ -1 +1 @@\n-y\n+z\n"}) {
    const FixClass c = classify_fix(fix);
    if (c == FixClass::kMultiFile) {
      EXPECT_GE(fix_files_changed(fix), 2);
    }
    if (c == FixClass::kSingleLine) {
      EXPECT_EQ(fix_lines_changed(fix), 1);
    }
  }
}

TEST(BenchSampleJson, RoundTrip) {
  BenchSample s = sample_with(replace_one(), kKasanLog);
  s.bisect = std::string(40, 'd');
  s.email_refs = {"https://lore.kernel.org/x"};
  nlohmann::json j = s;
  EXPECT_EQ(j["reproducer"]["kind"], "mock-script");
  EXPECT_TRUE(j["reproducer"]["data"].is_string());
  EXPECT_EQ(j.get<BenchSample>(), s);
  EXPECT_NO_THROW(validate(s));
}

TEST(BenchSampleValidate, ReportsViolations) {
  BenchSample s = sample_with("nope", "x");
  s.commit_fix = s.commit_bug;
  s.crash_parent.raw_console = "";
  try {
    validate(s);
    FAIL();
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("distinct"), std::string::npos);
    EXPECT_NE(msg.find("crash_parent"), std::string::npos);
    EXPECT_NE(msg.find("gold_fix"), std::string::npos);
  }
}

TEST(Distribution, VersionBuckets) {
  EXPECT_EQ(version_bucket("5.10.1"), "5.x");
  EXPECT_EQ(version_bucket("6.x.x"), "6.x");
}

}  // namespace
}  // namespace crashgym::model
