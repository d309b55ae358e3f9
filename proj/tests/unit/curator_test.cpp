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

#include "crashgym/curate/curator.hpp"
#include "crashgym/errors.hpp"
#include "crashgym/mock/minikernel.hpp"
#include "crashgym/util/fs.hpp"
#include "crashgym/util/process.hpp"
#include "crashgym/util/text.hpp"
#include "crashgym/worker/executors.hpp"

namespace crashgym::curate {
namespace {

namespace fs = std::filesystem;

TEST(ParentCommit, LinearAndMerge) {
  MemoryCommitGraph g({{"A", {}}, {"B", {"A"}}, {"C", {"B"}}, {"M", {"P1", "P2"}}});
  EXPECT_EQ(resolve_parent_commit("C", g), "B");
  EXPECT_EQ(resolve_parent_commit("M", g), "P1");
  EXPECT_THROW(resolve_parent_commit("A", g), RootCommit);
  EXPECT_THROW(resolve_parent_commit("Z", g), UnknownCommit);
}

TEST(ParentCommit, RandomDagsMatchEdgeScan) {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 60; ++round) {
    const int n = std::uniform_int_distribution<int>(1, 200)(rng);
    struct Edge {
      int child, order, parent;
    };
    std::vector<Edge> edges;
    std::map<std::string, std::vector<std::string>> parents;
    for (int i = 0; i < n; ++i) {
      std::vector<std::string> ps;
      if (i > 0) {
        const int k = std::uniform_int_distribution<int>(0, std::min(i, 3))(rng);
        std::set<int> used;
        for (int j = 0; j < k; ++j) {
          const int p = std::uniform_int_distribution<int>(0, i - 1)(rng);
          if (!used.insert(p).second) continue;
          edges.push_back({i, static_cast<int>(ps.size()), p});
          ps.push_back("c" + std::to_string(p));
        }
      }
      parents["c" + std::to_string(i)] = ps;
    }
    std::shuffle(edges.begin(), edges.end(), rng);
    MemoryCommitGraph g(parents);
    for (int i = 0; i < n; ++i) {
      std::optional<int> first;
      for (const auto& e : edges)
        if (e.child == i && e.order == 0) first = e.parent;
      const std::string id = "c" + std::to_string(i);
      if (first)
        EXPECT_EQ(resolve_parent_commit(id, g), "c" + std::to_string(*first));
      else
        EXPECT_THROW(resolve_parent_commit(id, g), RootCommit);
    }
  }
}

std::string git_in(const fs::path& repo, std::vector<std::string> args) {
  args.insert(args.begin(), {"git", "-c", "user.name=t", "-c", "user.email=t@t.invalid"});
  util::RunOptions o;
  o.cwd = repo;
  auto r = util::run_process(args, o);
  EXPECT_TRUE(r.ok()) << r.err;
  return std::string(util::trim(r.out));
}

TEST(ParentCommit, GitMergeUsesFirstParent) {
  util::TempDir dir("crashgym-dag");
  const auto repo = dir.path();
  git_in(repo, {"init", "-q", "--initial-branch=master"});
  util::write_file(repo / "a", "1\n");
  git_in(repo, {"add", "-A"});
  git_in(repo, {"commit", "-q", "-m", "a"});
  const auto base = git_in(repo, {"rev-parse", "HEAD"});
  git_in(repo, {"checkout", "-q", "-b", "side"});
  util::write_file(repo / "b", "2\n");
  git_in(repo, {"add", "-A"});
  git_in(repo, {"commit", "-q", "-m", "b"});
  const auto side = git_in(repo, {"rev-parse", "HEAD"});
  git_in(repo, {"checkout", "-q", "master"});
  util::write_file(repo / "c", "3\n");
  git_in(repo, {"add", "-A"});
  git_in(repo, {"commit", "-q", "-m", "c"});
  const auto main_tip = git_in(repo, {"rev-parse", "HEAD"});
  git_in(repo, {"merge", "-q", "--no-ff", "-m", "merge", "side"});
  const auto merge = git_in(repo, {"rev-parse", "HEAD"});

  build::GitCache cache(dir.path() / "cache");
  GitCommitGraph g(cache, repo.string());
  EXPECT_EQ(resolve_parent_commit(merge, g), main_tip);
  EXPECT_EQ(g.parents(merge), (std::vector<std::string>{main_tip, side}));
  EXPECT_EQ(resolve_parent_commit(side, g), base);
  EXPECT_THROW(resolve_parent_commit(base, g), RootCommit);
}

// A worker stack, an inline cluster and a curator over one repository.
struct Harness {
  explicit Harness(const std::string& git_url, int vms = 4)
      : home("crashgym-cur"),
        stack(worker::StackConfig{home.path(), "mock", "", ""}),
        cluster(options(), stack.executors(), clock),
        graph(stack.git(), git_url),
        curator(cluster, graph, CurationConfig{git_url, vms, 10, 0}) {}

  static orch::ClusterOptions options() {
    orch::ClusterOptions o;
    o.db_path = ":memory:";
    o.scheduler = worker::default_scheduler_options();
    return o;
  }

  util::TempDir home;
  orch::SystemClock clock;
  worker::WorkerStack stack;
  orch::LocalCluster cluster;
  GitCommitGraph graph;
  Curator curator;
};

class CuratorTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new util::TempDir("crashgym-mkc");
    mk_ = new mock::MiniKernel(mock::make_minikernel(dir_->path() / "repo"));
  }
  static void TearDownTestSuite() {
    delete mk_;
    delete dir_;
  }
  static util::TempDir* dir_;
  static mock::MiniKernel* mk_;
};

util::TempDir* CuratorTest::dir_ = nullptr;
mock::MiniKernel* CuratorTest::mk_ = nullptr;

TEST_F(CuratorTest, VerdictsFollowTheScript) {
  Harness h(mk_->git_url);
  for (const auto& bug : mk_->bugs) {
    const auto c = h.curator.validate_sample(bug.raw);
    const auto& v = c.verdict;
    EXPECT_EQ(v.accepted, v.check1_bug_crashes && v.check2_parent_crashes && v.check3_fix_clean);
    EXPECT_EQ(v.evidence.size(), 3u);
    switch (bug.expect) {
      case mock::Expectation::kAccept:
        EXPECT_TRUE(v.accepted) << bug.raw.bug_id;
        ASSERT_TRUE(c.sample.has_value());
        EXPECT_FALSE(c.sample->crash_parent.crash_title.empty());
        EXPECT_NO_THROW(model::validate(*c.sample));
        break;
      case mock::Expectation::kNoCrashAtBug:
        EXPECT_FALSE(v.check1_bug_crashes);
        EXPECT_TRUE(v.check2_parent_crashes);
        EXPECT_TRUE(v.check3_fix_clean);
        break;
      case mock::Expectation::kNoCrashAtParent:
        EXPECT_TRUE(v.check1_bug_crashes);
        EXPECT_FALSE(v.check2_parent_crashes);
        EXPECT_TRUE(v.check3_fix_clean);
        break;
      case mock::Expectation::kFixStillCrashes:
        EXPECT_TRUE(v.check1_bug_crashes);
        EXPECT_TRUE(v.check2_parent_crashes);
        EXPECT_FALSE(v.check3_fix_clean);
        break;
    }
    if (!v.accepted) EXPECT_FALSE(c.sample.has_value());
  }
}

TEST_F(CuratorTest, DatasetIsIdempotent) {
  std::string first;
  for (int run = 0; run < 2; ++run) {
    Harness h(mk_->git_url);
    const auto result = h.curator.build_dataset(mk_->records());
    EXPECT_EQ(result.samples.size(), 20u);
    EXPECT_EQ(result.rejected.size(), 3u);
    EXPECT_TRUE(result.quarantined.empty());
    EXPECT_EQ(result.report.stats.count, 20);
    const auto out = h.home.path() / "dataset";
    write_dataset(out.string(), result);
    const auto text = util::read_file(out / "samples.jsonl");
    if (run == 0)
      first = text;
    else
      EXPECT_EQ(text, first);
    EXPECT_EQ(model::load_samples((out / "samples.jsonl").string()), result.samples);
    const auto report = nlohmann::json::parse(util::read_file(out / "report.json"));
    EXPECT_EQ(report.at("rejected").size(), 3u);
  }
}

TEST_F(CuratorTest, BootFailureQuarantines) {
  Harness h(mk_->git_url);
  auto raw = mk_->bugs.front().raw;
  raw.config += "CONFIG_CRASHGYM_NO_BOOT=y\n";
  EXPECT_THROW(h.curator.validate_sample(raw), InfrastructureError);
  const auto result = h.curator.build_dataset({raw});
  ASSERT_EQ(result.quarantined.size(), 1u);
  EXPECT_NE(result.quarantined[0].reason->find("BootFailure"), std::string::npos);
  EXPECT_TRUE(result.samples.empty());
  EXPECT_TRUE(result.rejected.empty());
}

TEST_F(CuratorTest, EmptyInput) {
  Harness h(mk_->git_url);
  const auto result = h.curator.build_dataset({});
  EXPECT_TRUE(result.samples.empty());
  EXPECT_TRUE(result.rejected.empty());
  EXPECT_TRUE(result.report.by_class.empty() || result.report.stats.count == 0);
}

TEST(RawRecord, JsonRoundTrip) {
  RawBugRecord r;
  r.bug_id = "b1";
  r.commit_bug = std::string(40, 'a');
  r.commit_fix = std::string(40, 'b');
  r.config = "CONFIG_X=y\n";
  r.reproducer = {model::ReproducerKind::kSyz, "r0 = socket()\n"};
  r.gold_fix = "--- a/x\n+++ b/x\n";
  r.subsystem = "net";
  r.year = 2021;
  r.kernel_version = "5.15";
  r.bisect = std::string(40, 'c');
  EXPECT_EQ(nlohmann::json(r).get<RawBugRecord>(), r);
  EXPECT_THROW(nlohmann::json::object().get<RawBugRecord>(), ValidationError);
}

// Marker with p = 0.6 at the bug and parent commits, gone at the fix.
TEST(FlakyCuration, ReplicationRaisesAcceptance) {
  util::TempDir dir("crashgym-flaky");
  const auto repo = dir.path() / "repo";
  fs::create_directories(repo);
  git_in(repo, {"init", "-q", "--initial-branch=master"});
  util::write_file(repo / "drivers/f.c", "int f_probe(int a)\n{\n\treturn a;\n}\n");
  git_in(repo, {"add", "-A"});
  git_in(repo, {"commit", "-q", "-m", "base"});
  util::write_file(repo / "drivers/f.c",
                   "int f_probe(int a)\n{\n\tcrashgym_fault(\"repro-f\", 0.6, 20, \"WARNING: bad unlock in f_probe\");\n"
                   "\treturn a;\n}\n");
  git_in(repo, {"add", "-A"});
  git_in(repo, {"commit", "-q", "-m", "bug"});
  const auto bug = git_in(repo, {"rev-parse", "HEAD"});
  util::write_file(repo / "drivers/f.c", "int f_probe(int a)\n{\n\treturn a;\n}\n");
  git_in(repo, {"add", "-A"});
  git_in(repo, {"commit", "-q", "-m", "fix"});
  const auto fix = git_in(repo, {"rev-parse", "HEAD"});

  const int trials = 25;
  auto accepted = [&](int vms) {
    Harness h(repo.string(), vms);
    std::vector<RawBugRecord> raws;
    for (int t = 0; t < trials; ++t) {
      RawBugRecord r;
      r.bug_id = "flaky-" + std::to_string(100 + t);
      r.commit_bug = bug;
      r.commit_fix = fix;
      r.reproducer = {model::ReproducerKind::kMockScript, "repro-f\n"};
      r.gold_fix =
          "--- a/drivers/f.c\n+++ b/drivers/f.c\n@@ -1,5 +1,4 @@\n int f_probe(int a)\n {\n"
          "-\tcrashgym_fault(\"repro-f\", 0.6, 20, \"WARNING: bad unlock in f_probe\");\n \treturn a;\n }\n";
      raws.push_back(r);
    }
    return static_cast<int>(h.curator.build_dataset(raws).samples.size());
  };
  // Expected acceptance is (1 - 0.4^M)^2: 0.9987 for M = 8, 0.36 for M = 1.
  EXPECT_GE(accepted(8), trials - 1);
  EXPECT_LE(accepted(1), trials / 2 + 4);
}

}  // namespace
}  // namespace crashgym::curate
