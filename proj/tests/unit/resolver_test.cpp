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

#include <set>

#include "crashgym/curate/curator.hpp"
#include "crashgym/errors.hpp"
#include "crashgym/mock/minikernel.hpp"
#include "crashgym/patch/diff.hpp"
#include "crashgym/resolve/resolver.hpp"
#include "crashgym/util/fs.hpp"
#include "mock_stack.hpp"

namespace crashgym::resolve {
namespace {

namespace fs = std::filesystem;
using testing::MockStack;

class ResolverTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new util::TempDir("crashgym-res");
    mk_ = new mock::MiniKernel(mock::make_minikernel(dir_->path() / "repo"));
    MockStack s;
    curate::GitCommitGraph graph(s.stack.git(), mk_->git_url);
    curate::Curator curator(s.cluster, graph, {mk_->git_url, 2, 10, 0});
    samples_ = new std::vector<model::BenchSample>(curator.build_dataset(mk_->records()).samples);
  }
  static void TearDownTestSuite() {
    delete samples_;
    delete mk_;
    delete dir_;
  }

  const model::BenchSample& sample(size_t i) const { return samples_->at(i); }

  prompt::AssembledPrompt prompt_for(const model::BenchSample& s, MockStack& st) {
    GitSourceView view(st.stack.git(), mk_->git_url);
    auto r = prompt::assemble(s, view.retrieve(s, retrieval::Mode::kOracle),
                              [&](const std::string& p) { return view.read(s, p); }, {});
    return std::get<prompt::AssembledPrompt>(r);
  }

  // A diff against the parent tree of `s` that rewrites the gold file.
  std::string edit_gold_file(MockStack& st, const model::BenchSample& s,
                             const std::function<std::string(std::string)>& edit,
                             bool corrupt_context = false) {
    const auto path = retrieval::oracle_files(s).front();
    auto old = st.stack.git().read_file(mk_->git_url, s.commit_parent, path);
    EXPECT_TRUE(old.has_value());
    std::string base = *old;
    if (corrupt_context) base.insert(0, "/* drift */\n");
    auto d = patch::make_diff(path, base, edit(base));
    EXPECT_TRUE(d.has_value());
    return "<patch>\n" + patch::render(*d) + "</patch>\n";
  }

  static util::TempDir* dir_;
  static mock::MiniKernel* mk_;
  static std::vector<model::BenchSample>* samples_;
};

util::TempDir* ResolverTest::dir_ = nullptr;
mock::MiniKernel* ResolverTest::mk_ = nullptr;
std::vector<model::BenchSample>* ResolverTest::samples_ = nullptr;

TEST_F(ResolverTest, DatasetIsCurated) { ASSERT_EQ(samples_->size(), 20u); }

TEST_F(ResolverTest, GoldFixResolvesAndReplays) {
  MockStack st;
  Resolver resolver(st.cluster, {mk_->git_url});
  const auto& s = sample(0);
  ScriptedProvider provider(ScriptedProvider::Outputs{{s.bug_id, {"Here is the fix:\n<patch>\n" + s.gold_fix + "</patch>"}}});
  const auto out = resolver.run_trial(s, prompt_for(s, st), provider, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].extracted);
  EXPECT_TRUE(out[0].applied);
  EXPECT_TRUE(out[0].resolved);
  EXPECT_FALSE(out[0].failure_stage.has_value());
  EXPECT_EQ(out[0].job_ids.size(), 1u);
  EXPECT_EQ(out[0].setting, "oracle");
  EXPECT_FALSE(resolver.replay(s, out[0]).crashed);
}

TEST_F(ResolverTest, FailureStages) {
  MockStack st;
  Resolver resolver(st.cluster, {mk_->git_url});
  const auto& s = sample(1);
  const std::vector<std::string> texts = {
      "I think the bug is in the allocator, but I cannot produce a patch.",
      "<patch>\n--- a/x.c\n+++ b/x.c\n@@ -1,3 +1,3 @@\n only one line\n</patch>",
      edit_gold_file(st, s, [](std::string t) { return "// hello\n" + t; }, true),
      edit_gold_file(st, s, [](std::string t) { return t + "#error broken build\n"; }),
      edit_gold_file(st, s, [](std::string t) { return "/* harmless */\n" + t; }),
  };
  ScriptedProvider provider(ScriptedProvider::Outputs{{s.bug_id, texts}});
  const auto out = resolver.run_trial(s, prompt_for(s, st), provider, 10);
  ASSERT_EQ(out.size(), texts.size());
  EXPECT_EQ(out[0].failure_stage, FailureStage::kNoPatch);
  EXPECT_FALSE(out[0].extracted);
  EXPECT_TRUE(out[0].job_ids.empty());
  EXPECT_EQ(out[1].failure_stage, FailureStage::kMalformed);
  EXPECT_TRUE(out[1].extracted);
  EXPECT_EQ(out[2].failure_stage, FailureStage::kHunkMismatch);
  EXPECT_FALSE(out[2].applied);
  EXPECT_EQ(out[3].failure_stage, FailureStage::kCompileError);
  EXPECT_FALSE(out[3].applied);
  EXPECT_EQ(out[4].failure_stage, FailureStage::kStillCrashes);
  EXPECT_TRUE(out[4].applied);
  EXPECT_FALSE(out[4].resolved);
  for (const auto& o : out) {
    EXPECT_FALSE(o.infrastructure);
    EXPECT_EQ(o.candidates, 5);
    const auto back = nlohmann::json(o).get<TrialOutcome>();
    EXPECT_EQ(back, o);
  }
}

TEST_F(ResolverTest, DuplicatesShareOneChain) {
  MockStack st;
  Resolver resolver(st.cluster, {mk_->git_url});
  const auto& s = sample(2);
  const std::string gold = "<patch>\n" + s.gold_fix + "</patch>";
  ScriptedProvider provider(ScriptedProvider::Outputs{{s.bug_id, {gold, "Fix:\n" + s.gold_fix, gold}}});
  const auto out = resolver.run_trial(s, prompt_for(s, st), provider, 3);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(resolver.chains_submitted(), 1);
  for (const auto& o : out) {
    EXPECT_TRUE(o.resolved);
    EXPECT_EQ(o.job_ids, out[0].job_ids);
  }
}

TEST_F(ResolverTest, SingleOutputProviderIsCalledPerCandidate) {
  MockStack st;
  Resolver resolver(st.cluster, {mk_->git_url});
  const auto& s = sample(3);
  ScriptedProvider provider(ScriptedProvider::Outputs{{s.bug_id, {"a", "b", "c", "d"}}}, "one-shot", false);
  const auto out = resolver.run_trial(s, prompt_for(s, st), provider, 3);
  EXPECT_EQ(out.size(), 3u);
  EXPECT_EQ(provider.calls(), 3);
  EXPECT_EQ(out[2].candidate_index, 2);
}

TEST_F(ResolverTest, TopOneIsPrefixOfTopN) {
  const auto& s = sample(4);
  const std::vector<std::string> texts = {
      "<patch>\n" + s.gold_fix + "</patch>", "no idea", "<patch>\n" + s.gold_fix + "</patch>"};
  std::vector<TrialOutcome> one, three;
  {
    MockStack st;
    Resolver resolver(st.cluster, {mk_->git_url});
    ScriptedProvider provider(ScriptedProvider::Outputs{{s.bug_id, texts}});
    one = resolver.run_trial(s, prompt_for(s, st), provider, 1);
  }
  {
    MockStack st;
    Resolver resolver(st.cluster, {mk_->git_url});
    ScriptedProvider provider(ScriptedProvider::Outputs{{s.bug_id, texts}});
    three = resolver.run_trial(s, prompt_for(s, st), provider, 3);
  }
  ASSERT_EQ(one.size(), 1u);
  ASSERT_EQ(three.size(), 3u);
  auto strip = [](TrialOutcome o) {
    o.job_ids.clear();
    o.candidates = 0;
    return o;
  };
  EXPECT_EQ(strip(one[0]), strip(three[0]));
}

TEST_F(ResolverTest, InfrastructureFailuresRetryThenQuarantine) {
  MockStack st;
  Resolver resolver(st.cluster, {mk_->git_url});
  auto s = sample(5);
  const auto p = prompt_for(s, st);
  s.commit_parent = std::string(40, 'f');
  ScriptedProvider provider(ScriptedProvider::Outputs{{s.bug_id, {"<patch>\n" + s.gold_fix + "</patch>"}}});
  const auto out = resolver.run_trial(s, p, provider, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].infrastructure);
  EXPECT_EQ(out[0].failure_stage, FailureStage::kInfrastructure);
  EXPECT_FALSE(out[0].applied);
  EXPECT_EQ(out[0].job_ids.size(), 3u);
}

TEST_F(ResolverTest, CampaignLogAndResume) {
  std::map<std::string, std::vector<std::string>> scripted;
  for (size_t i = 0; i < samples_->size(); ++i) {
    const auto& s = sample(i);
    if (i % 4 == 0)
      scripted[s.bug_id] = {"nothing", "<patch>\n" + s.gold_fix + "</patch>"};
    else
      scripted[s.bug_id] = {"nothing here"};
  }
  util::TempDir out("crashgym-camp");
  std::set<std::string> full_set;
  {
    MockStack st;
    Resolver resolver(st.cluster, {mk_->git_url});
    GitSourceView view(st.stack.git(), mk_->git_url);
    ScriptedProvider provider(scripted);
    CampaignConfig cfg;
    cfg.n = 2;
    cfg.log_path = out.path() / "full.jsonl";
    const auto summary = run_campaign(*samples_, view, provider, resolver, cfg);
    EXPECT_EQ(summary.samples, 20);
    EXPECT_EQ(summary.eligible + summary.skipped, 20);
    EXPECT_TRUE(summary.quarantined.empty());
    const auto log = load_outcomes(cfg.log_path);
    EXPECT_EQ(static_cast<int>(log.size()), summary.outcomes);
    std::set<std::string> jobs;
    for (const auto& o : log) {
      jobs.insert(o.job_ids.begin(), o.job_ids.end());
      full_set.insert(nlohmann::json(o).dump());
    }
    EXPECT_EQ(static_cast<int>(jobs.size()), summary.chains);
    EXPECT_EQ(summary.chains, 5);
    EXPECT_TRUE(fs::exists(out.path() / "full.jsonl.prompts.jsonl"));
  }

  // Interrupted run: keep a prefix of the log with a torn final record.
  const auto text = util::read_file(out.path() / "full.jsonl");
  const auto cut = text.find('\n', text.size() / 2);
  util::write_file(out.path() / "part.jsonl", text.substr(0, cut + 10));
  std::set<std::string> resumed_set;
  {
    MockStack st;
    Resolver resolver(st.cluster, {mk_->git_url});
    GitSourceView view(st.stack.git(), mk_->git_url);
    ScriptedProvider provider(scripted);
    CampaignConfig cfg;
    cfg.n = 2;
    cfg.log_path = out.path() / "part.jsonl";
    const auto summary = run_campaign(*samples_, view, provider, resolver, cfg);
    EXPECT_GT(summary.resumed, 0);
    for (const auto& o : load_outcomes(cfg.log_path)) {
      auto j = nlohmann::json(o);
      resumed_set.insert(j.dump());
    }
  }
  // Job ids differ between runs; compare everything else.
  auto strip = [](const std::set<std::string>& lines) {
    std::set<std::string> out;
    for (const auto& l : lines) {
      auto j = nlohmann::json::parse(l);
      j.erase("job_ids");
      out.insert(j.dump());
    }
    return out;
  };
  EXPECT_EQ(strip(resumed_set), strip(full_set));
}

TEST_F(ResolverTest, EmptyDatasetGivesEmptyLog) {
  MockStack st;
  Resolver resolver(st.cluster, {mk_->git_url});
  GitSourceView view(st.stack.git(), mk_->git_url);
  ScriptedProvider provider(ScriptedProvider::Outputs{});
  util::TempDir out("crashgym-empty");
  CampaignConfig cfg;
  cfg.log_path = out.path() / "log.jsonl";
  const auto summary = run_campaign({}, view, provider, resolver, cfg);
  EXPECT_EQ(summary.outcomes, 0);
  EXPECT_TRUE(fs::exists(cfg.log_path));
  EXPECT_EQ(util::read_file(cfg.log_path), "");
}

TEST(FixtureProvider, ReadsIndexedFiles) {
  util::TempDir dir("crashgym-fx");
  fs::create_directories(dir.path() / "bug-1");
  util::write_file(dir.path() / "bug-1" / "0.txt", "zero");
  util::write_file(dir.path() / "bug-1" / "1.txt", "one");
  util::write_file(dir.path() / "bug-1" / "3.txt", "three");
  FixtureProvider p(dir.path(), "m");
  EXPECT_EQ(p.complete({"bug-1", "", 10, 0}), (std::vector<std::string>{"zero", "one"}));
  EXPECT_EQ(p.complete({"bug-1", "", 1, 0}), (std::vector<std::string>{"zero"}));
  EXPECT_TRUE(p.complete({"bug-2", "", 10, 0}).empty());
  EXPECT_EQ(p.complete({"bug-1", "", 10, 0}), p.complete({"bug-1", "", 10, 0}));
  EXPECT_THROW(FixtureProvider(dir.path() / "missing"), InputNotFound);
}

TEST(Outcome, InvariantsEnforcedOnLoad) {
  TrialOutcome o;
  o.bug_id = "b";
  o.resolved = true;
  o.applied = true;
  o.extracted = false;
  EXPECT_THROW(nlohmann::json(o).get<TrialOutcome>(), ValidationError);
  o.extracted = true;
  EXPECT_NO_THROW(nlohmann::json(o).get<TrialOutcome>());
  o.failure_stage = FailureStage::kStillCrashes;
  EXPECT_THROW(nlohmann::json(o).get<TrialOutcome>(), ValidationError);
}

TEST(RecordedSources, FillerMatchesRecordedSize) {
  RecordedSourceView view(nlohmann::json{{"b1", {{"files", {{"a.c", 1000}}}, {"bm25", {"a.c"}}}}});
  model::BenchSample s;
  s.bug_id = "b1";
  EXPECT_EQ(view.read(s, "a.c")->size(), 1000u);
  EXPECT_FALSE(view.read(s, "z.c").has_value());
  EXPECT_EQ(view.retrieve(s, retrieval::Mode::kBm25).ranked_paths,
            (std::vector<std::string>{"a.c"}));
  EXPECT_EQ(filler_text(0), "");
}

}  // namespace
}  // namespace crashgym::resolve
