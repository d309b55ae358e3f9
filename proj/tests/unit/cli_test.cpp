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

#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "crashgym/model/sample.hpp"
#include "crashgym/util/fs.hpp"
#include "crashgym/util/process.hpp"

namespace crashgym {
namespace {

namespace fs = std::filesystem;

const fs::path kReference = fs::path(CRASHGYM_FIXTURE_DIR) / "reference";

class Cli : public ::testing::Test {
 protected:
  util::ProcessResult run(std::vector<std::string> args, std::string stdin_data = {}) {
    std::vector<std::string> argv = {CRASHGYM_CLI_PATH, "--home", (dir.path() / "home").string()};
    argv.insert(argv.end(), args.begin(), args.end());
    util::RunOptions options;
    options.cwd = dir.path();
    options.stdin_data = std::move(stdin_data);
    options.timeout = std::chrono::minutes(2);
    return util::run_process(argv, options);
  }

  nlohmann::json error_of(const util::ProcessResult& r) { return nlohmann::json::parse(r.err); }

  std::string path(const std::string& name) { return (dir.path() / name).string(); }

  // Mini kernel, curated dataset; returns the git url.
  std::string curated() {
    const auto mk = run({"mock", "minikernel", "--out", path("mk")});
    EXPECT_EQ(mk.exit_code, 0) << mk.err;
    const auto info = nlohmann::json::parse(mk.out);
    const auto url = info["git_url"].get<std::string>();
    const auto curate = run({"dataset", "curate", info["records"].get<std::string>(), "--git-url",
                             url, "--out", path("ds")});
    EXPECT_EQ(curate.exit_code, 0) << curate.err;
    const auto counts = nlohmann::json::parse(curate.out);
    EXPECT_EQ(counts["accepted"], 20);
    EXPECT_EQ(counts["rejected"], 3);
    return url;
  }

  util::TempDir dir{"crashgym-cli"};
};

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).exit_code, 0);
  const auto none = run({});
  EXPECT_EQ(none.exit_code, 2);
  EXPECT_EQ(error_of(none)["exit_code"], 2);
  EXPECT_EQ(run({"job", "status"}).exit_code, 2);
  EXPECT_EQ(run({"eval", "report", "--bogus"}).exit_code, 2);
}

TEST_F(Cli, ErrorKindsMapToExitCodes) {
  const auto unknown = run({"job", "status", "no-such-job"});
  EXPECT_EQ(unknown.exit_code, 2);
  EXPECT_EQ(error_of(unknown)["error"], "UnknownJob");
  EXPECT_TRUE(unknown.out.empty());

  const auto bad_spec = run({"job", "submit", "-"}, "{\"steps\": 3}");
  EXPECT_EQ(bad_spec.exit_code, 1);
  EXPECT_EQ(error_of(bad_spec)["error"], "ValidationError");

  EXPECT_EQ(run({"dataset", "report", path("missing.jsonl")}).exit_code, 2);
  EXPECT_EQ(run({"--backend", "cloud", "job", "list"}).exit_code, 1);
}

TEST_F(Cli, SubmitStatusAndLogs) {
  const auto url = curated();
  const auto sample = model::load_samples(path("ds/samples.jsonl")).front();
  const nlohmann::json spec = {
      {"steps",
       {{{"kind", "build"},
         {"params", {{"git_url", url}, {"commit_id", sample.commit_parent},
                     {"kernel_config", sample.config}}}},
        {{"kind", "reproduce"}, {"params", {{"reproducer", sample.reproducer}}}}}}};

  const auto submitted = run({"--embedded", "job", "submit", "-"}, spec.dump());
  ASSERT_EQ(submitted.exit_code, 0) << submitted.err;
  const std::string id = submitted.out.substr(0, submitted.out.find('\n'));

  const auto status = run({"job", "status", id});
  ASSERT_EQ(status.exit_code, 0);
  const auto job = nlohmann::json::parse(status.out);
  EXPECT_EQ(job["status"], "Succeeded");
  ASSERT_EQ(job["steps"].size(), 2u);
  EXPECT_EQ(job["steps"][0]["status"], "Succeeded");
  EXPECT_EQ(job["steps"][1]["status"], "Succeeded");
  EXPECT_TRUE(job["steps"][1]["result"]["output"]["crashed"].get<bool>());

  const auto image = run({"job", "logs", id, "--step", "0"});
  EXPECT_EQ(image.exit_code, 0);
  EXPECT_FALSE(image.out.empty());
  EXPECT_EQ(run({"job", "logs", id, "--step", "7"}).exit_code, 2);
}

TEST_F(Cli, QueuedJobRunsOnDrain) {
  const auto url = curated();
  const auto sample = model::load_samples(path("ds/samples.jsonl")).front();
  const nlohmann::json spec = {
      {"steps",
       {{{"kind", "build"},
         {"params", {{"git_url", url}, {"commit_id", sample.commit_parent},
                     {"kernel_config", sample.config}}}}}}};
  const auto submitted = run({"job", "submit", "-"}, spec.dump());
  ASSERT_EQ(submitted.exit_code, 0);
  const std::string id = submitted.out.substr(0, submitted.out.find('\n'));
  EXPECT_EQ(nlohmann::json::parse(run({"job", "status", id}).out)["status"], "Queued");

  const auto drained = run({"worker", "drain"});
  ASSERT_EQ(drained.exit_code, 0) << drained.err;
  EXPECT_EQ(nlohmann::json::parse(drained.out)["recovered"], 1);
  EXPECT_EQ(nlohmann::json::parse(run({"job", "status", id}).out)["status"], "Succeeded");
}

TEST_F(Cli, GoldCampaignSolvesEverything) {
  const auto url = curated();
  const auto campaign = run({"resolve", "campaign", "--dataset", path("ds/samples.jsonl"),
                             "--provider", "gold", "--sources", "git:" + url, "--n", "1", "--log",
                             path("gold.jsonl")});
  ASSERT_EQ(campaign.exit_code, 0) << campaign.err;
  EXPECT_EQ(nlohmann::json::parse(campaign.out)["outcomes"], 20);

  const auto report = run({"eval", "report", "--log", path("gold.jsonl"), "--dataset",
                           path("ds/samples.jsonl"), "--format", "json", "--out", path("rep")});
  ASSERT_EQ(report.exit_code, 0) << report.err;
  const auto j = nlohmann::json::parse(report.out);
  EXPECT_EQ(j["union"]["unique_solved"], 20);
  EXPECT_DOUBLE_EQ(j["rates"][0]["solve_pct"].get<double>(), 100.0);
  for (const char* file : {"rates.csv", "report.json", "union.csv", "localization.csv", "partial.csv"})
    EXPECT_TRUE(fs::exists(dir.path() / "rep" / file)) << file;
}

TEST_F(Cli, MissingProviderDirectory) {
  curated();
  const auto r = run({"resolve", "campaign", "--dataset", path("ds/samples.jsonl"), "--provider",
                      "fixture:" + path("nowhere"), "--sources",
                      "recorded:" + (kReference / "sources.json").string(), "--log",
                      path("x.jsonl")});
  EXPECT_EQ(r.exit_code, 2) << r.err;
}

TEST_F(Cli, ReportOverReferenceLogs) {
  const auto r = run({"eval", "report", "--log", (kReference / "outcomes/gpt-4-turbo.oracle.jsonl").string(),
                      "--dataset", (kReference / "samples.jsonl").string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("gpt-4-turbo,oracle,1,56,3,20.07,1.08"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("gpt-4-turbo,oracle,10,159,15,56.99,5.38"), std::string::npos);

  std::vector<std::string> args = {"eval", "report", "--dataset-size", "279", "--union"};
  for (const auto& e : fs::directory_iterator(kReference / "outcomes")) {
    args.push_back("--log");
    args.push_back(e.path().string());
  }
  const auto u = run(args);
  ASSERT_EQ(u.exit_code, 0) << u.err;
  EXPECT_NE(u.out.find("29,36,10.39"), std::string::npos) << u.out;
}

TEST_F(Cli, EmptyLogGivesZeroRates) {
  util::write_file(path("empty.jsonl"), "");
  const auto r = run({"eval", "report", "--log", path("empty.jsonl"), "--dataset-size", "10",
                      "--union"});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("0,0,0.00"), std::string::npos);
}

TEST_F(Cli, RecallAndCrashFixOverReference) {
  const auto sources = "recorded:" + (kReference / "sources.json").string();
  const auto samples = (kReference / "samples.jsonl").string();
  const auto recall = run({"eval", "recall", "--dataset", samples, "--sources", sources,
                           "--budget", "16000"});
  ASSERT_EQ(recall.exit_code, 0) << recall.err;
  EXPECT_NE(recall.out.find("1.76"), std::string::npos) << recall.out;
  EXPECT_NE(recall.out.find("9.69"), std::string::npos);

  const auto crash = run({"eval", "crash-fix", "--dataset", samples, "--sources", sources,
                          "--budget", "50000", "--setting", "bm25"});
  ASSERT_EQ(crash.exit_code, 0) << crash.err;
  EXPECT_NE(crash.out.find("bm25-50K,275,75,45,155"), std::string::npos) << crash.out;
}

TEST_F(Cli, DatasetReport) {
  const auto r = run({"dataset", "report", (kReference / "samples.jsonl").string()});
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["samples"], 279);
}

}  // namespace
}  // namespace crashgym
