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

// Crash-resolution trials: candidate patches from a completion provider,
// each built on the parent commit and run against the reproducer.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crashgym/build/git_cache.hpp"
#include "crashgym/model/sample.hpp"
#include "crashgym/orch/cluster.hpp"
#include "crashgym/prompt/assembler.hpp"
#include "crashgym/repro/reproducer.hpp"
#include "crashgym/retrieval/bm25.hpp"

namespace crashgym::resolve {

namespace fs = std::filesystem;

struct CompletionRequest {
  std::string bug_id;
  std::string prompt;
  int n = 1;
  // Index of the first requested candidate; non-zero only when a provider
  // without multi-output support is called once per candidate.
  int first_index = 0;
};

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  // At most request.n outputs. Throws ProviderError.
  virtual std::vector<std::string> complete(const CompletionRequest& request) = 0;
  // False when every call yields a single output.
  virtual bool supports_multiple() const { return true; }
  virtual std::string name() const = 0;
};

// Replays `<dir>/<bug_id>/<candidate_index>.txt`, stopping at the first
// missing index. Throws InputNotFound when `dir` is not a directory.
class FixtureProvider : public CompletionProvider {
 public:
  explicit FixtureProvider(fs::path dir, std::string model = "fixture");
  std::vector<std::string> complete(const CompletionRequest& request) override;
  std::string name() const override { return model_; }

 private:
  fs::path dir_;
  std::string model_;
};

class ScriptedProvider : public CompletionProvider {
 public:
  using Script = std::function<std::vector<std::string>(const CompletionRequest&)>;
  using Outputs = std::map<std::string, std::vector<std::string>>;
  ScriptedProvider(Script script, std::string model = "scripted", bool multiple = true);
  // Fixed outputs per bug id; bugs without an entry get none.
  explicit ScriptedProvider(Outputs outputs,
                            std::string model = "scripted", bool multiple = true);

  std::vector<std::string> complete(const CompletionRequest& request) override;
  bool supports_multiple() const override { return multiple_; }
  std::string name() const override { return model_; }
  int calls() const { return calls_; }

 private:
  Script script_;
  std::string model_;
  bool multiple_;
  int calls_ = 0;
};

// One call for n outputs, or n single-output calls.
std::vector<std::string> request_candidates(CompletionProvider& provider,
                                            const std::string& bug_id,
                                            const std::string& prompt, int n);

enum class FailureStage { kNoPatch, kMalformed, kHunkMismatch, kCompileError, kStillCrashes,
                          kInfrastructure };

std::string to_string(FailureStage stage);
FailureStage failure_stage_from_string(const std::string& s);

struct TrialOutcome {
  std::string bug_id;
  std::string model;
  std::string setting;
  int candidate_index = 0;
  // Size of the candidate group this outcome belongs to.
  int candidates = 0;
  bool extracted = false;
  // Parsed, applied and compiled.
  bool applied = false;
  bool resolved = false;
  std::optional<FailureStage> failure_stage;
  // Set for orchestrator failures, which metrics ignore.
  bool infrastructure = false;
  std::vector<std::string> job_ids;
  // Normalized diff text; empty when nothing was extracted.
  std::string candidate_patch;
  std::uint64_t seed = 0;
  std::string detail;

  friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

void to_json(nlohmann::json& j, const TrialOutcome& o);
void from_json(const nlohmann::json& j, TrialOutcome& o);

// Throws InputNotFound. A truncated final line is ignored.
std::vector<TrialOutcome> load_outcomes(const fs::path& path);
std::string outcome_lines(const std::vector<TrialOutcome>& outcomes);

struct TrialConfig {
  std::string git_url;
  int timeout_minutes = 10;
  int vm_count = 1;
  std::uint64_t seed = 0;
  int infra_retries = 2;
  int max_inflight = 16;
};

class Resolver {
 public:
  Resolver(orch::LocalCluster& cluster, TrialConfig config);

  // Candidates are evaluated independently; identical normalized diffs
  // share one job chain. Throws ProviderError.
  std::vector<TrialOutcome> run_trial(const model::BenchSample& sample,
                                      const prompt::AssembledPrompt& prompt,
                                      CompletionProvider& provider, int n);

  // Rebuilds and reruns a recorded candidate with its seed.
  repro::ReproduceResult replay(const model::BenchSample& sample, const TrialOutcome& outcome);

  int chains_submitted() const { return chains_; }
  const TrialConfig& config() const { return config_; }

 private:
  std::vector<orch::StepSpec> chain(const model::BenchSample& sample, const std::string& patch,
                                    std::uint64_t seed) const;

  orch::LocalCluster& cluster_;
  TrialConfig config_;
  int chains_ = 0;
};

// Where a campaign finds retrieval rankings and file text.
class SourceView {
 public:
  virtual ~SourceView() = default;
  virtual retrieval::RetrievalResult retrieve(const model::BenchSample& sample,
                                              retrieval::Mode mode) = 0;
  virtual std::optional<std::string> read(const model::BenchSample& sample,
                                          const std::string& path) = 0;
};

// Files at the sample's parent commit; BM25 queries with the crash report.
class GitSourceView : public SourceView {
 public:
  GitSourceView(build::GitCache& cache, std::string git_url)
      : cache_(cache), url_(std::move(git_url)) {}
  retrieval::RetrievalResult retrieve(const model::BenchSample& sample,
                                      retrieval::Mode mode) override;
  std::optional<std::string> read(const model::BenchSample& sample,
                                  const std::string& path) override;

 private:
  const retrieval::FileCorpus& corpus(const std::string& commit);

  build::GitCache& cache_;
  std::string url_;
  std::map<std::string, retrieval::FileCorpus> corpora_;
};

// Recorded file sizes and rankings for samples whose trees are not
// available: {"<bug_id>": {"files": {"<path>": bytes}, "bm25": [paths]}}.
// read() returns filler text of the recorded size.
class RecordedSourceView : public SourceView {
 public:
  explicit RecordedSourceView(const fs::path& path);
  explicit RecordedSourceView(nlohmann::json data) : data_(std::move(data)) {}
  retrieval::RetrievalResult retrieve(const model::BenchSample& sample,
                                      retrieval::Mode mode) override;
  std::optional<std::string> read(const model::BenchSample& sample,
                                  const std::string& path) override;

 private:
  nlohmann::json data_;
};

std::string filler_text(size_t bytes);

// Ids of the samples whose prompt assembles within `budget`, in dataset
// order.
std::vector<std::string> eligible_bug_ids(const std::vector<model::BenchSample>& dataset,
                                          SourceView& sources, retrieval::Mode mode,
                                          const prompt::PromptBudget& budget);

struct CampaignConfig {
  retrieval::Mode setting = retrieval::Mode::kOracle;
  prompt::PromptBudget budget;
  int n = 10;
  fs::path log_path;
  // Defaults to "<log_path>.prompts.jsonl".
  fs::path prompts_path;
};

struct CampaignSummary {
  int samples = 0;
  int eligible = 0;
  int skipped = 0;
  // Bugs whose outcomes were already in the log.
  int resumed = 0;
  int outcomes = 0;
  int chains = 0;
  std::vector<std::string> quarantined;
};

nlohmann::json to_json(const CampaignSummary& s);

// Appends one line per outcome, a bug's group in a single write. Groups a
// previous run left incomplete are dropped and rerun.
CampaignSummary run_campaign(const std::vector<model::BenchSample>& dataset, SourceView& sources,
                             CompletionProvider& provider, Resolver& resolver,
                             const CampaignConfig& config);

}  // namespace crashgym::resolve
