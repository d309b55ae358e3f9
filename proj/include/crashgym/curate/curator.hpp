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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crashgym/build/git_cache.hpp"
#include "crashgym/model/sample.hpp"
#include "crashgym/orch/cluster.hpp"

namespace crashgym::curate {

struct RawBugRecord {
  std::string bug_id;
  std::string commit_bug;
  std::string commit_fix;
  std::string config;
  model::Reproducer reproducer;
  std::string gold_fix;
  std::string subsystem;
  int year = 0;
  std::string kernel_version;
  std::optional<std::string> bisect;
  std::vector<std::string> email_refs;

  friend bool operator==(const RawBugRecord&, const RawBugRecord&) = default;
};

void to_json(nlohmann::json& j, const RawBugRecord& r);
void from_json(const nlohmann::json& j, RawBugRecord& r);
std::vector<RawBugRecord> load_raw_records(const std::string& path);
void save_raw_records(const std::string& path, const std::vector<RawBugRecord>& records);

class CommitGraph {
 public:
  virtual ~CommitGraph() = default;
  // Parents in order. Throws UnknownCommit.
  virtual std::vector<std::string> parents(const std::string& commit) = 0;
};

class GitCommitGraph : public CommitGraph {
 public:
  GitCommitGraph(build::GitCache& cache, std::string git_url)
      : cache_(cache), url_(std::move(git_url)) {}
  std::vector<std::string> parents(const std::string& commit) override;

 private:
  build::GitCache& cache_;
  std::string url_;
};

class MemoryCommitGraph : public CommitGraph {
 public:
  explicit MemoryCommitGraph(std::map<std::string, std::vector<std::string>> parents)
      : parents_(std::move(parents)) {}
  std::vector<std::string> parents(const std::string& commit) override;

 private:
  std::map<std::string, std::vector<std::string>> parents_;
};

// First parent. Throws RootCommit or UnknownCommit.
std::string resolve_parent_commit(const std::string& commit_fix, CommitGraph& graph);

struct ValidationVerdict {
  bool check1_bug_crashes = false;
  bool check2_parent_crashes = false;
  bool check3_fix_clean = false;
  bool accepted = false;
  // "bug" / "parent" / "fix" -> job id
  std::map<std::string, std::string> evidence;
};

void to_json(nlohmann::json& j, const ValidationVerdict& v);

struct CurationConfig {
  std::string git_url;
  // VMs for checks 1 and 2; check 3 is a single run.
  int parallel_vms = 4;
  int timeout_minutes = 10;
  std::uint64_t seed = 0;
};

struct Curated {
  std::string bug_id;
  ValidationVerdict verdict;
  std::optional<model::BenchSample> sample;
  // Why the record was quarantined, or rejected before any check ran.
  std::optional<std::string> reason;
  bool quarantined = false;
};

struct DatasetResult {
  std::vector<model::BenchSample> samples;
  std::vector<Curated> rejected;
  std::vector<Curated> quarantined;
  model::DistributionReport report;
};

nlohmann::json report_json(const DatasetResult& result);
// samples.jsonl and report.json under `dir`.
void write_dataset(const std::string& dir, const DatasetResult& result);

class Curator {
 public:
  Curator(orch::LocalCluster& cluster, CommitGraph& graph, CurationConfig config);

  // Throws InfrastructureError when a build or boot failure voids a check.
  Curated validate_sample(const RawBugRecord& raw);

  // Submits every record's checks before waiting on any of them.
  DatasetResult build_dataset(const std::vector<RawBugRecord>& raws);

 private:
  struct Pending {
    std::string parent;
    std::map<std::string, std::string> jobs;
  };
  Pending submit(const RawBugRecord& raw);
  Curated finish(const RawBugRecord& raw, const Pending& pending);

  orch::LocalCluster& cluster_;
  CommitGraph& graph_;
  CurationConfig config_;
};

}  // namespace crashgym::curate
