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

#include "crashgym/curate/curator.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "crashgym/build/builder.hpp"
#include "crashgym/errors.hpp"
#include "crashgym/repro/reproducer.hpp"
#include "crashgym/util/fs.hpp"
#include "crashgym/util/hash.hpp"
#include "crashgym/util/text.hpp"

namespace crashgym::curate {
namespace {

constexpr const char* kChecks[] = {"bug", "parent", "fix"};

}  // namespace

void to_json(nlohmann::json& j, const RawBugRecord& r) {
  j = {{"bug_id", r.bug_id},
       {"commit_bug", r.commit_bug},
       {"commit_fix", r.commit_fix},
       {"config", r.config},
       {"reproducer", r.reproducer},
       {"gold_fix", r.gold_fix},
       {"metadata", {{"subsystem", r.subsystem}, {"year", r.year}, {"kernel_version", r.kernel_version}}},
       {"email_refs", r.email_refs}};
  j["bisect"] = r.bisect ? nlohmann::json(*r.bisect) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, RawBugRecord& r) {
  for (const char* key : {"bug_id", "commit_bug", "commit_fix", "reproducer", "gold_fix"})
    if (!j.contains(key)) throw ValidationError(std::string("raw record lacks ") + key);
  r.bug_id = j.at("bug_id").get<std::string>();
  r.commit_bug = j.at("commit_bug").get<std::string>();
  r.commit_fix = j.at("commit_fix").get<std::string>();
  r.config = j.value("config", "");
  r.reproducer = j.at("reproducer").get<model::Reproducer>();
  r.gold_fix = j.at("gold_fix").get<std::string>();
  const auto meta = j.value("metadata", nlohmann::json::object());
  r.subsystem = meta.value("subsystem", "");
  r.year = meta.value("year", 0);
  r.kernel_version = meta.value("kernel_version", "");
  r.bisect.reset();
  if (j.contains("bisect") && !j["bisect"].is_null()) r.bisect = j["bisect"].get<std::string>();
  r.email_refs = j.value("email_refs", std::vector<std::string>{});
}

std::vector<RawBugRecord> load_raw_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputNotFound("cannot open " + path);
  std::vector<RawBugRecord> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (util::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<RawBugRecord>());
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void save_raw_records(const std::string& path, const std::vector<RawBugRecord>& records) {
  std::string text;
  for (const auto& r : records) text += nlohmann::json(r).dump() + "\n";
  util::write_file_atomic(path, text);
}

std::vector<std::string> GitCommitGraph::parents(const std::string& commit) {
  return cache_.parents(url_, commit);
}

std::vector<std::string> MemoryCommitGraph::parents(const std::string& commit) {
  auto it = parents_.find(commit);
  if (it == parents_.end()) throw UnknownCommit(commit);
  return it->second;
}

std::string resolve_parent_commit(const std::string& commit_fix, CommitGraph& graph) {
  const auto ps = graph.parents(commit_fix);
  if (ps.empty()) throw RootCommit(commit_fix + " has no parent");
  return ps.front();
}

void to_json(nlohmann::json& j, const ValidationVerdict& v) {
  j = {{"check1_bug_crashes", v.check1_bug_crashes},
       {"check2_parent_crashes", v.check2_parent_crashes},
       {"check3_fix_clean", v.check3_fix_clean},
       {"accepted", v.accepted},
       {"evidence", v.evidence}};
}

Curator::Curator(orch::LocalCluster& cluster, CommitGraph& graph, CurationConfig config)
    : cluster_(cluster), graph_(graph), config_(std::move(config)) {}

Curator::Pending Curator::submit(const RawBugRecord& raw) {
  Pending p;
  p.parent = resolve_parent_commit(raw.commit_fix, graph_);
  const std::map<std::string, std::string> commits = {
      {"bug", raw.commit_bug}, {"parent", p.parent}, {"fix", raw.commit_fix}};
  for (const char* check : kChecks) {
    build::BuildSpec b;
    b.git_url = config_.git_url;
    b.commit_id = commits.at(check);
    b.kernel_config = raw.config;
    repro::ReproduceSpec r;
    r.reproducer = raw.reproducer;
    r.timeout_minutes = config_.timeout_minutes;
    r.seed = util::stable_seed({raw.bug_id, check, std::to_string(config_.seed)});
    const bool replicate = std::string(check) != "fix";
    r.vm_count = replicate ? config_.parallel_vms : 1;
    nlohmann::json rp = r;
    rp.erase("image");
    p.jobs[check] = cluster_.scheduler().submit_job(
        {{orch::StepKind::kBuild, b},
         {replicate ? orch::StepKind::kParallelReproduce : orch::StepKind::kReproduce, rp}});
  }
  return p;
}

Curated Curator::finish(const RawBugRecord& raw, const Pending& pending) {
  Curated c;
  c.bug_id = raw.bug_id;
  c.verdict.evidence = pending.jobs;
  std::map<std::string, repro::ReproduceResult> runs;
  for (const char* check : kChecks) {
    const auto job = cluster_.await_job(pending.jobs.at(check));
    if (job.status != orch::JobStatus::kSucceeded) {
      std::string why = std::string(check) + " check did not complete";
      for (const auto& s : job.steps)
        if (s.result && !s.result->ok) why = std::string(check) + ": " + s.result->error + " " + s.result->message;
      c.quarantined = true;
      c.reason = why;
      return c;
    }
    runs[check] = job.steps.back().result->output.get<repro::ReproduceResult>();
  }
  c.verdict.check1_bug_crashes = runs["bug"].crashed;
  c.verdict.check2_parent_crashes = runs["parent"].crashed;
  c.verdict.check3_fix_clean = !runs["fix"].crashed;
  c.verdict.accepted =
      c.verdict.check1_bug_crashes && c.verdict.check2_parent_crashes && c.verdict.check3_fix_clean;
  if (c.verdict.accepted) {
    model::BenchSample s;
    s.bug_id = raw.bug_id;
    s.commit_bug = raw.commit_bug;
    s.config = raw.config;
    s.reproducer = raw.reproducer;
    s.commit_fix = raw.commit_fix;
    s.commit_parent = pending.parent;
    s.crash_parent = *runs["parent"].crash;
    s.gold_fix = raw.gold_fix;
    s.bisect = raw.bisect;
    s.email_refs = raw.email_refs;
    s.subsystem = raw.subsystem;
    s.kernel_version = raw.kernel_version;
    s.fix_year = raw.year;
    c.sample = std::move(s);
  }
  return c;
}

Curated Curator::validate_sample(const RawBugRecord& raw) {
  auto c = finish(raw, submit(raw));
  if (c.quarantined) throw InfrastructureError(raw.bug_id + ": " + *c.reason);
  return c;
}

DatasetResult Curator::build_dataset(const std::vector<RawBugRecord>& raws) {
  std::vector<RawBugRecord> sorted = raws;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.bug_id < b.bug_id; });
  std::vector<std::optional<Pending>> pending;
  std::vector<std::optional<std::string>> early;
  for (const auto& raw : sorted) {
    try {
      pending.push_back(submit(raw));
      early.emplace_back();
    } catch (const Error& e) {
      pending.emplace_back();
      early.push_back(e.code() + ": " + e.what());
    }
  }
  DatasetResult out;
  for (size_t i = 0; i < sorted.size(); ++i) {
    Curated c;
    if (pending[i]) {
      c = finish(sorted[i], *pending[i]);
    } else {
      c.bug_id = sorted[i].bug_id;
      c.reason = early[i];
    }
    if (c.quarantined)
      out.quarantined.push_back(std::move(c));
    else if (c.sample)
      out.samples.push_back(*c.sample);
    else
      out.rejected.push_back(std::move(c));
  }
  out.report = model::distribution(out.samples);
  return out;
}

nlohmann::json report_json(const DatasetResult& result) {
  nlohmann::json j = model::to_json(result.report);
  j["accepted"] = result.samples.size();
  auto list = [](const std::vector<Curated>& cs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& c : cs) {
      nlohmann::json e = {{"bug_id", c.bug_id}, {"verdict", c.verdict}};
      if (c.reason) e["reason"] = *c.reason;
      a.push_back(std::move(e));
    }
    return a;
  };
  j["rejected"] = list(result.rejected);
  j["quarantined"] = list(result.quarantined);
  return j;
}

void write_dataset(const std::string& dir, const DatasetResult& result) {
  std::filesystem::create_directories(dir);
  model::save_samples((std::filesystem::path(dir) / "samples.jsonl").string(), result.samples);
  util::write_file_atomic(std::filesystem::path(dir) / "report.json", report_json(result).dump(2) + "\n");
}

}  // namespace crashgym::curate
